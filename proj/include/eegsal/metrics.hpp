#ifndef EEGSAL_METRICS_HPP
#define EEGSAL_METRICS_HPP

#include <functional>
#include <map>

#include "eegsal/saliency.hpp"
#include "eegsal/tensor.hpp"

#include "json.hpp"

namespace eegsal {

// One-pass Pearson correlation; throws on zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Correlation of flattened pixels after both images are resized to the
// evaluation resolution (64x64).
double pixcorr(const Tensor& a, const Tensor& b);
inline constexpr int kEvalHW = 64;

// Structural similarity: 11x11 gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=1, mean over valid windows and channels. Images as given (no resize).
double ssim(const Tensor& a, const Tensor& b);

// For each (i, j != i): 1 if recon_i is strictly closer to gt_i than to gt_j,
// 0.5 on ties; averaged exhaustively. distance: "cosine" | "correlation".
double two_way_identification(const std::vector<std::vector<double>>& recon,
                              const std::vector<std::vector<double>>& gt,
                              const std::string& distance);

// Mean correlation distance (1 - Pearson) over paired feature vectors.
double swav_distance(const std::vector<std::vector<double>>& recon,
                     const std::vector<std::vector<double>>& gt);

double saliency_cc(const SaliencyMap& p, const SaliencyMap& q);
// KL(gt || pred), both sum1-normalized with the shared epsilon, natural log
double saliency_kl(const SaliencyMap& gt, const SaliencyMap& pred);
// histogram intersection after sum1 normalization
double saliency_sim(const SaliencyMap& p, const SaliencyMap& q);

// Pluggable feature extractor; `extract` may read precomputed vectors by
// stimulus id instead of touching the image.
struct FeatureExtractor {
    std::string name;
    std::function<std::vector<double>(const Tensor& image, const std::string& id)> extract;
    bool deterministic = true;
};

// Built-in deterministic stand-in: fixed-seed random-projection conv stack.
FeatureExtractor toy_extractor(const std::string& name, uint64_t seed, int dim = 64);
// Reads `dir/{id}.f32` little-endian float32 vectors.
FeatureExtractor file_extractor(const std::string& name, const std::string& dir);

struct MetricReport {
    double pixcorr = 0.0;
    double ssim = 0.0;
    std::map<std::string, double> two_way;  // extractor name -> accuracy
    double swav_distance = 0.0;
    double saliency_cc = 0.0;
    double saliency_kl = 0.0;
    double saliency_sim = 0.0;
    int n_samples = 0;
    nlohmann::json config;
    nlohmann::json missing;  // per-sample metric failures, recorded not fatal
};

nlohmann::json report_to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

// Full protocol over aligned lists. Saliency metrics compare the fallback
// predictor's map of each reconstruction against the ground-truth map.
MetricReport evaluate_run(const std::vector<Tensor>& recons, const std::vector<Tensor>& gts,
                          const std::vector<SaliencyMap>& gt_sal,
                          const std::vector<std::string>& ids,
                          const std::vector<FeatureExtractor>& extractors);

// Side-by-side sheet: one row per sample, GT | recon | GT saliency | recon
// saliency, written as one PNG.
void write_grid_sheet(const std::string& path, const std::vector<Tensor>& gts,
                      const std::vector<Tensor>& recons, const std::vector<SaliencyMap>& gt_sal,
                      const std::vector<SaliencyMap>& recon_sal);

}  // namespace eegsal

#endif
