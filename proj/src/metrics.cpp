#include "eegsal/metrics.hpp"

#include <fstream>

#include "eegsal/image_io.hpp"
#include "eegsal/kernels.hpp"
#include "eegsal/rng.hpp"

namespace eegsal {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("pearson: length mismatch or empty");
    double n = (double)a.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw std::runtime_error("pearson: zero variance input");
    return sab / std::sqrt(saa * sbb);
}

double pixcorr(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 3 || b.shape.size() != 3 || a.shape[0] != b.shape[0])
        throw std::invalid_argument("pixcorr: expected [C,H,W] images with equal channels");
    Tensor ra = resize_image(a, kEvalHW, kEvalHW);
    Tensor rb = resize_image(b, kEvalHW, kEvalHW);
    return pearson(ra.v, rb.v);
}

static std::vector<double> gaussian_window(int w, double sigma) {
    std::vector<double> g((size_t)(w * w));
    int c = w / 2;
    double sum = 0;
    for (int y = 0; y < w; ++y)
        for (int x = 0; x < w; ++x) {
            double d2 = (double)((y - c) * (y - c) + (x - c) * (x - c));
            double v = std::exp(-d2 / (2.0 * sigma * sigma));
            g[(size_t)(y * w + x)] = v;
            sum += v;
        }
    for (auto& v : g) v /= sum;
    return g;
}

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b) || a.shape.size() != 3)
        throw std::invalid_argument("ssim: expected matching [C,H,W] images");
    const int win = 11;
    const double sigma = 1.5, K1 = 0.01, K2 = 0.03, L = 1.0;
    int C = a.shape[0], H = a.shape[1], W = a.shape[2];
    if (H < win || W < win) throw std::invalid_argument("ssim: image smaller than the window");
    const double C1 = (K1 * L) * (K1 * L), C2 = (K2 * L) * (K2 * L);
    static const std::vector<double> g = gaussian_window(win, sigma);
    double total = 0;
    int64_t count = 0;
    for (int c = 0; c < C; ++c)
        for (int y = 0; y + win <= H; ++y)
            for (int x = 0; x + win <= W; ++x) {
                double mu_a = 0, mu_b = 0;
                for (int dy = 0; dy < win; ++dy)
                    for (int dx = 0; dx < win; ++dx) {
                        double wgt = g[(size_t)(dy * win + dx)];
                        mu_a += wgt * a.at3(c, y + dy, x + dx);
                        mu_b += wgt * b.at3(c, y + dy, x + dx);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int dy = 0; dy < win; ++dy)
                    for (int dx = 0; dx < win; ++dx) {
                        double wgt = g[(size_t)(dy * win + dx)];
                        double da = a.at3(c, y + dy, x + dx) - mu_a;
                        double db = b.at3(c, y + dy, x + dx) - mu_b;
                        va += wgt * da * da;
                        vb += wgt * db * db;
                        cov += wgt * da * db;
                    }
                double num = (2 * mu_a * mu_b + C1) * (2 * cov + C2);
                double den = (mu_a * mu_a + mu_b * mu_b + C1) * (va + vb + C2);
                total += num / den;
                count++;
            }
    return total / (double)count;
}

static double feat_distance(const std::vector<double>& a, const std::vector<double>& b,
                            const std::string& kind, size_t sample) {
    if (kind == "cosine") {
        double na = 0, nb = 0, d = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            na += a[i] * a[i];
            nb += b[i] * b[i];
            d += a[i] * b[i];
        }
        if (na == 0.0 || nb == 0.0)
            throw std::runtime_error("two-way: zero-norm feature vector at sample " +
                                     std::to_string(sample));
        return 1.0 - d / std::sqrt(na * nb);
    }
    if (kind == "correlation") return 1.0 - pearson(a, b);
    throw std::invalid_argument("two-way: unknown distance " + kind);
}

double two_way_identification(const std::vector<std::vector<double>>& recon,
                              const std::vector<std::vector<double>>& gt,
                              const std::string& distance) {
    size_t N = recon.size();
    if (N != gt.size() || N < 2) throw std::invalid_argument("two-way: need N >= 2 aligned rows");
    for (size_t i = 0; i < N; ++i)
        if (recon[i].size() != gt[i].size() || recon[i].size() != recon[0].size())
            throw std::invalid_argument("two-way: feature width mismatch");
    double score = 0;
    int64_t pairs = 0;
    for (size_t i = 0; i < N; ++i) {
        double d_true = feat_distance(recon[i], gt[i], distance, i);
        for (size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            double d_other = feat_distance(recon[i], gt[j], distance, j);
            if (d_true < d_other)
                score += 1.0;
            else if (d_true == d_other)
                score += 0.5;
            pairs++;
        }
    }
    return score / (double)pairs;
}

double swav_distance(const std::vector<std::vector<double>>& recon,
                     const std::vector<std::vector<double>>& gt) {
    if (recon.size() != gt.size() || recon.empty())
        throw std::invalid_argument("swav: aligned non-empty lists required");
    double total = 0;
    for (size_t i = 0; i < recon.size(); ++i) total += 1.0 - pearson(recon[i], gt[i]);
    return total / (double)recon.size();
}

double saliency_cc(const SaliencyMap& p, const SaliencyMap& q) {
    if (!p.data.same_shape(q.data)) throw std::invalid_argument("saliency_cc: dim mismatch");
    return pearson(p.data.v, q.data.v);
}

double saliency_kl(const SaliencyMap& gt, const SaliencyMap& pred) {
    if (!gt.data.same_shape(pred.data)) throw std::invalid_argument("saliency_kl: dim mismatch");
    SaliencyMap g = normalize(gt, SalNorm::sum1);
    SaliencyMap p = normalize(pred, SalNorm::sum1);
    double kl = 0;
    for (size_t i = 0; i < g.data.v.size(); ++i)
        kl += g.data.v[i] * std::log(g.data.v[i] / p.data.v[i]);
    return kl;
}

double saliency_sim(const SaliencyMap& p, const SaliencyMap& q) {
    if (!p.data.same_shape(q.data)) throw std::invalid_argument("saliency_sim: dim mismatch");
    SaliencyMap a = normalize(p, SalNorm::sum1);
    SaliencyMap b = normalize(q, SalNorm::sum1);
    double s = 0;
    for (size_t i = 0; i < a.data.v.size(); ++i) s += std::min(a.data.v[i], b.data.v[i]);
    return s;
}

// ---------------------------------------------------------------- extractors

FeatureExtractor toy_extractor(const std::string& name, uint64_t seed, int dim) {
    if (dim < 1) throw std::invalid_argument("toy extractor: dim must be >= 1");
    const int hw = 16, ch = 8;
    Rng rng(seed, 60);
    auto w1 = std::make_shared<Tensor>(Tensor({ch, 3, 3, 3}));
    for (auto& v : w1->v) v = rng.normal() / std::sqrt(27.0);
    int fdim = ch * (hw / 2) * (hw / 2);
    auto proj = std::make_shared<Tensor>(Tensor({dim, fdim}));
    for (auto& v : proj->v) v = rng.normal() / std::sqrt((double)fdim);
    FeatureExtractor fe;
    fe.name = name;
    fe.deterministic = true;
    fe.extract = [w1, proj, dim, fdim](const Tensor& image, const std::string&) {
        Tensor small = resize_image(image, hw, hw);
        int oh = kernels::conv_out_dim(hw, 3, 2, 1);
        Tensor h({ch, oh, oh});
        kernels::conv2d(3, hw, hw, ch, 3, 3, 2, 1, small.v.data(), w1->v.data(), nullptr,
                        h.v.data());
        for (auto& v : h.v) v = std::tanh(v);
        std::vector<double> out((size_t)dim, 0.0);
        for (int o = 0; o < dim; ++o) {
            double s = 0;
            for (int i = 0; i < fdim; ++i) s += proj->v[(size_t)(o * fdim + i)] * h.v[(size_t)i];
            out[(size_t)o] = s;
        }
        return out;
    };
    return fe;
}

FeatureExtractor file_extractor(const std::string& name, const std::string& dir) {
    FeatureExtractor fe;
    fe.name = name;
    fe.deterministic = true;
    fe.extract = [dir, name](const Tensor&, const std::string& id) {
        std::string path = dir + "/" + id + ".f32";
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        if (!f)
            throw std::runtime_error("extractor " + name + ": missing feature file " + path);
        auto bytes = (size_t)f.tellg();
        if (bytes == 0 || bytes % 4)
            throw std::runtime_error("extractor " + name + ": bad feature file " + path);
        f.seekg(0);
        std::vector<float> raw(bytes / 4);
        f.read((char*)raw.data(), (std::streamsize)bytes);
        return std::vector<double>(raw.begin(), raw.end());
    };
    return fe;
}

// ---------------------------------------------------------------- protocol

nlohmann::json report_to_json(const MetricReport& r) {
    return {{"pixcorr", r.pixcorr},
            {"ssim", r.ssim},
            {"two_way", r.two_way},
            {"swav_distance", r.swav_distance},
            {"saliency_cc", r.saliency_cc},
            {"saliency_kl", r.saliency_kl},
            {"saliency_sim", r.saliency_sim},
            {"n_samples", r.n_samples},
            {"config", r.config},
            {"missing", r.missing}};
}

MetricReport report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.pixcorr = j.at("pixcorr");
    r.ssim = j.at("ssim");
    r.two_way = j.at("two_way").get<std::map<std::string, double>>();
    r.swav_distance = j.at("swav_distance");
    r.saliency_cc = j.at("saliency_cc");
    r.saliency_kl = j.at("saliency_kl");
    r.saliency_sim = j.at("saliency_sim");
    r.n_samples = j.at("n_samples");
    r.config = j.at("config");
    r.missing = j.at("missing");
    return r;
}

MetricReport evaluate_run(const std::vector<Tensor>& recons, const std::vector<Tensor>& gts,
                          const std::vector<SaliencyMap>& gt_sal,
                          const std::vector<std::string>& ids,
                          const std::vector<FeatureExtractor>& extractors) {
    size_t N = recons.size();
    if (N == 0 || gts.size() != N || gt_sal.size() != N || ids.size() != N)
        throw std::invalid_argument("evaluate: aligned non-empty lists required");
    if (extractors.empty()) throw std::invalid_argument("evaluate: at least one extractor required");

    MetricReport r;
    r.n_samples = (int)N;
    r.missing = nlohmann::json::array();
    auto record_miss = [&](const std::string& id, const std::string& metric, const std::string& why) {
        r.missing.push_back({{"id", id}, {"metric", metric}, {"error", why}});
    };

    double px = 0, ss = 0;
    int npx = 0, nss = 0;
    for (size_t i = 0; i < N; ++i) {
        Tensor ra = resize_image(recons[i], kEvalHW, kEvalHW);
        Tensor rb = resize_image(gts[i], kEvalHW, kEvalHW);
        try {
            px += pearson(ra.v, rb.v);
            npx++;
        } catch (const std::exception& e) {
            record_miss(ids[i], "pixcorr", e.what());
        }
        try {
            ss += ssim(ra, rb);
            nss++;
        } catch (const std::exception& e) {
            record_miss(ids[i], "ssim", e.what());
        }
    }
    r.pixcorr = npx ? px / npx : 0.0;
    r.ssim = nss ? ss / nss : 0.0;

    std::string swav_slot = extractors[0].name;
    for (auto& ex : extractors)
        if (ex.name == "swav") swav_slot = "swav";
    for (auto& ex : extractors) {
        std::vector<std::vector<double>> fr, fg;
        bool ok = true;
        for (size_t i = 0; i < N; ++i) {
            try {
                fr.push_back(ex.extract(recons[i], ids[i]));
                fg.push_back(ex.extract(gts[i], ids[i]));
            } catch (const std::exception& e) {
                record_miss(ids[i], "features:" + ex.name, e.what());
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        try {
            r.two_way[ex.name] = N >= 2 ? two_way_identification(fr, fg, "correlation") : 1.0;
        } catch (const std::exception& e) {
            record_miss("*", "two_way:" + ex.name, e.what());
        }
        if (ex.name == swav_slot) {
            try {
                r.swav_distance = swav_distance(fr, fg);
            } catch (const std::exception& e) {
                record_miss("*", "swav_distance", e.what());
            }
        }
    }

    double cc = 0, kl = 0, sim = 0;
    int ncc = 0, nkl = 0;
    for (size_t i = 0; i < N; ++i) {
        SaliencyMap pred = spectral_residual(recons[i]);
        pred = resize_map(pred, gt_sal[i].height(), gt_sal[i].width());
        try {
            cc += saliency_cc(pred, gt_sal[i]);
            ncc++;
        } catch (const std::exception& e) {
            record_miss(ids[i], "saliency_cc", e.what());
        }
        kl += saliency_kl(gt_sal[i], pred);
        sim += saliency_sim(pred, gt_sal[i]);
        nkl++;
    }
    r.saliency_cc = ncc ? cc / ncc : 0.0;
    r.saliency_kl = nkl ? kl / nkl : 0.0;
    r.saliency_sim = nkl ? sim / nkl : 0.0;

    nlohmann::json exs = nlohmann::json::array();
    for (auto& ex : extractors) exs.push_back(ex.name);
    r.config = {{"eval_hw", kEvalHW},
                {"ssim", {{"window", 11}, {"sigma", 1.5}, {"K1", 0.01}, {"K2", 0.03}, {"L", 1.0}}},
                {"two_way_distance", "correlation"},
                {"kl", {{"direction", "gt||pred"}, {"log", "natural"}, {"epsilon", kSalEps}}},
                {"swav_slot", swav_slot},
                {"extractors", exs},
                {"saliency_predictor", "spectral_residual"}};
    return r;
}

static void blit(Tensor& sheet, const Tensor& img, int row, int col, int H, int W) {
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                sheet.at3(c, row * H + y, col * W + x) = img.at3(c, y, x);
}

static Tensor gray3(const SaliencyMap& m, int H, int W) {
    SaliencyMap rs = normalize(resize_map(m, H, W), SalNorm::max1);
    Tensor out({3, H, W});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < H * W; ++i) out.v[(size_t)(c * H * W + i)] = rs.data.v[(size_t)i];
    return out;
}

void write_grid_sheet(const std::string& path, const std::vector<Tensor>& gts,
                      const std::vector<Tensor>& recons, const std::vector<SaliencyMap>& gt_sal,
                      const std::vector<SaliencyMap>& recon_sal) {
    size_t N = gts.size();
    if (N == 0 || recons.size() != N || gt_sal.size() != N || recon_sal.size() != N)
        throw std::invalid_argument("grid sheet: aligned non-empty lists required");
    int H = gts[0].shape[1], W = gts[0].shape[2];
    Tensor sheet({3, (int)N * H, 4 * W});
    for (size_t i = 0; i < N; ++i) {
        blit(sheet, resize_image(gts[i], H, W), (int)i, 0, H, W);
        blit(sheet, resize_image(recons[i], H, W), (int)i, 1, H, W);
        blit(sheet, gray3(gt_sal[i], H, W), (int)i, 2, H, W);
        blit(sheet, gray3(recon_sal[i], H, W), (int)i, 3, H, W);
    }
    save_image_png(path, sheet);
}

}  // namespace eegsal
