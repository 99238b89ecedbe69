#include "eegsal/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <opencv2/imgproc.hpp>

#include "eegsal/image_io.hpp"
#include "eegsal/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace eegsal {

// ----------------------------------------------------------- generation

static void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
    h = std::fmod(h, 1.0) * 6.0;
    int i = (int)h;
    double f = h - i;
    double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
    switch (i % 6) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
}

static bool in_shape(int kind, double dx, double dy, double r) {
    switch (kind % 4) {
        case 0: return dx * dx + dy * dy <= r * r;                          // circle
        case 1: return std::fabs(dx) <= r && std::fabs(dy) <= r;            // square
        case 2:                                                             // triangle (up)
            return dy >= -r && dy <= r && std::fabs(dx) <= (dy + r) * 0.5;
        default:                                                            // cross
            return (std::fabs(dx) <= r / 3.0 && std::fabs(dy) <= r) ||
                   (std::fabs(dy) <= r / 3.0 && std::fabs(dx) <= r);
    }
}

static void fill_record(StimulusRecord& rec, const SyntheticSpec& spec, int cls, double cx,
                        double cy, Rng& noise_rng, double noise_level) {
    int H = spec.height, W = spec.width, C = spec.channels, T = spec.samples;
    double r = (double)std::min(H, W) / 6.0;
    double rgb[3];
    hsv_to_rgb((double)cls / (double)spec.n_classes, 1.0, 0.9, rgb);

    rec.image = Tensor({3, H, W});
    Tensor mask({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool inside = in_shape(cls, x - cx, y - cy, r);
            mask.at2(y, x) = inside ? 1.0 : 0.0;
            for (int c = 0; c < 3; ++c) rec.image.at3(c, y, x) = inside ? rgb[c] : 0.5;
        }
    for (auto& v : rec.image.v) v = quant8(v);

    // saliency: blurred mask, max-normalized, quantized to the stored grid
    cv::Mat m(H, W, CV_64F, mask.v.data());
    double sigma = (double)H / 16.0;
    int k = 2 * (int)std::ceil(3.0 * sigma) + 1;
    cv::Mat blurred;
    cv::GaussianBlur(m, blurred, cv::Size(k, k), sigma, sigma, cv::BORDER_REPLICATE);
    SaliencyMap sal;
    sal.data = Tensor({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) sal.data.at2(y, x) = blurred.at<double>(y, x);
    sal = normalize(sal, SalNorm::max1);
    for (auto& v : sal.data.v) v = quant8(v);
    rec.saliency = sal;

    // EEG: class template on a class-specific channel subset plus
    // position-encoded amplitude modulation, then additive gaussian noise
    rec.eeg.data = Tensor({C, T});
    int sub_len = std::max(1, C / spec.n_classes);
    int sub_start = (cls * C) / spec.n_classes;
    double freq = 3.0 + 2.0 * cls;
    for (int c = 0; c < C; ++c) {
        bool active = c >= sub_start && c < sub_start + sub_len;
        double amp = ((c & 1) == 0) ? 1.0 + 0.5 * cx / (double)W : 1.0 + 0.5 * cy / (double)H;
        for (int t = 0; t < T; ++t) {
            double v = 0.0;
            if (active) v = amp * std::sin(2.0 * M_PI * freq * (double)t / (double)T);
            v += noise_level * noise_rng.normal();
            rec.eeg.data.at2(c, t) = (double)(float)v;  // float32 grid: lossless on disk
        }
    }
    rec.eeg.subject_id = 0;
    rec.class_label = cls;
}

PairedDataset generate_synthetic(const SyntheticSpec& spec, uint64_t seed) {
    if (spec.n_classes < 2 || spec.n_records < spec.n_classes || spec.noise_level < 0 ||
        spec.channels < 1 || spec.samples < 1 || spec.height < 8 || spec.width < 8)
        throw std::invalid_argument("generate_synthetic: invalid spec dimensions");

    // round-robin labels, then a seeded shuffle, so class balance is exact
    std::vector<int> labels((size_t)spec.n_records);
    for (int i = 0; i < spec.n_records; ++i) labels[(size_t)i] = i % spec.n_classes;
    Rng shuffle_rng(seed, 1);
    for (int i = spec.n_records - 1; i > 0; --i) {
        int j = (int)shuffle_rng.uniform_int((uint64_t)(i + 1));
        std::swap(labels[(size_t)i], labels[(size_t)j]);
    }

    PairedDataset ds;
    ds.channels = spec.channels;
    ds.samples = spec.samples;
    ds.height = spec.height;
    ds.width = spec.width;
    ds.records.resize((size_t)spec.n_records);
    for (int i = 0; i < spec.n_records; ++i) {
        StimulusRecord& rec = ds.records[(size_t)i];
        char buf[16];
        std::snprintf(buf, sizeof buf, "s%04d", i);
        rec.stimulus_id = buf;
        rec.eeg.stimulus_id = buf;
        Rng rng(seed, 100 + (uint64_t)i);
        double margin = (double)std::min(spec.height, spec.width) / 4.0;
        double cx = rng.uniform(margin, spec.width - margin);
        double cy = rng.uniform(margin, spec.height - margin);
        fill_record(rec, spec, labels[(size_t)i], cx, cy, rng, spec.noise_level);
    }
    return ds;
}

// ----------------------------------------------------------- disk format

void save_dataset(const PairedDataset& ds, const std::string& root) {
    fs::create_directories(fs::path(root) / "images");
    fs::create_directories(fs::path(root) / "saliency");
    fs::create_directories(fs::path(root) / "eeg");

    json manifest;
    manifest["version"] = 1;
    manifest["channels"] = ds.channels;
    manifest["samples"] = ds.samples;
    manifest["height"] = ds.height;
    manifest["width"] = ds.width;
    json recs = json::array();
    for (auto& r : ds.records) {
        recs.push_back({{"id", r.stimulus_id},
                        {"label", r.class_label},
                        {"split", r.split == Split::test ? "test" : "train"},
                        {"subject", r.eeg.subject_id}});
        save_image_png((fs::path(root) / "images" / (r.stimulus_id + ".png")).string(), r.image);
        save_gray_png((fs::path(root) / "saliency" / (r.stimulus_id + ".png")).string(),
                      r.saliency.data);
        std::ofstream f(fs::path(root) / "eeg" / (r.stimulus_id + ".f32"), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write eeg file for " + r.stimulus_id);
        for (double v : r.eeg.data.v) {
            float x = (float)v;
            f.write(reinterpret_cast<const char*>(&x), 4);
        }
    }
    manifest["records"] = recs;
    std::ofstream mf(fs::path(root) / "manifest.json");
    mf << manifest.dump(2) << "\n";
}

PairedDataset load_dataset(const std::string& root) {
    std::ifstream mf(fs::path(root) / "manifest.json");
    if (!mf) throw std::runtime_error("missing manifest: " + root + "/manifest.json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("bad manifest: ") + e.what());
    }
    PairedDataset ds;
    ds.channels = manifest.at("channels");
    ds.samples = manifest.at("samples");
    ds.height = manifest.at("height");
    ds.width = manifest.at("width");
    for (auto& jr : manifest.at("records")) {
        StimulusRecord r;
        r.stimulus_id = jr.at("id");
        r.class_label = jr.at("label");
        r.split = jr.at("split") == "test" ? Split::test : Split::train;
        r.eeg.subject_id = jr.value("subject", 0);
        r.eeg.stimulus_id = r.stimulus_id;

        r.image = load_image_png((fs::path(root) / "images" / (r.stimulus_id + ".png")).string());
        if (r.image.shape[1] != ds.height || r.image.shape[2] != ds.width)
            throw std::runtime_error("image shape mismatch for record " + r.stimulus_id);

        Tensor sal = load_gray_png((fs::path(root) / "saliency" / (r.stimulus_id + ".png")).string());
        if (sal.shape[0] != ds.height || sal.shape[1] != ds.width)
            throw std::runtime_error("saliency shape mismatch for record " + r.stimulus_id);
        r.saliency.data = std::move(sal);
        double mx = 0.0;
        for (double v : r.saliency.data.v) mx = std::max(mx, v);
        r.saliency.norm = (mx == 1.0) ? SalNorm::max1 : SalNorm::raw;

        std::ifstream ef(fs::path(root) / "eeg" / (r.stimulus_id + ".f32"), std::ios::binary);
        if (!ef) throw std::runtime_error("missing eeg file for record " + r.stimulus_id);
        ef.seekg(0, std::ios::end);
        int64_t bytes = ef.tellg();
        ef.seekg(0);
        if (bytes != (int64_t)ds.channels * ds.samples * 4)
            throw std::runtime_error("eeg shape mismatch for record " + r.stimulus_id +
                                     " (expected " + std::to_string(ds.channels) + "x" +
                                     std::to_string(ds.samples) + ")");
        r.eeg.data = Tensor({ds.channels, ds.samples});
        for (auto& v : r.eeg.data.v) {
            float x;
            ef.read(reinterpret_cast<char*>(&x), 4);
            v = (double)x;
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

// ----------------------------------------------------------- split

PairedDataset split_dataset(const PairedDataset& ds, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0,1)");
    PairedDataset out = ds;

    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < out.records.size(); ++i)
        by_class[out.records[i].class_label].push_back(i);

    size_t n_test_total = 0;
    int group = 0;
    for (auto& [cls, idx] : by_class) {
        Rng rng(seed, 200 + (uint64_t)group++);
        for (size_t i = idx.size() - 1; i > 0; --i) {
            size_t j = (size_t)rng.uniform_int((uint64_t)(i + 1));
            std::swap(idx[i], idx[j]);
        }
        int64_t n_test = (int64_t)std::llround(test_fraction * (double)idx.size());
        if (idx.size() >= 2) n_test = std::clamp<int64_t>(n_test, 1, (int64_t)idx.size() - 1);
        for (size_t i = 0; i < idx.size(); ++i)
            out.records[idx[i]].split = (int64_t)i < n_test ? Split::test : Split::train;
        n_test_total += (size_t)n_test;
    }
    if (n_test_total == 0 || n_test_total == out.records.size())
        throw std::invalid_argument("split: fraction yields an empty split");
    return out;
}

bool datasets_equal(const PairedDataset& a, const PairedDataset& b) {
    if (a.channels != b.channels || a.samples != b.samples || a.height != b.height ||
        a.width != b.width || a.records.size() != b.records.size())
        return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        if (ra.stimulus_id != rb.stimulus_id || ra.class_label != rb.class_label ||
            ra.split != rb.split || ra.eeg.subject_id != rb.eeg.subject_id)
            return false;
        if (ra.image.v != rb.image.v || ra.saliency.data.v != rb.saliency.data.v ||
            ra.saliency.norm != rb.saliency.norm || ra.eeg.data.v != rb.eeg.data.v)
            return false;
    }
    return true;
}

}  // namespace eegsal
