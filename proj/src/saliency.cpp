#include "eegsal/saliency.hpp"

#include <opencv2/imgproc.hpp>

namespace eegsal {

static void require_nonneg(const Tensor& t, const char* what) {
    for (double x : t.v)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": map must be finite and non-negative");
}

SaliencyMap normalize(const SaliencyMap& map, SalNorm mode) {
    require_nonneg(map.data, "normalize");
    SaliencyMap out = map;
    if (mode == SalNorm::max1) {
        double mx = 0.0;
        for (double x : map.data.v) mx = std::max(mx, x);
        if (mx == 0.0) {
            out.norm = SalNorm::raw;  // all-zero passes through
            return out;
        }
        for (auto& x : out.data.v) x /= mx;
        out.norm = SalNorm::max1;
    } else if (mode == SalNorm::sum1) {
        double s = 0.0;
        for (auto& x : out.data.v) {
            x += kSalEps;
            s += x;
        }
        for (auto& x : out.data.v) x /= s;
        out.norm = SalNorm::sum1;
    } else {
        throw std::invalid_argument("normalize: mode must be max1 or sum1");
    }
    return out;
}

SaliencyMap spectral_residual(const Tensor& image) {
    if (image.shape.size() != 3 || image.shape[0] != 3)
        throw std::invalid_argument("spectral_residual: expected [3,H,W] image");
    int H = image.shape[1], W = image.shape[2];
    if (H < 2 || W < 2) throw std::invalid_argument("spectral_residual: image too small");

    cv::Mat gray(H, W, CV_64F);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            gray.at<double>(y, x) =
                (image.at3(0, y, x) + image.at3(1, y, x) + image.at3(2, y, x)) / 3.0;

    double mn, mx;
    cv::minMaxLoc(gray, &mn, &mx);
    SaliencyMap out;
    out.data = Tensor({H, W});
    if (mx == mn) return out;  // flat spectrum, all-zero residual, tag raw

    cv::Mat planes[] = {gray, cv::Mat::zeros(H, W, CV_64F)};
    cv::Mat freq;
    cv::merge(planes, 2, freq);
    cv::dft(freq, freq);
    cv::Mat re_im[2];
    cv::split(freq, re_im);

    cv::Mat mag, phase;
    cv::cartToPolar(re_im[0], re_im[1], mag, phase, false);
    // floor the amplitude relative to its peak: exact spectral zeros (common
    // in synthetic images) would otherwise blow up the residual at their
    // neighbors and drown the real signal
    double amp_max;
    cv::minMaxLoc(mag, nullptr, &amp_max);
    cv::Mat log_amp;
    cv::log(mag + 1e-3 * amp_max, log_amp);
    cv::Mat log_blur;
    cv::blur(log_amp, log_blur, cv::Size(3, 3), cv::Point(-1, -1), cv::BORDER_DEFAULT);
    cv::Mat residual = log_amp - log_blur;
    cv::exp(residual, mag);
    // drop the mean component before going back to the image domain
    mag.at<double>(0, 0) = 0.0;
    cv::polarToCart(mag, phase, re_im[0], re_im[1], false);
    cv::merge(re_im, 2, freq);
    cv::dft(freq, freq, cv::DFT_INVERSE | cv::DFT_SCALE);
    cv::split(freq, re_im);

    cv::Mat sal(H, W, CV_64F);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double re = re_im[0].at<double>(y, x), im = re_im[1].at<double>(y, x);
            sal.at<double>(y, x) = re * re + im * im;
        }
    double sigma = (double)H / 32.0;
    int k = 2 * (int)std::ceil(3.0 * sigma) + 1;
    cv::GaussianBlur(sal, sal, cv::Size(k, k), sigma, sigma, cv::BORDER_REPLICATE);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) out.data.at2(y, x) = sal.at<double>(y, x);
    return normalize(out, SalNorm::max1);
}

SaliencyMap resize_map(const SaliencyMap& map, int new_h, int new_w) {
    if (new_h <= 0 || new_w <= 0) throw std::invalid_argument("resize_map: zero target dims");
    int H = map.height(), W = map.width();
    if (new_h == H && new_w == W) return map;
    cv::Mat src(H, W, CV_64F);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) src.at<double>(y, x) = map.data.at2(y, x);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(new_w, new_h), 0, 0, cv::INTER_LINEAR);
    SaliencyMap out;
    out.data = Tensor({new_h, new_w});
    for (int y = 0; y < new_h; ++y)
        for (int x = 0; x < new_w; ++x) out.data.at2(y, x) = std::max(0.0, dst.at<double>(y, x));
    out.norm = SalNorm::raw;
    if (map.norm == SalNorm::max1) return normalize(out, SalNorm::max1);
    if (map.norm == SalNorm::sum1) return normalize(out, SalNorm::sum1);
    return out;
}

}  // namespace eegsal
