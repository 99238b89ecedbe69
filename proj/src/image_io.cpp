#include "eegsal/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace eegsal {

void save_image_png(const std::string& path, const Tensor& image) {
    if (image.shape.size() != 3 || image.shape[0] != 3)
        throw std::invalid_argument("save_image_png: expected [3,H,W]");
    int H = image.shape[1], W = image.shape[2];
    cv::Mat m(H, W, CV_8UC3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            auto& px = m.at<cv::Vec3b>(y, x);
            // OpenCV is BGR on disk order
            for (int c = 0; c < 3; ++c) {
                double v = std::min(1.0, std::max(0.0, image.at3(c, y, x)));
                px[2 - c] = (uchar)std::lround(v * 255.0);
            }
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("failed to write " + path);
}

Tensor load_image_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw std::runtime_error("unreadable image: " + path);
    Tensor t({3, m.rows, m.cols});
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            auto px = m.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) t.at3(c, y, x) = (double)px[2 - c] / 255.0;
        }
    return t;
}

void save_gray_png(const std::string& path, const Tensor& map) {
    if (map.shape.size() != 2) throw std::invalid_argument("save_gray_png: expected [H,W]");
    int H = map.shape[0], W = map.shape[1];
    cv::Mat m(H, W, CV_8U);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double v = std::min(1.0, std::max(0.0, map.at2(y, x)));
            m.at<uchar>(y, x) = (uchar)std::lround(v * 255.0);
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("failed to write " + path);
}

Tensor load_gray_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw std::runtime_error("unreadable image: " + path);
    Tensor t({m.rows, m.cols});
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) t.at2(y, x) = (double)m.at<uchar>(y, x) / 255.0;
    return t;
}

Tensor resize_image(const Tensor& image, int new_h, int new_w) {
    if (image.shape.size() != 3) throw std::invalid_argument("resize_image: expected [3,H,W]");
    int C = image.shape[0], H = image.shape[1], W = image.shape[2];
    if (H == new_h && W == new_w) return image;
    Tensor out({C, new_h, new_w});
    cv::Mat src(H, W, CV_64F), dst;
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) src.at<double>(y, x) = image.at3(c, y, x);
        cv::resize(src, dst, cv::Size(new_w, new_h), 0, 0, cv::INTER_LINEAR);
        for (int y = 0; y < new_h; ++y)
            for (int x = 0; x < new_w; ++x) out.at3(c, y, x) = dst.at<double>(y, x);
    }
    return out;
}

}  // namespace eegsal
