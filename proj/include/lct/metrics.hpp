#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lct/core.hpp"

namespace lct {

struct MetricReport {
    double psnr = 0.0;  // +inf when the images are identical
    double ssim = 0.0;
    double rmse = 0.0;
    double data_range = 0.0;
    bool masked = false;
};

double rmse(const Image& a, const Image& b, const Mask* mask = nullptr);
// 10 log10(range^2 / mse); +inf when mse == 0.
double psnr(const Image& a, const Image& b, double data_range, const Mask* mask = nullptr);

struct SsimParams {
    int window = 8;
    double k1 = 0.01;
    double k2 = 0.03;
};
// Mean of the local SSIM over every window position (uniform window,
// population statistics). With a mask, only windows entirely inside it count.
double ssim(const Image& a, const Image& b, double data_range, const SsimParams& p = {}, const Mask* mask = nullptr);
// SSIM of a single window with top-left corner (r, c).
double ssim_window(const Image& a, const Image& b, int r, int c, double data_range, const SsimParams& p = {});

// data_range defaults to the label's maximum.
MetricReport evaluate(const Image& img, const Image& label, std::optional<double> data_range = std::nullopt,
                      const Mask* mask = nullptr);
// ||a - b|| / ||b|| over the mask.
double relative_rmse(const Image& a, const Image& b, const Mask* mask = nullptr);

enum class Axis { row, col };
std::vector<double> profile(const Image& img, Axis axis, int index, int start, int end);
std::string profile_csv(const std::vector<double>& v, int start = 0);

nlohmann::json to_json(const MetricReport& r);

}  // namespace lct
