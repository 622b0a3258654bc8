#include "lct/metrics.hpp"

#include <limits>
#include <sstream>

namespace lct {

namespace {

void same_shape(const Image& a, const Image& b, const Mask* m) {
    if (!a.same_shape(b)) throw ValidationError("metrics: shape mismatch");
    if (m && (m->rows != a.rows || m->cols != a.cols)) throw ValidationError("metrics: mask shape mismatch");
}

double mse(const Image& a, const Image& b, const Mask* m) {
    same_shape(a, b, m);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (m && !m->data[i]) continue;
        const double d = a.data[i] - b.data[i];
        acc += d * d;
        ++cnt;
    }
    if (cnt == 0) throw ValidationError("metrics: empty mask");
    return acc / double(cnt);
}

}  // namespace

double rmse(const Image& a, const Image& b, const Mask* mask) { return std::sqrt(mse(a, b, mask)); }

double psnr(const Image& a, const Image& b, double data_range, const Mask* mask) {
    if (!(data_range > 0)) throw ValidationError("psnr: data_range must be > 0");
    const double e = mse(a, b, mask);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / e);
}

double ssim_window(const Image& a, const Image& b, int r, int c, double data_range, const SsimParams& p) {
    const int w = p.window;
    const double n = double(w) * double(w);
    double sa = 0, sb = 0;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            sa += a(r + i, c + j);
            sb += b(r + i, c + j);
        }
    const double ma = sa / n, mb = sb / n;
    double vaa = 0, vbb = 0, vab = 0;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            const double da = a(r + i, c + j) - ma, db = b(r + i, c + j) - mb;
            vaa += da * da;
            vbb += db * db;
            vab += da * db;
        }
    vaa /= n;
    vbb /= n;
    vab /= n;
    const double C1 = (p.k1 * data_range) * (p.k1 * data_range);
    const double C2 = (p.k2 * data_range) * (p.k2 * data_range);
    return ((2 * ma * mb + C1) * (2 * vab + C2)) / ((ma * ma + mb * mb + C1) * (vaa + vbb + C2));
}

double ssim(const Image& a, const Image& b, double data_range, const SsimParams& p, const Mask* mask) {
    same_shape(a, b, mask);
    if (!(data_range > 0)) throw ValidationError("ssim: data_range must be > 0");
    if (a.rows < p.window || a.cols < p.window) throw ValidationError("ssim: image smaller than window");
    double acc = 0.0;
    std::size_t cnt = 0;
    for (int r = 0; r + p.window <= a.rows; ++r)
        for (int c = 0; c + p.window <= a.cols; ++c) {
            if (mask) {
                bool inside = true;
                for (int i = 0; i < p.window && inside; ++i)
                    for (int j = 0; j < p.window; ++j)
                        if (!(*mask)(r + i, c + j)) {
                            inside = false;
                            break;
                        }
                if (!inside) continue;
            }
            acc += ssim_window(a, b, r, c, data_range, p);
            ++cnt;
        }
    if (cnt == 0) throw ValidationError("ssim: no window inside the mask");
    return acc / double(cnt);
}

double relative_rmse(const Image& a, const Image& b, const Mask* mask) {
    same_shape(a, b, mask);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask && !mask->data[i]) continue;
        num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
        den += b.data[i] * b.data[i];
    }
    if (den == 0.0) throw ValidationError("relative_rmse: reference is zero on the mask");
    return std::sqrt(num / den);
}

MetricReport evaluate(const Image& img, const Image& label, std::optional<double> data_range, const Mask* mask) {
    MetricReport r;
    double dr;
    if (data_range) {
        dr = *data_range;
    } else {
        dr = -std::numeric_limits<double>::infinity();
        for (double v : label.data) dr = std::max(dr, v);
    }
    if (!(dr > 0)) throw ValidationError("metrics: data_range must be > 0 (label max is not positive)");
    r.data_range = dr;
    r.rmse = rmse(img, label, mask);
    r.psnr = psnr(img, label, dr, mask);
    r.ssim = ssim(img, label, dr, {}, mask);
    r.masked = mask != nullptr;
    return r;
}

std::vector<double> profile(const Image& img, Axis axis, int index, int start, int end) {
    const int len = axis == Axis::row ? img.cols : img.rows;
    const int other = axis == Axis::row ? img.rows : img.cols;
    if (index < 0 || index >= other) throw ValidationError("profile: index out of bounds");
    if (start < 0 || end > len || start >= end) throw ValidationError("profile: range out of bounds");
    std::vector<double> v;
    v.reserve(std::size_t(end - start));
    for (int i = start; i < end; ++i) v.push_back(axis == Axis::row ? img(index, i) : img(i, index));
    return v;
}

std::string profile_csv(const std::vector<double>& v, int start) {
    std::ostringstream os;
    os.precision(17);
    os << "index,value\n";
    for (std::size_t i = 0; i < v.size(); ++i) os << (start + int(i)) << "," << v[i] << "\n";
    return os.str();
}

nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j;
    if (std::isinf(r.psnr))
        j["psnr"] = "+inf";
    else
        j["psnr"] = r.psnr;
    j["ssim"] = r.ssim;
    j["rmse"] = r.rmse;
    j["data_range"] = r.data_range;
    j["masked"] = r.masked;
    return j;
}

}  // namespace lct
