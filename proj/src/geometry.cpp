#include "lct/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace lct {

namespace {
constexpr double kTol = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}
}  // namespace

void SegmentGeometry::validate() const {
    require(std::isfinite(theta), "theta must be finite");
    require(l > 0, "l must be > 0");
    require(h > l, "h must be > l");
    require(traj_len > 0, "traj_len must be > 0");
    require(n_src >= 2, "n_src must be >= 2");
    require(det_cells >= 2, "det_cells must be >= 2");
    require(det_cell_size > 0, "det_cell_size must be > 0");
    require(std::isfinite(det_offset), "det_offset must be finite");
}

Vec2 SegmentGeometry::to_local(Vec2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {p.x * c + p.y * s, -p.x * s + p.y * c};
}

Vec2 SegmentGeometry::to_world(Vec2 q) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {q.x * c - q.y * s, q.x * s + q.y * c};
}

void MultiScanConfig::validate() const {
    require(T >= 1, "T must be >= 1");
    require(delta_theta > 0, "delta_theta must be > 0");
    require(std::isfinite(theta0), "theta0 must be finite");
    base.validate();
}

void ImageGrid::validate() const {
    require(n >= 2, "grid n must be >= 2");
    require(pixel_size > 0, "pixel_size must be > 0");
}

Vec2 source_position(const SegmentGeometry& g, double lambda) {
    const double c = std::cos(g.theta + lambda);
    if (std::fabs(c) <= 1e-12) throw NumericError("source_position: cos(theta+lambda) ~ 0");
    const double r = -g.l / c;
    return {r * std::sin(lambda), r * std::cos(lambda)};
}

double arclength_to_lambda(const SegmentGeometry& g, double s) { return std::atan(-s / g.l) - g.theta; }

double detector_u(const SegmentGeometry& g, double s, Vec2 p) {
    const Vec2 q = g.to_local(p);
    const double Y = q.y + g.l;
    if (Y <= kTol) throw NumericError("detector_u: point not in front of the source line");
    return s + (q.x - s) * g.h / Y;
}

double magnification(const SegmentGeometry& g) {
    if (g.l <= 0) throw ValidationError("magnification: l must be > 0");
    return g.h / g.l;
}

std::vector<SegmentGeometry> segments(const MultiScanConfig& c) {
    c.validate();
    std::vector<SegmentGeometry> out;
    out.reserve(std::size_t(c.T));
    for (int i = 0; i < c.T; ++i) {
        SegmentGeometry g = c.base;
        g.theta = c.theta0 + double(i) * c.delta_theta;
        out.push_back(g);
    }
    return out;
}

bool detector_source_interval(const SegmentGeometry& g, Vec2 p, double& lo, double& hi) {
    const Vec2 q = g.to_local(p);
    const double Y = q.y + g.l;
    if (Y <= kTol || Y >= g.h - kTol) return false;
    // u = s (1 - h/Y) + x' h/Y, solved for s at both detector ends.
    const double k = 1.0 - g.h / Y;
    const double sa = (g.u_at(0) - q.x * g.h / Y) / k;
    const double sb = (g.u_at(g.det_cells - 1) - q.x * g.h / Y) / k;
    lo = std::min(sa, sb);
    hi = std::max(sa, sb);
    return true;
}

bool in_fov(const SegmentGeometry& g, Vec2 p, FovRule rule) {
    double lo, hi;
    if (!detector_source_interval(g, p, lo, hi)) return false;
    const double s0 = -0.5 * g.traj_len, s1 = 0.5 * g.traj_len;
    const double tol = 1e-9 * g.traj_len;
    if (rule == FovRule::detector_bounded) return lo >= s0 - tol && hi <= s1 + tol;
    return lo < s0 && hi > s1;
}

Mask fov_mask(const SegmentGeometry& g, const ImageGrid& grid, FovRule rule) {
    g.validate();
    grid.validate();
    Mask m(grid.n, grid.n, 0);
    for (int r = 0; r < grid.n; ++r)
        for (int c = 0; c < grid.n; ++c) m(r, c) = in_fov(g, grid.point(r, c), rule) ? 1 : 0;
    return m;
}

Mask fov_mask(const MultiScanConfig& c, const ImageGrid& grid, FovRule rule) {
    Mask m(grid.n, grid.n, 1);
    for (const auto& g : segments(c)) {
        Mask s = fov_mask(g, grid, rule);
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = m.data[i] & s.data[i];
    }
    return m;
}

int padded_side(int n, double rate) {
    const long v = std::lround(double(n) * (1.0 + rate) / 2.0);
    return int(2 * v);
}

nlohmann::json to_json(const SegmentGeometry& g) {
    return {{"theta_deg", rad2deg(g.theta)}, {"l", g.l}, {"h", g.h}, {"traj_len", g.traj_len},
            {"n_src", g.n_src}, {"det_cells", g.det_cells}, {"det_cell_size", g.det_cell_size},
            {"det_offset", g.det_offset}};
}

nlohmann::json to_json(const MultiScanConfig& c) {
    return {{"T", c.T}, {"delta_theta_deg", rad2deg(c.delta_theta)}, {"theta0_deg", rad2deg(c.theta0)},
            {"base", to_json(c.base)}};
}

nlohmann::json to_json(const ImageGrid& g) {
    return {{"n", g.n}, {"pixel_size", g.pixel_size}, {"center", {g.center.x, g.center.y}}};
}

SegmentGeometry segment_from_json(const nlohmann::json& j, const SegmentGeometry& d) {
    SegmentGeometry g = d;
    if (j.contains("theta_deg")) g.theta = deg2rad(j.at("theta_deg").get<double>());
    g.l = j.value("l", g.l);
    g.h = j.value("h", g.h);
    g.traj_len = j.value("traj_len", g.traj_len);
    g.n_src = j.value("n_src", g.n_src);
    g.det_cells = j.value("det_cells", g.det_cells);
    g.det_cell_size = j.value("det_cell_size", g.det_cell_size);
    g.det_offset = j.value("det_offset", g.det_offset);
    return g;
}

MultiScanConfig multiscan_from_json(const nlohmann::json& j, const MultiScanConfig& d) {
    MultiScanConfig c = d;
    c.T = j.value("T", c.T);
    if (j.contains("delta_theta_deg")) c.delta_theta = deg2rad(j.at("delta_theta_deg").get<double>());
    if (j.contains("theta0_deg")) c.theta0 = deg2rad(j.at("theta0_deg").get<double>());
    if (j.contains("base")) c.base = segment_from_json(j.at("base"), c.base);
    return c;
}

ImageGrid grid_from_json(const nlohmann::json& j, const ImageGrid& d) {
    ImageGrid g = d;
    g.n = j.value("n", g.n);
    g.pixel_size = j.value("pixel_size", g.pixel_size);
    if (j.contains("center")) {
        g.center.x = j.at("center").at(0).get<double>();
        g.center.y = j.at("center").at(1).get<double>();
    }
    return g;
}

std::string geometry_digest(const MultiScanConfig& c, const ImageGrid& g) {
    const std::string s = nlohmann::json{{"config", to_json(c)}, {"grid", to_json(g)}}.dump();
    return hex64(xxh64(s.data(), s.size()));
}

}  // namespace lct
