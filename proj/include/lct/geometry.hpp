#pragma once

#include <vector>

#include "json.hpp"
#include "lct/core.hpp"

namespace lct {

// One linear scan. Angles in radians. The trajectory-local frame is the world
// rotated by -theta: the source line is y' = -l, the detector line y' = h - l.
struct SegmentGeometry {
    double theta = 0.0;
    double l = 15.0;
    double h = 190.0;
    double traj_len = 20.0;
    int n_src = 1001;
    int det_cells = 1024;
    double det_cell_size = 0.127;
    double det_offset = 0.0;

    void validate() const;
    double ds() const { return traj_len / double(n_src - 1); }
    // Arc-length position of source sample k, uniform in [-LS/2, LS/2].
    double s_at(int k) const { return -0.5 * traj_len + ds() * double(k); }
    // Centre of detector cell j.
    double u_at(int j) const { return (double(j) - 0.5 * double(det_cells - 1)) * det_cell_size + det_offset; }
    // Fractional cell index of detector coordinate u.
    double cell_of(double u) const { return (u - det_offset) / det_cell_size + 0.5 * double(det_cells - 1); }
    Vec2 dir() const { return {std::cos(theta), std::sin(theta)}; }
    Vec2 to_local(Vec2 p) const;
    Vec2 to_world(Vec2 q) const;
    // World position of the source at arc length s and of detector coordinate u.
    Vec2 source_at(double s) const { return to_world({s, -l}); }
    Vec2 detector_point(double u) const { return to_world({u, h - l}); }
};

struct MultiScanConfig {
    int T = 5;
    double delta_theta = deg2rad(36.5);
    double theta0 = 0.0;
    SegmentGeometry base;

    void validate() const;
};

// Square pixel grid; row 0 is at maximal y.
struct ImageGrid {
    int n = 512;
    double pixel_size = 0.0165;
    Vec2 center{};

    void validate() const;
    double x_of(int col) const { return center.x + (double(col) - 0.5 * double(n - 1)) * pixel_size; }
    double y_of(int row) const { return center.y + (0.5 * double(n - 1) - double(row)) * pixel_size; }
    Vec2 point(int row, int col) const { return {x_of(col), y_of(row)}; }
    double colf(double x) const { return (x - center.x) / pixel_size + 0.5 * double(n - 1); }
    double rowf(double y) const { return 0.5 * double(n - 1) - (y - center.y) / pixel_size; }
    bool operator==(const ImageGrid& o) const {
        return n == o.n && pixel_size == o.pixel_size && center.x == o.center.x && center.y == o.center.y;
    }
};

// Which rays bound a pixel's angular coverage.
//  detector_bounded: the rays through the first and last detector cell centres,
//                    and those rays must come from sources on the trajectory.
//  all_sources_hit:  every sampled source's ray lands on the detector, so the
//                    trajectory ends bound the coverage.
enum class FovRule { detector_bounded, all_sources_hit };

Vec2 source_position(const SegmentGeometry& g, double lambda);
double arclength_to_lambda(const SegmentGeometry& g, double s);
// Detector coordinate of the ray from source(s) through p. Measured from the
// perpendicular-foot axis; det_offset only moves cell centres.
double detector_u(const SegmentGeometry& g, double s, Vec2 p);
double magnification(const SegmentGeometry& g);
std::vector<SegmentGeometry> segments(const MultiScanConfig& c);

// Source interval [lo, hi] whose rays through p land between the first and
// last detector cell centres. Returns false when p is not strictly between the
// source and detector lines.
bool detector_source_interval(const SegmentGeometry& g, Vec2 p, double& lo, double& hi);
bool in_fov(const SegmentGeometry& g, Vec2 p, FovRule rule = FovRule::detector_bounded);
Mask fov_mask(const SegmentGeometry& g, const ImageGrid& grid, FovRule rule = FovRule::detector_bounded);
Mask fov_mask(const MultiScanConfig& c, const ImageGrid& grid, FovRule rule = FovRule::detector_bounded);

// Padded side for rotation and network inputs: n * (1 + rate), rounded to even.
int padded_side(int n, double rate = 0.5);

// JSON uses degrees for angles and mm for lengths.
nlohmann::json to_json(const SegmentGeometry& g);
nlohmann::json to_json(const MultiScanConfig& c);
nlohmann::json to_json(const ImageGrid& g);
SegmentGeometry segment_from_json(const nlohmann::json& j, const SegmentGeometry& defaults = {});
MultiScanConfig multiscan_from_json(const nlohmann::json& j, const MultiScanConfig& defaults = {});
ImageGrid grid_from_json(const nlohmann::json& j, const ImageGrid& defaults = {});
std::string geometry_digest(const MultiScanConfig& c, const ImageGrid& g);

}  // namespace lct
