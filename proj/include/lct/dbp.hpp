#pragma once

#include <optional>
#include <vector>

#include "lct/projector.hpp"

namespace lct {

// Calibrated constant: for full angular coverage the DBP equals
// -2*pi * H f along the trajectory direction, with
// H g(x) = (1/pi) PV int g(t) / (x - t) dt. Hilbert data = kDbpToHilbert * b.
inline constexpr double kDbpToHilbert = -1.0 / (2.0 * kPi);

struct DerivTable {
    Image values;  // dp/du
    Mask valid;
};

// Central differences along u, one-sided at the detector ends. A cell is
// invalid if any stencil cell is unmeasured.
DerivTable diff_u(const Sinogram& sino);

struct DBPImage {
    ImageGrid grid;
    Image values;
    Mask validity;
    std::optional<double> eta;  // theta - pi/2; filtering lines run along (cos theta, sin theta)
    std::vector<int> segment_ids;
    std::optional<SegmentGeometry> geom;

    double filter_angle() const { return *eta + 0.5 * kPi; }
};

struct BackprojectOptions {
    FovRule rule = FovRule::detector_bounded;
    int segment_id = 0;
};

// Differentiated backprojection of one segment. For pixel r with rays from
// sources s in [a, b] (the covered part of the trajectory),
//   b(r) = [w P](a..b) - int P dw/ds ds + (h/Y) int w dp/du ds,
// where w = 1/|r - S(s)|, P(s) = p(s, u*(s, r)) and Y = y' + l. This is the
// integral of w times the derivative of p at fixed ray direction, written so
// that only the detector derivative is differenced. Trapezoid in s, with
// linear extrapolation of the integrand to the exact ends a and b.
DBPImage backproject(const Sinogram& sino, const DerivTable& deriv, const ImageGrid& grid,
                     const BackprojectOptions& opt = {}, Exec exec = Exec::parallel);

// Value and validity at one point (the per-pixel kernel).
double backproject_point(const Sinogram& sino, const DerivTable& deriv, Vec2 p, FovRule rule, bool& valid);

DBPImage overlay(const std::vector<DBPImage>& dbps);

// diff_u + backproject for every segment.
std::vector<DBPImage> segment_dbps(const std::vector<Sinogram>& sinos, const ImageGrid& grid,
                                   FovRule rule = FovRule::detector_bounded, Exec exec = Exec::parallel);

}  // namespace lct
