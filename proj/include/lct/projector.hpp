#pragma once

#include <optional>

#include "lct/phantom.hpp"

namespace lct {

// p(s_k, u_j): rows are source samples, columns detector cells.
struct Sinogram {
    SegmentGeometry geom;
    Image values;
    std::optional<Mask> mask;  // 0 = unmeasured; such cells hold exactly 0

    bool measured(int k, int j) const { return !mask || (*mask)(k, j) != 0; }
};

Sinogram simulate(const PhantomSpec& spec, const SegmentGeometry& geom, Exec exec = Exec::parallel);

// Ray marching through a pixel image with bilinear sampling, step <= pixel/2.
Sinogram project_raster(const Image& img, const ImageGrid& grid, const SegmentGeometry& geom,
                        Exec exec = Exec::parallel);

// Zero (and mask) every cell whose ray misses the ROI disk.
Sinogram truncate_to_roi(const Sinogram& sino, Vec2 roi_center, double roi_radius);

// Bilinear sample with zero outside; row 0 at maximal y.
double sample_bilinear(const Image& img, const ImageGrid& grid, Vec2 p);

}  // namespace lct
