#include "lct/projector.hpp"

#include <algorithm>

namespace lct {

namespace {

template <class Body>
void for_rows(int n, Exec exec, Body&& body) {
    if (exec == Exec::serial) {
        for (int k = 0; k < n; ++k) body(k);
    } else {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < n; ++k) body(k);
    }
}

void check_support(const PhantomSpec& spec, const SegmentGeometry& g) {
    // Centre of support must lie between source and detector lines and
    // inside the detector-bounded coverage; otherwise the data are incomplete.
    const Vec2 q = g.to_local({0, 0});
    const double Y = q.y + g.l;
    if (Y - spec.support_radius <= 0 || Y + spec.support_radius >= g.h)
        warn("simulate: phantom support crosses the source or detector line");
}

}  // namespace

Sinogram simulate(const PhantomSpec& spec, const SegmentGeometry& geom, Exec exec) {
    geom.validate();
    check_support(spec, geom);
    Sinogram out{geom, Image(geom.n_src, geom.det_cells, 0.0), std::nullopt};
    for_rows(geom.n_src, exec, [&](int k) {
        const Vec2 a = geom.source_at(geom.s_at(k));
        double* row = out.values.row(k);
        for (int j = 0; j < geom.det_cells; ++j) row[j] = line_integral(spec, a, geom.detector_point(geom.u_at(j)));
    });
    return out;
}

double sample_bilinear(const Image& img, const ImageGrid& grid, Vec2 p) {
    const double cf = grid.colf(p.x), rf = grid.rowf(p.y);
    const double c0f = std::floor(cf), r0f = std::floor(rf);
    const int c0 = int(c0f), r0 = int(r0f);
    const double tc = cf - c0f, tr = rf - r0f;
    auto at = [&](int r, int c) {
        return (r >= 0 && r < img.rows && c >= 0 && c < img.cols) ? img(r, c) : 0.0;
    };
    return (1 - tr) * ((1 - tc) * at(r0, c0) + tc * at(r0, c0 + 1)) +
           tr * ((1 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1));
}

Sinogram project_raster(const Image& img, const ImageGrid& grid, const SegmentGeometry& geom, Exec exec) {
    geom.validate();
    grid.validate();
    if (img.rows != grid.n || img.cols != grid.n) throw ValidationError("project_raster: image/grid size mismatch");
    Sinogram out{geom, Image(geom.n_src, geom.det_cells, 0.0), std::nullopt};
    // Clip each ray to the grid's bounding box (one pixel margin for the
    // bilinear footprint), then march with midpoint samples.
    const double half = 0.5 * double(grid.n) * grid.pixel_size + grid.pixel_size;
    const double xmin = grid.center.x - half, xmax = grid.center.x + half;
    const double ymin = grid.center.y - half, ymax = grid.center.y + half;
    const double step_max = 0.5 * grid.pixel_size;
    for_rows(geom.n_src, exec, [&](int k) {
        const Vec2 a = geom.source_at(geom.s_at(k));
        double* row = out.values.row(k);
        for (int j = 0; j < geom.det_cells; ++j) {
            const Vec2 b = geom.detector_point(geom.u_at(j));
            const Vec2 d = b - a;
            double t0 = -1e300, t1 = 1e300;
            auto slab = [&](double o, double dd, double lo, double hi) {
                if (std::fabs(dd) < 1e-300) {
                    if (o < lo || o > hi) t0 = 1, t1 = 0;
                    return;
                }
                double ta = (lo - o) / dd, tb = (hi - o) / dd;
                if (ta > tb) std::swap(ta, tb);
                t0 = std::max(t0, ta);
                t1 = std::min(t1, tb);
            };
            slab(a.x, d.x, xmin, xmax);
            slab(a.y, d.y, ymin, ymax);
            if (!(t1 > t0)) {
                row[j] = 0.0;
                continue;
            }
            const double len = (t1 - t0) * norm(d);
            const int n = std::max(1, int(std::ceil(len / step_max)));
            const double dt = (t1 - t0) / double(n);
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                const double t = t0 + (double(i) + 0.5) * dt;
                acc += sample_bilinear(img, grid, a + t * d);
            }
            row[j] = acc * len / double(n);
        }
    });
    return out;
}

Sinogram truncate_to_roi(const Sinogram& sino, Vec2 c, double radius) {
    const SegmentGeometry& g = sino.geom;
    Sinogram out = sino;
    Mask m = sino.mask ? *sino.mask : Mask(g.n_src, g.det_cells, 1);
    bool any = false;
    for (int k = 0; k < g.n_src; ++k) {
        const Vec2 a = g.source_at(g.s_at(k));
        for (int j = 0; j < g.det_cells; ++j) {
            const Vec2 b = g.detector_point(g.u_at(j));
            const Vec2 d = b - a;
            const Vec2 w = c - a;
            const double dist = std::fabs(d.x * w.y - d.y * w.x) / norm(d);
            if (dist < radius) {
                any = true;
            } else {
                m(k, j) = 0;
                out.values(k, j) = 0.0;
            }
        }
    }
    if (!any) throw ValidationError("truncate_to_roi: no ray intersects the ROI");
    out.mask = std::move(m);
    return out;
}

}  // namespace lct
