#include "lct/dbp.hpp"

#include <algorithm>
#include <cmath>

namespace lct {

DerivTable diff_u(const Sinogram& sino) {
    const SegmentGeometry& g = sino.geom;
    const int n = g.det_cells;
    if (n < 3) throw ValidationError("diff_u: det_cells must be >= 3");
    DerivTable d{Image(g.n_src, n, 0.0), Mask(g.n_src, n, 0)};
    const double du = g.det_cell_size;
    for (int k = 0; k < g.n_src; ++k) {
        const double* p = sino.values.row(k);
        auto m = [&](int j) { return sino.measured(k, j); };
        for (int j = 0; j < n; ++j)
            if (m(j) && !std::isfinite(p[j])) throw NumericError("diff_u: non-finite sinogram sample");
        double* out = d.values.row(k);
        out[0] = (p[1] - p[0]) / du;
        d.valid(k, 0) = m(0) && m(1);
        for (int j = 1; j < n - 1; ++j) {
            out[j] = (p[j + 1] - p[j - 1]) / (2.0 * du);
            d.valid(k, j) = m(j - 1) && m(j) && m(j + 1);
        }
        out[n - 1] = (p[n - 1] - p[n - 2]) / du;
        d.valid(k, n - 1) = m(n - 2) && m(n - 1);
    }
    return d;
}

double backproject_point(const Sinogram& sino, const DerivTable& deriv, Vec2 p, FovRule rule, bool& valid) {
    const SegmentGeometry& g = sino.geom;
    valid = false;
    double lo, hi;
    if (!detector_source_interval(g, p, lo, hi)) return 0.0;
    const Vec2 q = g.to_local(p);
    const double Y = q.y + g.l;
    const double s0 = -0.5 * g.traj_len, s1 = 0.5 * g.traj_len;
    const double ds = g.ds();
    const double a = std::max(lo, s0), b = std::min(hi, s1);
    if (!(b > a)) return 0.0;

    const int kf = std::max(0, int(std::ceil((a - s0) / ds - 1e-9)));
    const int kl = std::min(g.n_src - 1, int(std::floor((b - s0) / ds + 1e-9)));
    if (kl - kf < 1) return 0.0;

    const int n = g.det_cells;
    const double hy = g.h / Y;
    bool cells_ok = true;
    double sumF = 0.0;
    double F0 = 0, F1 = 0, Fp = 0, Fl = 0, G0 = 0, G1 = 0, Gp = 0, Gl = 0;
    for (int k = kf; k <= kl; ++k) {
        const double s = g.s_at(k);
        const double u = s + (q.x - s) * hy;
        double f = g.cell_of(u);
        f = std::min(std::max(f, 0.0), double(n - 1));
        const int j0 = std::min(int(f), n - 2);
        const double t = f - double(j0);
        if (!deriv.valid(k, j0) || !deriv.valid(k, j0 + 1)) cells_ok = false;
        const double P = (1.0 - t) * sino.values(k, j0) + t * sino.values(k, j0 + 1);
        const double D = (1.0 - t) * deriv.values(k, j0) + t * deriv.values(k, j0 + 1);
        const double dx = q.x - s;
        const double d2 = dx * dx + Y * Y;
        const double w = 1.0 / std::sqrt(d2);
        const double dw = dx * w / d2;
        const double F = -P * dw + hy * w * D;
        const double G = w * P;
        sumF += F;
        if (k == kf) F0 = F, G0 = G;
        if (k == kf + 1) F1 = F, G1 = G;
        if (k == kl - 1) Fp = F, Gp = G;
        if (k == kl) Fl = F, Gl = G;
    }
    double integral = ds * (sumF - 0.5 * (F0 + Fl));
    const double dlo = g.s_at(kf) - a;
    const double dhi = b - g.s_at(kl);
    const double Fa = F0 + (F0 - F1) * dlo / ds;
    const double Fb = Fl + (Fl - Fp) * dhi / ds;
    const double Ga = G0 + (G0 - G1) * dlo / ds;
    const double Gb = Gl + (Gl - Gp) * dhi / ds;
    integral += 0.5 * dlo * (Fa + F0) + 0.5 * dhi * (Fb + Fl);

    const double tol = 1e-9 * g.traj_len;
    const bool cover_ok = rule == FovRule::detector_bounded ? (lo >= s0 - tol && hi <= s1 + tol) : (lo < s0 && hi > s1);
    valid = cells_ok && cover_ok;
    return Gb - Ga + integral;
}

DBPImage backproject(const Sinogram& sino, const DerivTable& deriv, const ImageGrid& grid,
                     const BackprojectOptions& opt, Exec exec) {
    sino.geom.validate();
    grid.validate();
    if (!deriv.values.same_shape(sino.values)) throw ValidationError("backproject: derivative/sinogram shape mismatch");
    DBPImage out;
    out.grid = grid;
    out.values = Image(grid.n, grid.n, 0.0);
    out.validity = Mask(grid.n, grid.n, 0);
    out.eta = sino.geom.theta - 0.5 * kPi;
    out.segment_ids = {opt.segment_id};
    out.geom = sino.geom;
    auto body = [&](int r) {
        for (int c = 0; c < grid.n; ++c) {
            bool v = false;
            out.values(r, c) = backproject_point(sino, deriv, grid.point(r, c), opt.rule, v);
            out.validity(r, c) = v ? 1 : 0;
        }
    };
    if (exec == Exec::serial) {
        for (int r = 0; r < grid.n; ++r) body(r);
    } else {
#pragma omp parallel for schedule(dynamic, 4)
        for (int r = 0; r < grid.n; ++r) body(r);
    }
    return out;
}

DBPImage overlay(const std::vector<DBPImage>& dbps) {
    if (dbps.empty()) throw ValidationError("overlay: empty input");
    DBPImage out;
    out.grid = dbps[0].grid;
    out.values = Image(out.grid.n, out.grid.n, 0.0);
    out.validity = Mask(out.grid.n, out.grid.n, 1);
    for (const auto& d : dbps) {
        if (!(d.grid == out.grid) || !d.values.same_shape(out.values)) throw ValidationError("overlay: grid mismatch");
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values.data[i] += d.values.data[i];
            out.validity.data[i] = out.validity.data[i] & d.validity.data[i];
        }
        out.segment_ids.insert(out.segment_ids.end(), d.segment_ids.begin(), d.segment_ids.end());
    }
    return out;
}

std::vector<DBPImage> segment_dbps(const std::vector<Sinogram>& sinos, const ImageGrid& grid, FovRule rule,
                                   Exec exec) {
    std::vector<DBPImage> out;
    out.reserve(sinos.size());
    for (std::size_t i = 0; i < sinos.size(); ++i) {
        BackprojectOptions o;
        o.rule = rule;
        o.segment_id = int(i);
        out.push_back(backproject(sinos[i], diff_u(sinos[i]), grid, o, exec));
    }
    return out;
}

}  // namespace lct
