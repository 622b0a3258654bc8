#include "lct/hilbert.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

#include <Eigen/Dense>

namespace lct {

std::string to_string(OffsetMode m) {
    switch (m) {
        case OffsetMode::zero_band: return "zero_band";
        case OffsetMode::zero_mean: return "zero_mean";
        case OffsetMode::zero_sum: return "zero_sum";
    }
    return "?";
}

OffsetMode offset_mode_from_string(const std::string& s) {
    if (s == "zero_band") return OffsetMode::zero_band;
    if (s == "zero_mean") return OffsetMode::zero_mean;
    if (s == "zero_sum") return OffsetMode::zero_sum;
    throw ValidationError("unknown offset mode: " + s);
}

namespace {

// Antiderivative of sqrt(a^2 - x^2), clamped to [-a, a].
double wint(double x, double a) {
    x = std::min(std::max(x, -a), a);
    return 0.5 * (x * std::sqrt(std::max(a * a - x * x, 0.0)) + a * a * std::asin(x / a));
}

}  // namespace

FiniteInverse finite_inverse_1d(const FiniteHilbertLine& line, OffsetMode mode) {
    const int n = int(line.samples.size());
    if (n < 8) throw ValidationError("finite_inverse_1d: need at least 8 samples");
    if (!(line.U > line.L)) throw ValidationError("finite_inverse_1d: U must exceed L");
    const double L = line.L, U = line.U;
    const double d = (U - L) / double(n);
    const double eps = line.eps_margin > 0 ? line.eps_margin : 2.0 * d;
    const bool has_support = line.t_hi > line.t_lo;
    if (has_support && (line.t_lo - L < 2.0 * d - 1e-12 * d || U - line.t_hi < 2.0 * d - 1e-12 * d))
        throw ValidationError("finite_inverse_1d: support margin below 2 grid steps");
    for (double v : line.samples)
        if (!std::isfinite(v)) throw NumericError("finite_inverse_1d: non-finite sample");

    const std::vector<double>& g = line.samples;
    const double ctr = 0.5 * (L + U), a = 0.5 * (U - L);

    // Edge nodes tau_m = L + m d, m = 0..n, weighted data wg_m = W_m * g(tau_m).
    std::vector<double> wg(std::size_t(n) + 1);
    for (int m = 0; m <= n; ++m) {
        double gm;
        if (m == 0)
            gm = 1.5 * g[0] - 0.5 * g[1];
        else if (m == n)
            gm = 1.5 * g[std::size_t(n) - 1] - 0.5 * g[std::size_t(n) - 2];
        else
            gm = 0.5 * (g[std::size_t(m) - 1] + g[std::size_t(m)]);
        const double tau = L + double(m) * d;
        const double W = wint(tau + 0.5 * d - ctr, a) - wint(tau - 0.5 * d - ctr, a);
        wg[std::size_t(m)] = W * gm;
    }
    // t_j - tau_m = (j - m + 1/2) d, so the kernel depends on j - m only.
    std::vector<double> ker(2 * std::size_t(n) + 1);
    for (int q = -n; q <= n; ++q) ker[std::size_t(q + n)] = 1.0 / (kPi * (double(q) + 0.5) * d);

    FiniteInverse out;
    out.f.assign(std::size_t(n), 0.0);
    out.flagged.assign(std::size_t(n), 0);
    std::vector<double> I(static_cast<std::size_t>(n)), pre(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        const double* kj = ker.data() + (j + n);
        for (int m = 0; m <= n; ++m) acc += wg[std::size_t(m)] * kj[-m];
        I[std::size_t(j)] = acc;
        const double t = L + (double(j) + 0.5) * d;
        pre[std::size_t(j)] = std::sqrt(std::max((t - L) * (U - t), eps * eps));
        out.flagged[std::size_t(j)] = (t - L < eps || U - t < eps) ? 1 : 0;
    }

    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j) {
        const double t = L + (double(j) + 0.5) * d;
        bool use;
        if (mode == OffsetMode::zero_band && has_support)
            use = (t >= L + eps && t <= line.t_lo) || (t >= line.t_hi && t <= U - eps);
        else
            use = !out.flagged[std::size_t(j)];
        if (use) {
            num += I[std::size_t(j)] / pre[std::size_t(j)];
            den += 1.0 / pre[std::size_t(j)];
        }
    }
    if (den == 0.0) throw ValidationError("finite_inverse_1d: no zero region left to fix the offset");
    out.C = -num / den;
    out.dfdC.resize(std::size_t(n));
    for (int j = 0; j < n; ++j) {
        out.f[std::size_t(j)] = -(I[std::size_t(j)] + out.C) / pre[std::size_t(j)];
        out.dfdC[std::size_t(j)] = -1.0 / pre[std::size_t(j)];
    }
    return out;
}

namespace {

// Bilinear lookup with validity. Neighbours with zero weight are ignored so
// that grid-aligned lookups do not depend on out-of-range cells.
inline bool lookup(const Image& img, const Mask& valid, double rf, double cf, double& v) {
    const double r0f = std::floor(rf), c0f = std::floor(cf);
    const int r0 = int(r0f), c0 = int(c0f);
    const double tr = rf - r0f, tc = cf - c0f;
    const double w[4] = {(1 - tr) * (1 - tc), (1 - tr) * tc, tr * (1 - tc), tr * tc};
    const int rr[4] = {r0, r0, r0 + 1, r0 + 1};
    const int cc[4] = {c0, c0 + 1, c0, c0 + 1};
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (w[i] <= 1e-12) continue;
        if (rr[i] < 0 || rr[i] >= img.rows || cc[i] < 0 || cc[i] >= img.cols || !valid(rr[i], cc[i])) return false;
        acc += w[i] * img(rr[i], cc[i]);
    }
    v = acc;
    return true;
}

template <class Body>
void run_rows(int n, Exec exec, Body&& body) {
    if (exec == Exec::serial) {
        for (int r = 0; r < n; ++r) body(r);
    } else {
#pragma omp parallel for schedule(dynamic, 4)
        for (int r = 0; r < n; ++r) body(r);
    }
}

}  // namespace

namespace {

// Fills the rotated grid with Hilbert data from sample(world point, value&)
// and inverts every row.
template <class Sampler>
RotatedInverse invert_rows_impl(const ImageGrid& grid, const DirectionalOptions& opt, double phi, Exec exec,
                                Sampler&& sample) {
    grid.validate();
    if (!(opt.support_radius > 0)) throw ValidationError("directional_inverse: support radius must be > 0");
    const int N = grid.n;
    const int P = padded_side(N, opt.pad_rate);
    const double px = grid.pixel_size;
    const Vec2 e{std::cos(phi), std::sin(phi)};
    const Vec2 en{-std::sin(phi), std::cos(phi)};
    const double half = 0.5 * double(P - 1);
    const Vec2 sc = opt.support_center - grid.center;
    const double tc = dot(sc, e), vc = dot(sc, en);
    const double R = opt.support_radius;

    Image g(P, P, 0.0);
    Mask gv(P, P, 0);
    run_rows(P, exec, [&](int r) {
        const double v = (half - double(r)) * px;
        for (int c = 0; c < P; ++c) {
            const double t = (double(c) - half) * px;
            double val;
            if (sample(grid.center + t * e + v * en, val)) {
                g(r, c) = kDbpToHilbert * val;
                gv(r, c) = 1;
            }
        }
    });

    // Row inversion.
    RotatedInverse rot;
    rot.grid = grid;
    rot.P = P;
    rot.e = e;
    rot.en = en;
    rot.f = Image(P, P, 0.0);
    rot.dfdC = Image(P, P, 0.0);
    rot.valid = Mask(P, P, 0);
    const OffsetMode row_mode = opt.mode == OffsetMode::zero_sum ? OffsetMode::zero_mean : opt.mode;
    std::atomic<bool> clipped{false};
    std::atomic<int> inverted{0};
    std::exception_ptr row_error;
    run_rows(P, exec, [&](int r) {
        const double v = (half - double(r)) * px;
        const bool has_sup = std::fabs(v - vc) < R;
        const double hw = has_sup ? std::sqrt(R * R - (v - vc) * (v - vc)) : 0.0;
        // Valid runs on this row.
        int best_a = -1, best_z = -1;
        int c = 0;
        while (c < P) {
            if (!gv(r, c)) {
                ++c;
                continue;
            }
            int z = c;
            while (z + 1 < P && gv(r, z + 1)) ++z;
            const double L = (double(c) - half - 0.5) * px, U = (double(z) - half + 0.5) * px;
            if (has_sup) {
                if (L <= tc && tc <= U) best_a = c, best_z = z;
            } else if (z - c > best_z - best_a) {
                best_a = c, best_z = z;
            }
            c = z + 1;
        }
        if (best_a < 0 || best_z - best_a + 1 < 8) return;
        FiniteHilbertLine line;
        line.L = (double(best_a) - half - 0.5) * px;
        line.U = (double(best_z) - half + 0.5) * px;
        line.eps_margin = opt.eps_steps * px;
        if (has_sup) {
            line.t_lo = tc - hw;
            line.t_hi = tc + hw;
            if (line.t_lo - line.L < 2.0 * px || line.U - line.t_hi < 2.0 * px) {
                clipped = true;
                return;
            }
        } else {
            line.t_lo = line.t_hi = 0.5 * (line.L + line.U);
        }
        line.samples.assign(g.row(r) + best_a, g.row(r) + best_z + 1);
        FiniteInverse inv;
        try {
            inv = finite_inverse_1d(line, row_mode);
        } catch (...) {
#pragma omp critical(lct_row_error)
            if (!row_error) row_error = std::current_exception();
            return;
        }
        ++inverted;
        for (int k = 0; k < int(inv.f.size()); ++k) {
            rot.f(r, best_a + k) = inv.f[std::size_t(k)];
            rot.dfdC(r, best_a + k) = inv.dfdC[std::size_t(k)];
            rot.valid(r, best_a + k) = inv.flagged[std::size_t(k)] ? 0 : 1;
        }
    });
    if (row_error) std::rethrow_exception(row_error);
    if (clipped && inverted == 0) throw ValidationError("directional_inverse: the support is clipped on every row");
    if (clipped) warn("directional_inverse: some rows do not cover the support; marked invalid");

    return rot;
}

}  // namespace

RotatedInverse invert_rows(const DBPImage& dbp, const ImageGrid& grid, const DirectionalOptions& opt, Exec exec) {
    if (!dbp.eta) throw ValidationError("directional_inverse: DBP image has no filtering direction");
    if (!(dbp.grid == grid)) throw ValidationError("directional_inverse: grid mismatch");
    return invert_rows_impl(grid, opt, dbp.filter_angle(), exec, [&](Vec2 w, double& val) {
        return lookup(dbp.values, dbp.validity, grid.rowf(w.y), grid.colf(w.x), val);
    });
}

RotatedInverse invert_rows(const Sinogram& sino, const DerivTable& deriv, const ImageGrid& grid,
                           const DirectionalOptions& opt, FovRule rule, Exec exec) {
    const SegmentGeometry& geo = sino.geom;
    const double tol = 1e-9 * geo.traj_len;
    const double s0 = -0.5 * geo.traj_len, s1 = 0.5 * geo.traj_len;
    return invert_rows_impl(grid, opt, geo.theta, exec, [&](Vec2 w, double& val) {
        double lo, hi;
        if (!detector_source_interval(geo, w, lo, hi)) return false;
        if (rule == FovRule::detector_bounded ? !(lo >= s0 - tol && hi <= s1 + tol) : !(lo < s0 && hi > s1))
            return false;
        bool ok = false;
        val = backproject_point(sino, deriv, w, rule, ok);
        return ok;
    });
}

Recon rotate_back(const RotatedInverse& rot, Exec exec) {
    const ImageGrid& grid = rot.grid;
    const int N = grid.n;
    const double px = grid.pixel_size;
    const double half = 0.5 * double(rot.P - 1);
    const Vec2 e = rot.e, en = rot.en;
    Recon out{Image(N, N, 0.0), Mask(N, N, 0)};
    run_rows(N, exec, [&](int r) {
        for (int cc = 0; cc < N; ++cc) {
            const Vec2 p = grid.point(r, cc) - grid.center;
            const double t = dot(p, e), v = dot(p, en);
            double val;
            if (lookup(rot.f, rot.valid, half - v / px, t / px + half, val)) {
                out.values(r, cc) = val;
                out.valid(r, cc) = 1;
            }
        }
    });
    return out;
}

Recon directional_inverse(const DBPImage& dbp, const ImageGrid& grid, const DirectionalOptions& opt, Exec exec) {
    if (opt.mode == OffsetMode::zero_sum)
        throw ValidationError("directional_inverse: zero_sum offsets need all segments (use bpf_reconstruct)");
    return rotate_back(invert_rows(dbp, grid, opt, exec), exec);
}

namespace {

// Bilinear taps of the rotate_back lookup at image pixel (r, c).
int taps(const RotatedInverse& rot, int r, int c, int* rr, int* cc, double* w) {
    const ImageGrid& grid = rot.grid;
    const double px = grid.pixel_size;
    const double half = 0.5 * double(rot.P - 1);
    const Vec2 p = grid.point(r, c) - grid.center;
    const double rf = half - dot(p, rot.en) / px, cf = dot(p, rot.e) / px + half;
    const double r0f = std::floor(rf), c0f = std::floor(cf);
    const double tr = rf - r0f, tc = cf - c0f;
    const double ws[4] = {(1 - tr) * (1 - tc), (1 - tr) * tc, tr * (1 - tc), tr * tc};
    int n = 0;
    for (int i = 0; i < 4; ++i) {
        if (ws[i] <= 1e-12) continue;
        rr[n] = int(r0f) + i / 2;
        cc[n] = int(c0f) + i % 2;
        w[n] = ws[i];
        ++n;
    }
    return n;
}

}  // namespace

void fit_joint_offsets(std::vector<RotatedInverse>& rots, const Mask& zero_region) {
    if (rots.empty()) return;
    const ImageGrid& grid = rots[0].grid;
    const int N = grid.n;
    if (zero_region.rows != N || zero_region.cols != N) throw ValidationError("fit_joint_offsets: mask shape");
    std::vector<std::size_t> base(rots.size() + 1, 0);
    for (std::size_t i = 0; i < rots.size(); ++i) base[i + 1] = base[i] + std::size_t(rots[i].P);
    const std::size_t nu = base.back();

    // Sparse rows of A (one per zero-region pixel) and the current residual.
    std::vector<std::size_t> ptr{0};
    std::vector<std::uint32_t> col;
    std::vector<double> val, res;
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < N; ++c) {
            if (!zero_region(r, c)) continue;
            double sum = 0.0;
            const std::size_t first = col.size();
            bool ok = true;
            for (std::size_t i = 0; i < rots.size() && ok; ++i) {
                int rr[4], cc[4];
                double w[4];
                const int n = taps(rots[i], r, c, rr, cc, w);
                for (int k = 0; k < n; ++k) {
                    if (rr[k] < 0 || rr[k] >= rots[i].P || cc[k] < 0 || cc[k] >= rots[i].P ||
                        !rots[i].valid(rr[k], cc[k])) {
                        ok = false;
                        break;
                    }
                    sum += w[k] * rots[i].f(rr[k], cc[k]);
                    col.push_back(std::uint32_t(base[i] + std::size_t(rr[k])));
                    val.push_back(w[k] * rots[i].dfdC(rr[k], cc[k]));
                }
            }
            if (!ok) {
                col.resize(first);
                val.resize(first);
                continue;
            }
            res.push_back(sum);
            ptr.push_back(col.size());
        }
    }
    const std::size_t m = res.size();
    if (m == 0) {
        warn("fit_joint_offsets: empty zero region; offsets left unchanged");
        return;
    }

    // Dense normal equations (A'A + mu I) x = -A'res, solved by Cholesky. The
    // factor depends on the geometry only, so x is linear in the data.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Eigen::Index(nu), Eigen::Index(nu));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(nu));
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t k = ptr[p]; k < ptr[p + 1]; ++k) {
            const Eigen::Index ck = Eigen::Index(col[k]);
            b(ck) -= val[k] * res[p];
            for (std::size_t q = ptr[p]; q < ptr[p + 1]; ++q) M(Eigen::Index(col[q]), ck) += val[q] * val[k];
        }
    }
    const double mu = 1e-6 * M.diagonal().maxCoeff();
    M.diagonal().array() += mu;
    const Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericError("fit_joint_offsets: normal equations not positive definite");
    const Eigen::VectorXd x = llt.solve(b);

    for (std::size_t i = 0; i < rots.size(); ++i) {
        RotatedInverse& rot = rots[i];
        for (int row = 0; row < rot.P; ++row) {
            const double d = x(Eigen::Index(base[i] + std::size_t(row)));
            for (int c = 0; c < rot.P; ++c) rot.f(row, c) += d * rot.dfdC(row, c);
        }
    }
}

BpfResult bpf_reconstruct(const std::vector<Sinogram>& sinos, const MultiScanConfig& config, const ImageGrid& grid,
                          const BpfOptions& opt, Exec exec) {
    const auto segs = segments(config);
    grid.validate();
    if (sinos.size() != segs.size()) throw ValidationError("bpf_reconstruct: segment-count mismatch");
    std::vector<int> order(segs.size(), -1);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        for (std::size_t k = 0; k < sinos.size(); ++k) {
            if (std::fabs(std::remainder(sinos[k].geom.theta - segs[i].theta, 2 * kPi)) < 1e-9) {
                if (order[i] >= 0) throw ValidationError("bpf_reconstruct: two sinograms share a segment angle");
                order[i] = int(k);
            }
        }
        if (order[i] < 0) throw ValidationError("bpf_reconstruct: no sinogram for segment " + std::to_string(i));
    }

    DirectionalOptions dopt;
    dopt.pad_rate = opt.pad_rate;
    dopt.support_radius = opt.support_radius;
    dopt.support_center = opt.support_center;
    dopt.mode = opt.mode;

    BpfResult res{Image(grid.n, grid.n, 0.0), Mask(grid.n, grid.n, 1), {}, {}};
    std::vector<DBPImage> dbps;
    std::vector<RotatedInverse> rots;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Sinogram& s = sinos[std::size_t(order[i])];
        if (s.mask) warn("bpf_reconstruct: truncated sinogram; result is best-effort");
        BackprojectOptions bo;
        bo.rule = opt.rule;
        bo.segment_id = int(i);
        const DerivTable d = diff_u(s);
        if (opt.keep_segments) dbps.push_back(backproject(s, d, grid, bo, exec));
        rots.push_back(invert_rows(s, d, grid, dopt, opt.rule, exec));
    }
    std::vector<Recon> parts;
    for (const auto& rot : rots) parts.push_back(rotate_back(rot, exec));
    if (opt.mode == OffsetMode::zero_sum) {
        // Zero region: valid for every segment and at least 1.5 pixels outside the support.
        Mask zero(grid.n, grid.n, 0);
        const double rz = opt.support_radius + 1.5 * grid.pixel_size;
        for (int r = 0; r < grid.n; ++r) {
            for (int c = 0; c < grid.n; ++c) {
                bool all = norm(grid.point(r, c) - opt.support_center) >= rz;
                for (const auto& p : parts) all = all && p.valid(r, c);
                zero(r, c) = all ? 1 : 0;
            }
        }
        fit_joint_offsets(rots, zero);
        for (std::size_t i = 0; i < rots.size(); ++i) parts[i] = rotate_back(rots[i], exec);
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t p = 0; p < res.image.size(); ++p) {
            res.image.data[p] += parts[i].values.data[p];
            res.valid.data[p] = res.valid.data[p] & parts[i].valid.data[p];
        }
    }
    if (opt.keep_segments) {
        res.dbps = std::move(dbps);
        res.segments = std::move(parts);
    }
    return res;
}

}  // namespace lct
