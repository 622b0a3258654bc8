#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lct/dbp.hpp"

using namespace lct;

namespace {

Sinogram from_rows(int n_src, int cells, double du, double (*row)(double)) {
    SegmentGeometry g;
    g.n_src = n_src;
    g.det_cells = cells;
    g.det_cell_size = du;
    Sinogram s{g, Image(n_src, cells), std::nullopt};
    for (int k = 0; k < n_src; ++k)
        for (int j = 0; j < cells; ++j) s.values(k, j) = row(g.u_at(j));
    return s;
}

// Hilbert transform along x of the chord indicator of a centred disk,
// (1/pi) PV int rho / (x - t) dt over |t| < a.
double disk_hilbert_x(double R, double rho, Vec2 p) {
    const double a2 = R * R - p.y * p.y;
    if (a2 <= 0) return 0.0;
    const double a = std::sqrt(a2);
    return rho / kPi * std::log(std::fabs((p.x + a) / (p.x - a)));
}

// Nearly full angular coverage: sources spread far along a short-distance line.
SegmentGeometry wide_geometry() {
    SegmentGeometry g;
    g.l = 15;
    g.h = 30;
    g.traj_len = 960;
    g.n_src = 1001;
    g.det_cells = 8000;
    return g;
}

}  // namespace

TEST_CASE("diff_u examples") {
    const auto c = diff_u(from_rows(3, 20, 0.1, [](double) { return 4.0; }));
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 20; ++j) CHECK(c.values(k, j) == 0.0);

    const auto r = diff_u(from_rows(3, 20, 0.1, [](double u) { return 2.5 * u; }));
    for (int j = 0; j < 20; ++j) CHECK(r.values(1, j) == doctest::Approx(2.5).epsilon(1e-12));

    const double w = 3.0, du = 0.05;
    const Sinogram s = from_rows(2, 200, du, [](double u) { return std::sin(3.0 * u); });
    const auto d = diff_u(s);
    for (int j = 1; j < 199; ++j)
        CHECK(std::fabs(d.values(0, j) - w * std::cos(w * s.geom.u_at(j))) <= w * w * w * du * du / 6 + 1e-12);

    CHECK_THROWS_AS(diff_u(from_rows(2, 2, 0.1, [](double) { return 0.0; })), ValidationError);
}

TEST_CASE("diff_u flags cells next to unmeasured ones") {
    Sinogram s = from_rows(2, 10, 0.1, [](double u) { return u; });
    s.mask = Mask(2, 10, 1);
    (*s.mask)(0, 5) = 0;
    s.values(0, 5) = 0;
    const auto d = diff_u(s);
    for (int j = 0; j < 10; ++j) {
        CHECK(d.valid(0, j) == ((j >= 4 && j <= 6) ? 0 : 1));
        CHECK(d.valid(1, j) == 1);
    }
}

TEST_CASE("diff_u rejects non-finite measured samples") {
    Sinogram s = from_rows(2, 10, 0.1, [](double u) { return u; });
    s.values(1, 3) = std::nan("");
    CHECK_THROWS_AS(diff_u(s), NumericError);
    s.mask = Mask(2, 10, 1);
    (*s.mask)(1, 3) = 0;
    CHECK_NOTHROW(diff_u(s));
}

TEST_CASE("zero sinogram backprojects to zero with validity equal to the fov") {
    SegmentGeometry g;
    g.n_src = 101;
    g.theta = 0.3;
    Sinogram s{g, Image(g.n_src, g.det_cells, 0.0), std::nullopt};
    ImageGrid grid{40, 0.12, {}};
    const DBPImage b = backproject(s, diff_u(s), grid);
    for (double v : b.values.data) CHECK(v == 0.0);
    CHECK(b.validity.data == fov_mask(g, grid).data);
    CHECK(*b.eta == doctest::Approx(0.3 - kPi / 2));
    CHECK(b.filter_angle() == doctest::Approx(0.3));
}

TEST_CASE("backproject is linear") {
    SegmentGeometry g;
    g.n_src = 101;
    const Sinogram s = simulate(random_phantom(3, 6, 1.5), g);
    Sinogram s2 = s;
    for (double& v : s2.values.data) v *= -1.75;
    ImageGrid grid{32, 0.1, {}};
    const DBPImage a = backproject(s, diff_u(s), grid), b = backproject(s2, diff_u(s2), grid);
    double mx = 0.0;
    for (double v : a.values.data) mx = std::max(mx, std::fabs(v));
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(std::fabs(b.values.data[i] + 1.75 * a.values.data[i]) <= 1e-13 * mx);
}

TEST_CASE("dbp of a disk is -2 pi times its Hilbert transform") {
    const double R = 2.0;
    const auto spec = builtin("disk", 2 * R);
    const SegmentGeometry g = wide_geometry();
    const Sinogram s = simulate(spec, g);
    ImageGrid grid{64, 5.0 / 64, {}};
    BackprojectOptions o;
    o.rule = FovRule::all_sources_hit;
    const DBPImage b = backproject(s, diff_u(s), grid, o);
    double bh = 0, hh = 0, se = 0, ref = 0;
    long used = 0;
    for (int r = 0; r < grid.n; ++r)
        for (int c = 0; c < grid.n; ++c) {
            const Vec2 p = grid.point(r, c);
            if (!b.validity(r, c) || std::fabs(norm(p) - R) < 3 * grid.pixel_size) continue;
            if (std::fabs(std::fabs(p.y) - R) < 3 * grid.pixel_size) continue;
            const double H = disk_hilbert_x(R, 1.0, p);
            bh += b.values(r, c) * H;
            hh += H * H;
            se += std::pow(b.values(r, c) - (-2 * kPi) * H, 2);
            ref += std::pow(2 * kPi * H, 2);
            ++used;
        }
    REQUIRE(used > 1000);
    CHECK(bh / hh == doctest::Approx(-2 * kPi).epsilon(0.02));
    CHECK(std::sqrt(se / ref) <= 0.05);
    CHECK(kDbpToHilbert == doctest::Approx(-1.0 / (2.0 * kPi)));
}

TEST_CASE("backprojection quadrature converges at second order") {
    const auto spec = builtin("disk", 2.0);
    // Fine detector keeps its interpolation floor below the source-quadrature error.
    SegmentGeometry g;
    g.det_cells = 16000;
    g.det_cell_size = 0.01;
    gen::Gen rng(41);
    std::vector<Vec2> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(rng.point(0.5));
    std::vector<std::vector<double>> vals;
    for (int n : {51, 101, 201}) {
        g.n_src = n;
        const Sinogram s = simulate(spec, g);
        const DerivTable d = diff_u(s);
        std::vector<double> v;
        for (const Vec2 p : pts) {
            bool ok = false;
            v.push_back(backproject_point(s, d, p, FovRule::detector_bounded, ok));
            REQUIRE(ok);
        }
        vals.push_back(v);
    }
    double e1 = 0, e2 = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        e1 += std::pow(vals[0][i] - vals[1][i], 2);
        e2 += std::pow(vals[1][i] - vals[2][i], 2);
    }
    const double order = std::log2(std::sqrt(e1 / e2));
    MESSAGE("observed order " << order);
    CHECK(order >= 1.8);
}

TEST_CASE("dbp is local: truncation outside the roi leaves roi pixels unchanged") {
    const auto spec = builtin("shepp-like", 3.0);
    SegmentGeometry g;
    g.n_src = 201;
    g.theta = 0.5;
    const Sinogram full = simulate(spec, g);
    const Vec2 c{0.3, 0.2};
    const double radius = 1.0;
    const Sinogram t = truncate_to_roi(full, c, radius);
    ImageGrid grid{48, 2.4 / 48, c};
    const DBPImage a = backproject(full, diff_u(full), grid), b = backproject(t, diff_u(t), grid);
    const double foot = g.det_cell_size * (g.l + 3.0) / g.h;
    double mx = 0.0;
    for (double v : a.values.data) mx = std::max(mx, std::fabs(v));
    long used = 0;
    for (int r = 0; r < grid.n; ++r)
        for (int col = 0; col < grid.n; ++col) {
            if (norm(grid.point(r, col) - c) >= radius - 2 * foot || !a.validity(r, col)) continue;
            CHECK(b.validity(r, col) == 1);
            CHECK(std::fabs(a.values(r, col) - b.values(r, col)) <= 1e-6 * mx);
            ++used;
        }
    CHECK(used > 1000);
}

TEST_CASE("phantom outside every ray gives zero dbp") {
    PhantomSpec s;
    s.support_radius = 70;
    Ellipse e;
    e.center = {60, 0};
    e.a = e.b = 1;
    s.ellipses = {e};
    SegmentGeometry g;
    g.n_src = 51;
    const Sinogram sino = simulate(s, g);
    ImageGrid grid{32, 0.2, {}};
    const DBPImage b = backproject(sino, diff_u(sino), grid);
    long valid = 0;
    for (std::size_t i = 0; i < b.values.size(); ++i)
        if (b.validity.data[i]) {
            ++valid;
            CHECK(b.values.data[i] == 0.0);
        }
    CHECK(valid > 0);
}

TEST_CASE("overlay") {
    MultiScanConfig c;
    c.base.det_cells = 910;
    c.base.n_src = 101;
    const auto spec = builtin("disk", 2.0);
    std::vector<Sinogram> sinos;
    for (const auto& g : segments(c)) sinos.push_back(simulate(spec, g));
    ImageGrid grid{32, 3.0 / 32, {}};
    const auto parts = segment_dbps(sinos, grid);
    REQUIRE(parts.size() == 5);

    const DBPImage one = overlay({parts[0]});
    CHECK(gen::bit_identical(one.values, parts[0].values));
    CHECK(one.validity.data == parts[0].validity.data);
    CHECK(!one.eta);

    CHECK(gen::bit_identical(overlay({parts[0], parts[1]}).values, overlay({parts[1], parts[0]}).values));
    CHECK(gen::bit_identical(overlay({overlay({parts[0], parts[1]}), parts[2]}).values,
                             overlay({parts[0], parts[1], parts[2]}).values));

    const DBPImage all = overlay(parts);
    CHECK(all.segment_ids == std::vector<int>{0, 1, 2, 3, 4});
    for (int r = 0; r < grid.n; ++r)
        for (int col = 0; col < grid.n; ++col) {
            double sum = 0.0;
            bool valid = true;
            for (const auto& s : sinos) {
                bool v = false;
                sum += backproject_point(s, diff_u(s), grid.point(r, col), FovRule::detector_bounded, v);
                valid = valid && v;
            }
            CHECK(std::fabs(all.values(r, col) - sum) < 1e-12);
            CHECK(all.validity(r, col) == (valid ? 1 : 0));
        }

    DBPImage other = parts[1];
    other.grid.pixel_size *= 2;
    CHECK_THROWS_AS(overlay({parts[0], other}), ValidationError);
    CHECK_THROWS_AS(overlay({}), ValidationError);
}

TEST_CASE("backproject serial and parallel are bit-identical") {
    SegmentGeometry g;
    g.n_src = 201;
    g.theta = 1.1;
    const Sinogram s = simulate(builtin("shepp-like", 3.0), g);
    const DerivTable d = diff_u(s);
    ImageGrid grid{48, 6.0 / 48, {}};
    set_threads(4);
    const DBPImage p = backproject(s, d, grid, {}, Exec::parallel);
    set_threads(0);
    const DBPImage q = backproject(s, d, grid, {}, Exec::serial);
    CHECK(gen::bit_identical(p.values, q.values));
    CHECK(p.validity.data == q.validity.data);
}
