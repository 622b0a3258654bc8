#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lct/projector.hpp"

using namespace lct;

namespace {

SegmentGeometry small_geom(double theta = 0.0) {
    SegmentGeometry g;
    g.theta = theta;
    g.n_src = 41;
    g.det_cells = 256;
    g.det_cell_size = 0.5;
    return g;
}

PhantomSpec mirrored_x(const PhantomSpec& s) {
    PhantomSpec o = s;
    for (auto& e : o.ellipses) {
        e.center.x = -e.center.x;
        e.tilt = -e.tilt;
    }
    return o;
}

double max_abs(const Image& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

}  // namespace

TEST_CASE("simulate examples") {
    const SegmentGeometry g = small_geom();
    const Sinogram z = simulate(PhantomSpec{}, g);
    CHECK(z.values.rows == g.n_src);
    CHECK(z.values.cols == g.det_cells);
    CHECK(max_abs(z.values) == 0.0);

    SegmentGeometry odd = g;
    odd.n_src = 41;
    odd.det_cells = 257;
    const Sinogram d = simulate(builtin("disk", 2.0), odd);
    CHECK(d.values(20, 128) == doctest::Approx(2.0 * 1.0 * 1.0));
}

TEST_CASE("simulate agrees with direct line integrals at random cells") {
    gen::Gen rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto spec = random_phantom(std::uint64_t(100 + trial), 8, 2.0);
        SegmentGeometry g = small_geom(rng.uni(-kPi, kPi));
        g.det_offset = rng.uni(-1, 1);
        const Sinogram s = simulate(spec, g, trial % 2 ? Exec::serial : Exec::parallel);
        for (int i = 0; i < 100; ++i) {
            const int k = rng.integer(0, g.n_src - 1), j = rng.integer(0, g.det_cells - 1);
            const double sk = -0.5 * g.traj_len + double(k) * g.traj_len / double(g.n_src - 1);
            const double uj = (double(j) - 0.5 * (g.det_cells - 1)) * g.det_cell_size + g.det_offset;
            const double c = std::cos(g.theta), sn = std::sin(g.theta);
            const Vec2 a{sk * c + g.l * sn, sk * sn - g.l * c};
            const Vec2 b{uj * c - (g.h - g.l) * sn, uj * sn + (g.h - g.l) * c};
            CHECK(std::fabs(s.values(k, j) - line_integral(spec, a, b)) < 1e-12);
        }
    }
}

TEST_CASE("simulate is linear in the phantom") {
    const auto a = random_phantom(1, 5, 2.0), b = random_phantom(2, 5, 2.0);
    PhantomSpec ab = a;
    ab.ellipses.insert(ab.ellipses.end(), b.ellipses.begin(), b.ellipses.end());
    const SegmentGeometry g = small_geom(0.4);
    const Sinogram sa = simulate(a, g), sb = simulate(b, g), sab = simulate(ab, g);
    const Sinogram s3 = simulate(scaled_density(a, 3.0), g);
    for (std::size_t i = 0; i < sa.values.size(); ++i) {
        CHECK(std::fabs(sab.values.data[i] - sa.values.data[i] - sb.values.data[i]) < 1e-12);
        CHECK(std::fabs(s3.values.data[i] - 3.0 * sa.values.data[i]) < 1e-12);
    }
}

TEST_CASE("reversing the detector reverses the sinogram") {
    // Mirroring x' -> -x' maps (s, u) to (-s, -u); negating det_offset makes the
    // reversed cell order land on the mirrored centres.
    const auto spec = random_phantom(5, 6, 2.0);
    SegmentGeometry g = small_geom();
    g.det_offset = 0.3;
    SegmentGeometry r = g;
    r.det_offset = -0.3;
    const Sinogram a = simulate(spec, g), b = simulate(mirrored_x(spec), r);
    for (int k = 0; k < g.n_src; ++k)
        for (int j = 0; j < g.det_cells; ++j)
            CHECK(std::fabs(a.values(k, j) - b.values(g.n_src - 1 - k, g.det_cells - 1 - j)) < 1e-12);
}

TEST_CASE("simulate serial and parallel are bit-identical") {
    const auto spec = builtin("shepp-like", 2.0);
    const SegmentGeometry g = small_geom(0.7);
    set_threads(4);
    const Sinogram p = simulate(spec, g, Exec::parallel);
    set_threads(0);
    const Sinogram s = simulate(spec, g, Exec::serial);
    CHECK(gen::bit_identical(p.values, s.values));
}

TEST_CASE("project_raster examples") {
    ImageGrid grid{64, 0.07, {}};
    const SegmentGeometry g = small_geom(0.2);
    CHECK(max_abs(project_raster(Image(64, 64, 0.0), grid, g).values) == 0.0);

    gen::Gen rng(32);
    const Image img = rng.image(64, 64, 0, 1);
    Image img2 = img;
    for (double& v : img2.data) v *= -2.5;
    const Sinogram a = project_raster(img, grid, g), b = project_raster(img2, grid, g);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(b.values.data[i] == doctest::Approx(-2.5 * a.values.data[i]).epsilon(1e-12).scale(1e-300));
    CHECK_THROWS_AS(project_raster(Image(10, 10), grid, g), ValidationError);

    const Sinogram ps = project_raster(img, grid, g, Exec::serial);
    CHECK(gen::bit_identical(ps.values, a.values));
}

TEST_CASE("project_raster of a 1024 disk converges to simulate") {
    const auto spec = builtin("disk", 2.0);
    ImageGrid grid{1024, 2.1 / 1024, {}};
    SegmentGeometry g;
    g.n_src = 11;
    const Sinogram a = simulate(spec, g), r = project_raster(rasterize(spec, grid), grid, g);
    double se = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) se += std::pow(a.values.data[i] - r.values.data[i], 2);
    CHECK(std::sqrt(se / double(a.values.size())) < 0.01 * max_abs(a.values));
}

TEST_CASE("truncate_to_roi") {
    const auto spec = builtin("shepp-like", 2.0);
    const SegmentGeometry g = small_geom();
    const Sinogram s = simulate(spec, g);

    const Sinogram full = truncate_to_roi(s, {0, 0}, 2.0);
    REQUIRE(full.mask);
    for (int k = 0; k < g.n_src; ++k)
        for (int j = 0; j < g.det_cells; ++j)
            if (s.values(k, j) != 0.0) CHECK((*full.mask)(k, j) == 1);

    const Sinogram t = truncate_to_roi(s, {0.2, -0.1}, 0.5);
    REQUIRE(t.mask);
    long masked = 0;
    for (int k = 0; k < g.n_src; ++k)
        for (int j = 0; j < g.det_cells; ++j) {
            if ((*t.mask)(k, j) == 0) {
                ++masked;
                CHECK(t.values(k, j) == 0.0);
            } else {
                CHECK(t.values(k, j) == s.values(k, j));
            }
        }
    CHECK(masked > 0);

    // Brute-force count of rays meeting the ROI disk.
    long hits = 0;
    for (int k = 0; k < g.n_src; ++k)
        for (int j = 0; j < g.det_cells; ++j) {
            const Vec2 a = g.source_at(g.s_at(k)), b = g.detector_point(g.u_at(j));
            const Vec2 d = (1.0 / norm(b - a)) * (b - a);
            const Vec2 w = Vec2{0.2, -0.1} - a;
            const Vec2 foot = a + dot(w, d) * d;
            hits += norm(foot - Vec2{0.2, -0.1}) < 0.5;
        }
    CHECK(hits == long(t.values.size()) - masked);

    // Rays through the ROI centre survive.
    for (int k = 0; k < g.n_src; ++k) {
        const double u = detector_u(g, g.s_at(k), {0.2, -0.1});
        const int j = int(std::lround(g.cell_of(u)));
        if (j >= 0 && j < g.det_cells) CHECK((*t.mask)(k, j) == 1);
    }

    const Sinogram tt = truncate_to_roi(t, {0.2, -0.1}, 0.5);
    CHECK(tt.mask->data == t.mask->data);
    CHECK(gen::bit_identical(tt.values, t.values));

    CHECK_THROWS_AS(truncate_to_roi(s, {100, 100}, 0.1), ValidationError);
}

TEST_CASE("sample_bilinear") {
    ImageGrid grid{2, 1.0, {}};
    Image img(2, 2);
    img(0, 0) = 1;
    img(0, 1) = 2;
    img(1, 0) = 3;
    img(1, 1) = 4;
    CHECK(sample_bilinear(img, grid, {-0.5, 0.5}) == 1.0);
    CHECK(sample_bilinear(img, grid, {0.5, -0.5}) == 4.0);
    CHECK(sample_bilinear(img, grid, {0, 0}) == doctest::Approx(2.5));
    CHECK(sample_bilinear(img, grid, {5, 5}) == 0.0);
}
