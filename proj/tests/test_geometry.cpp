#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lct/geometry.hpp"

using namespace lct;

namespace {

SegmentGeometry seg(double theta = 0.0) {
    SegmentGeometry g;
    g.theta = theta;
    return g;
}

// Distance from the origin to the line through p with direction d.
double line_distance(Vec2 p, Vec2 d) { return std::fabs(p.x * d.y - p.y * d.x) / norm(d); }

}  // namespace

TEST_CASE("source_position examples") {
    Vec2 s = source_position(seg(0.0), 0.0);
    CHECK(s.x == doctest::Approx(0.0));
    CHECK(s.y == doctest::Approx(-15.0));

    s = source_position(seg(0.0), -kPi / 4);
    CHECK(s.x == doctest::Approx(15.0));
    CHECK(s.y == doctest::Approx(-15.0));
    CHECK(norm(s) * std::cos(-kPi / 4) == doctest::Approx(15.0));

    s = source_position(seg(kPi / 6), -kPi / 6);
    CHECK(s.x == doctest::Approx(7.5));
    CHECK(s.y == doctest::Approx(-12.990381).epsilon(1e-6));
    CHECK_THROWS_AS(source_position(seg(0.0), kPi / 2), NumericError);
}

TEST_CASE("arclength_to_lambda examples") {
    CHECK(arclength_to_lambda(seg(0.0), 0.0) == doctest::Approx(0.0));
    CHECK(arclength_to_lambda(seg(0.0), -15.0) == doctest::Approx(kPi / 4));
    CHECK(arclength_to_lambda(seg(kPi / 2), 0.0) == doctest::Approx(-kPi / 2));
}

TEST_CASE("detector_u examples") {
    CHECK(detector_u(seg(), 0.0, {0, 0}) == doctest::Approx(0.0));
    CHECK(detector_u(seg(), 0.0, {1, 0}) == doctest::Approx(12.666667).epsilon(1e-6));
    CHECK(detector_u(seg(), 5.0, {0, 0}) == doctest::Approx(-58.333333).epsilon(1e-6));
    CHECK_THROWS_AS(detector_u(seg(), 0.0, {0, -15.0}), NumericError);
}

TEST_CASE("magnification examples") {
    CHECK(magnification(seg()) == doctest::Approx(12.666667).epsilon(1e-6));
    SegmentGeometry g = seg();
    g.h = 110;
    CHECK(magnification(g) == doctest::Approx(7.333333).epsilon(1e-6));
    g.h = g.l;
    CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("segment angles") {
    MultiScanConfig c;
    auto s = segments(c);
    REQUIRE(s.size() == 5);
    const double expect[5] = {0, 36.5, 73, 109.5, 146};
    for (int i = 0; i < 5; ++i) CHECK(rad2deg(s[std::size_t(i)].theta) == doctest::Approx(expect[i]));

    c.T = 1;
    c.theta0 = 0.3;
    s = segments(c);
    REQUIRE(s.size() == 1);
    CHECK(s[0].theta == 0.3);

    c.T = 2;
    c.delta_theta = deg2rad(90);
    c.theta0 = deg2rad(45);
    s = segments(c);
    CHECK(rad2deg(s[0].theta) == doctest::Approx(45));
    CHECK(rad2deg(s[1].theta) == doctest::Approx(135));
}

TEST_CASE("validation rejects bad configs") {
    SegmentGeometry g;
    g.n_src = 1;
    CHECK_THROWS_AS(g.validate(), ValidationError);
    g = SegmentGeometry{};
    g.det_cells = 1;
    CHECK_THROWS_AS(g.validate(), ValidationError);
    g = SegmentGeometry{};
    g.traj_len = 0;
    CHECK_THROWS_AS(g.validate(), ValidationError);
    MultiScanConfig c;
    c.T = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    ImageGrid grid;
    grid.pixel_size = 0;
    CHECK_THROWS_AS(grid.validate(), ValidationError);
}

TEST_CASE("fov: origin inside for the default geometry") {
    MultiScanConfig c;
    for (const auto& g : segments(c)) CHECK(in_fov(g, {0, 0}));
    ImageGrid grid{64, 0.1, {}};
    const Mask m = fov_mask(c, grid);
    CHECK(m(31, 31) == 1);
}

TEST_CASE("fov: far pixels are outside") {
    MultiScanConfig c;
    const double bound = c.base.det_cells * c.base.det_cell_size * c.base.l / c.base.h + 0.5 * c.base.traj_len;
    gen::Gen rng(11);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uni(0, 2 * kPi), r = bound + rng.uni(0.01, 5.0);
        for (const auto& g : segments(c)) CHECK_FALSE(in_fov(g, {r * std::cos(a), r * std::sin(a)}));
    }
}

TEST_CASE("fov grows with trajectory length") {
    ImageGrid grid{64, 0.14, {}};
    long prev = -1;
    for (double LS = 12; LS <= 20; LS += 1) {
        MultiScanConfig c;
        c.base.traj_len = LS;
        const Mask m = fov_mask(c, grid);
        long count = 0;
        for (auto v : m.data) count += v;
        CHECK(count >= prev);
        prev = count;
    }
    CHECK(prev > 0);
}

TEST_CASE("fov of several segments is the AND of the segment masks") {
    MultiScanConfig c;
    c.base.det_cells = 910;
    ImageGrid grid{48, 0.2, {0.3, -0.2}};
    for (FovRule rule : {FovRule::detector_bounded, FovRule::all_sources_hit}) {
        const Mask all = fov_mask(c, grid, rule);
        Mask acc(grid.n, grid.n, 1);
        for (const auto& g : segments(c)) {
            const Mask s = fov_mask(g, grid, rule);
            for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] = acc.data[i] && s.data[i];
        }
        CHECK(all.data == acc.data);
    }
}

TEST_CASE("all-sources-hit rule: every sampled source lands on the detector") {
    SegmentGeometry g;
    g.h = 30;
    g.traj_len = 60;
    g.det_cells = 4000;
    g.n_src = 101;
    gen::Gen rng(5);
    int inside = 0;
    for (int i = 0; i < 300; ++i) {
        const Vec2 p = rng.point(3.0);
        bool all_hit = true;
        for (int k = 0; k < g.n_src; ++k) {
            const double u = detector_u(g, g.s_at(k), p);
            all_hit = all_hit && u > g.u_at(0) && u < g.u_at(g.det_cells - 1);
        }
        CHECK(in_fov(g, p, FovRule::all_sources_hit) == all_hit);
        inside += all_hit;
    }
    CHECK(inside > 0);
}

TEST_CASE("property: trajectory lines keep distance l from the origin") {
    gen::Gen rng(1);
    for (int i = 0; i < 1000; ++i) {
        SegmentGeometry g = seg(rng.uni(-kPi, kPi));
        g.l = rng.uni(5, 40);
        const double lambda = rng.uni(-1.4, 1.4) - g.theta;
        const Vec2 s = source_position(g, lambda);
        CHECK(line_distance(s, g.dir()) == doctest::Approx(g.l).epsilon(1e-9));
    }
}

TEST_CASE("property: arclength and lambda compose") {
    gen::Gen rng(2);
    for (int i = 0; i < 1000; ++i) {
        SegmentGeometry g = seg(rng.uni(-kPi, kPi));
        const double s = rng.uni(-0.5 * g.traj_len, 0.5 * g.traj_len);
        const Vec2 a = source_position(g, arclength_to_lambda(g, s));
        const Vec2 foot{g.l * std::sin(g.theta), -g.l * std::cos(g.theta)};
        const Vec2 b = foot + s * g.dir();
        CHECK(norm(a - b) < 1e-9);
        CHECK(norm(g.source_at(s) - b) < 1e-9);
    }
}

TEST_CASE("property: source, point and detector hit are collinear") {
    gen::Gen rng(3);
    for (int i = 0; i < 1000; ++i) {
        SegmentGeometry g = seg(rng.uni(-kPi, kPi));
        const double s = rng.uni(-10, 10);
        const Vec2 p = rng.point(5.0);
        const Vec2 S = g.source_at(s);
        const Vec2 D = g.detector_point(detector_u(g, s, p));
        const Vec2 a = p - S, b = D - S;
        CHECK(std::fabs(a.x * b.y - a.y * b.x) / (norm(a) * norm(b)) < 1e-9);
    }
}

TEST_CASE("property: local frame round trip") {
    gen::Gen rng(4);
    for (int i = 0; i < 200; ++i) {
        SegmentGeometry g = seg(rng.uni(-kPi, kPi));
        const Vec2 p = rng.point(10);
        CHECK(norm(g.to_world(g.to_local(p)) - p) < 1e-12);
    }
}

TEST_CASE("detector cells") {
    SegmentGeometry g;
    g.det_cells = 4;
    g.det_cell_size = 1.0;
    g.det_offset = 0.25;
    CHECK(g.u_at(0) == doctest::Approx(-1.25));
    CHECK(g.u_at(3) == doctest::Approx(1.75));
    CHECK(g.cell_of(g.u_at(2)) == doctest::Approx(2.0));
}

TEST_CASE("image grid mapping") {
    ImageGrid grid{4, 0.5, {1.0, 2.0}};
    CHECK(grid.x_of(0) == doctest::Approx(0.25));
    CHECK(grid.y_of(0) == doctest::Approx(2.75));
    CHECK(grid.colf(grid.x_of(3)) == doctest::Approx(3.0));
    CHECK(grid.rowf(grid.y_of(1)) == doctest::Approx(1.0));
}

TEST_CASE("padded side") {
    CHECK(padded_side(1024, 0.5) == 1536);
    CHECK(padded_side(512, 0.5) == 768);
    CHECK(padded_side(128, 0.5) == 192);
    CHECK(padded_side(101, 0.5) % 2 == 0);
}

TEST_CASE("geometry json round trip and digest") {
    MultiScanConfig c;
    c.base.det_cells = 910;
    c.theta0 = 0.1;
    const MultiScanConfig d = multiscan_from_json(to_json(c));
    CHECK(d.T == c.T);
    CHECK(d.delta_theta == doctest::Approx(c.delta_theta));
    CHECK(d.theta0 == doctest::Approx(c.theta0));
    CHECK(d.base.det_cells == 910);
    ImageGrid grid{64, 0.1, {0.5, -0.5}};
    const ImageGrid g2 = grid_from_json(to_json(grid));
    CHECK(g2 == grid);
    CHECK(geometry_digest(c, grid) == geometry_digest(c, grid));
    CHECK(geometry_digest(c, grid) != geometry_digest(MultiScanConfig{}, grid));
    CHECK(geometry_digest(c, grid).size() == 16);
}
