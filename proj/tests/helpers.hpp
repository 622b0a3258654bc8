#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include <unistd.h>
#include <random>

#include "lct/core.hpp"
#include "lct/phantom.hpp"

namespace gen {

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("lct_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Seeded generator for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    lct::Vec2 point(double r) {
        const double a = uni(0.0, 2.0 * lct::kPi), rr = r * std::sqrt(uni(0.0, 1.0));
        return {rr * std::cos(a), rr * std::sin(a)};
    }
    lct::Image image(int rows, int cols, double lo = -1.0, double hi = 1.0) {
        lct::Image img(rows, cols);
        for (auto& v : img.data) v = uni(lo, hi);
        return img;
    }
};

inline double max_abs_diff(const lct::Image& a, const lct::Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

inline bool bit_identical(const lct::Image& a, const lct::Image& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(&a.data[i], &b.data[i], sizeof(double)) != 0) return false;
    return true;
}

// Hilbert transform at p along unit direction e of the phantom restricted to
// the line p + t e: each ellipse chord [t1, t2] contributes
// (rho/pi) ln|(0 - t1) / (0 - t2)|.
inline double line_hilbert(const lct::PhantomSpec& s, lct::Vec2 p, lct::Vec2 e) {
    double h = 0.0;
    for (const auto& el : s.ellipses) {
        const double c = std::cos(el.tilt), sn = std::sin(el.tilt);
        const lct::Vec2 q = p - el.center;
        const double q0x = (q.x * c + q.y * sn) / el.a, q0y = (-q.x * sn + q.y * c) / el.b;
        const double q1x = (e.x * c + e.y * sn) / el.a, q1y = (-e.x * sn + e.y * c) / el.b;
        const double al = q1x * q1x + q1y * q1y, be = q0x * q1x + q0y * q1y, ga = q0x * q0x + q0y * q0y - 1.0;
        const double disc = be * be - al * ga;
        if (disc <= 0) continue;
        const double t1 = (-be - std::sqrt(disc)) / al, t2 = (-be + std::sqrt(disc)) / al;
        h += el.density / lct::kPi * std::log(std::fabs(t1 / t2));
    }
    return h;
}

// True when an ellipse boundary lies within radius of p (probes a ring).
inline bool near_edge(const lct::PhantomSpec& s, lct::Vec2 p, double radius) {
    const double v = lct::density_at(s, p);
    for (int k = 0; k < 16; ++k) {
        const double a = 2.0 * lct::kPi * k / 16.0;
        if (lct::density_at(s, {p.x + radius * std::cos(a), p.y + radius * std::sin(a)}) != v) return true;
    }
    return false;
}

}  // namespace gen
