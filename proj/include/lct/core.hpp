#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lct {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Row-major 2-D array.
template <class T>
struct Array2 {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Array2() = default;
    Array2(int r, int c, T fill = T{}) : rows(r), cols(c), data(std::size_t(r) * std::size_t(c), fill) {}

    T& operator()(int r, int c) { return data[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    const T& operator()(int r, int c) const { return data[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    T* row(int r) { return data.data() + std::size_t(r) * std::size_t(cols); }
    const T* row(int r) const { return data.data() + std::size_t(r) * std::size_t(cols); }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Array2<T>& o) const { return rows == o.rows && cols == o.cols; }
};

using Image = Array2<double>;
using Mask = Array2<std::uint8_t>;

// Serial reference loop or OpenMP loop. Both run the same per-item code.
enum class Exec { serial, parallel };

// Error kinds map onto CLI exit codes (usage 2, validation 3, numeric 4).
class Error : public std::runtime_error {
public:
    enum class Kind { usage, validation, numeric };
    Error(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(Kind::usage, w) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& w) : Error(Kind::validation, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(Kind::numeric, w) {}
};

// Thread count for parallel kernels. 0 restores the OpenMP default.
void set_threads(int n);
int threads();

// Warnings go to stderr unless silenced (tests silence them).
void warn(const std::string& msg);
void set_warnings_enabled(bool on);

// splitmix64 finalizer; the building block of the counter-based generator.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based generator: draw i of stream (seed, stream) is a pure function,
// so results never depend on which thread generates what.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(seed ^ mix64(stream + 0x5851f42d4c957f2dULL))) {}
    std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * (++ctr_)); }
    // [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // [0, n)
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

std::uint64_t xxh64(const void* data, std::size_t len, std::uint64_t seed = 0);
std::string hex64(std::uint64_t v);

}  // namespace lct
