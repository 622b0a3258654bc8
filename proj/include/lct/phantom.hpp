#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lct/geometry.hpp"

namespace lct {

struct Ellipse {
    Vec2 center{};
    double a = 1.0;  // semi-axis along the tilted x axis
    double b = 1.0;
    double tilt = 0.0;
    double density = 1.0;
};

struct PhantomSpec {
    std::vector<Ellipse> ellipses;
    double support_radius = 1.0;

    // Throws ValidationError if an ellipse is degenerate or leaves the support disk.
    void validate() const;
};

// Exact line integral along the infinite line through a and b.
double line_integral(const PhantomSpec& spec, Vec2 a, Vec2 b);
// Density at a point (sum over ellipses containing it).
double density_at(const PhantomSpec& spec, Vec2 p);
// Point sampling at pixel centres; ss > 1 averages an ss x ss sub-grid.
Image rasterize(const PhantomSpec& spec, const ImageGrid& grid, int ss = 1);

PhantomSpec random_phantom(std::uint64_t seed, int n_ellipses, double support_radius);
// disk, two-disks, shepp-like, resolution-bars
PhantomSpec builtin(const std::string& name, double support_radius);
std::vector<std::string> builtin_names();

// Applies a rigid motion to every ellipse (used by tests).
PhantomSpec translated(const PhantomSpec& s, Vec2 t);
PhantomSpec scaled_density(const PhantomSpec& s, double alpha);

nlohmann::json to_json(const PhantomSpec& s);
PhantomSpec phantom_from_json(const nlohmann::json& j);

}  // namespace lct
