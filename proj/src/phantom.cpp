#include "lct/phantom.hpp"

#include <algorithm>
#include <array>

namespace lct {

void PhantomSpec::validate() const {
    if (!(support_radius > 0)) throw ValidationError("support_radius must be > 0");
    for (std::size_t i = 0; i < ellipses.size(); ++i) {
        const Ellipse& e = ellipses[i];
        if (!(e.a > 0 && e.b > 0)) throw ValidationError("ellipse " + std::to_string(i) + ": semi-axes must be > 0");
        if (norm(e.center) + std::max(e.a, e.b) > support_radius * (1 + 1e-12))
            throw ValidationError("ellipse " + std::to_string(i) + " leaves the support disk");
    }
}

double line_integral(const PhantomSpec& spec, Vec2 a, Vec2 b) {
    const Vec2 d0 = b - a;
    const double len = norm(d0);
    if (len < 1e-12) throw NumericError("line_integral: degenerate segment");
    const Vec2 d{d0.x / len, d0.y / len};
    double sum = 0.0;
    for (const Ellipse& e : spec.ellipses) {
        const double c = std::cos(e.tilt), s = std::sin(e.tilt);
        const Vec2 p = a - e.center;
        // Map to the unit circle: q(t) = q0 + t q1.
        const double q0x = (p.x * c + p.y * s) / e.a, q0y = (-p.x * s + p.y * c) / e.b;
        const double q1x = (d.x * c + d.y * s) / e.a, q1y = (-d.x * s + d.y * c) / e.b;
        const double al = q1x * q1x + q1y * q1y;
        const double be = q0x * q1x + q0y * q1y;
        const double ga = q0x * q0x + q0y * q0y - 1.0;
        const double disc = be * be - al * ga;
        if (disc > 0) sum += e.density * 2.0 * std::sqrt(disc) / al;
    }
    return sum;
}

double density_at(const PhantomSpec& spec, Vec2 p) {
    double v = 0.0;
    for (const Ellipse& e : spec.ellipses) {
        const double c = std::cos(e.tilt), s = std::sin(e.tilt);
        const Vec2 q = p - e.center;
        const double u = (q.x * c + q.y * s) / e.a, w = (-q.x * s + q.y * c) / e.b;
        if (u * u + w * w <= 1.0) v += e.density;
    }
    return v;
}

Image rasterize(const PhantomSpec& spec, const ImageGrid& grid, int ss) {
    grid.validate();
    if (ss < 1) throw ValidationError("rasterize: supersampling factor must be >= 1");
    Image img(grid.n, grid.n, 0.0);
    const double h = grid.pixel_size / double(ss);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < grid.n; ++r) {
        for (int c = 0; c < grid.n; ++c) {
            const Vec2 p0 = grid.point(r, c);
            double acc = 0.0;
            for (int i = 0; i < ss; ++i)
                for (int j = 0; j < ss; ++j) {
                    const Vec2 p{p0.x + (double(j) + 0.5 - 0.5 * ss) * h, p0.y - (double(i) + 0.5 - 0.5 * ss) * h};
                    acc += density_at(spec, p);
                }
            img(r, c) = acc / double(ss * ss);
        }
    }
    return img;
}

PhantomSpec random_phantom(std::uint64_t seed, int n_ellipses, double R) {
    if (n_ellipses < 1) throw ValidationError("random_phantom: n_ellipses must be >= 1");
    if (!(R > 0)) throw ValidationError("random_phantom: support_radius must be > 0");
    CounterRng rng(seed, 0x7068616e746f6dULL);
    PhantomSpec s;
    s.support_radius = R;

    // Container, like a sample tube.
    Ellipse outer;
    outer.a = R * rng.uniform(0.75, 0.95);
    outer.b = outer.a * rng.uniform(0.8, 1.0);
    outer.tilt = rng.uniform(0.0, kPi);
    outer.density = rng.uniform(0.1, 0.4);
    s.ellipses.push_back(outer);

    // Budget left for negative inclusions inside each positive ellipse.
    std::vector<double> budget{outer.density};

    for (int i = 1; i < n_ellipses; ++i) {
        const bool negative = rng.uniform() < 0.15;
        if (negative) {
            // Host: a positive ellipse with budget left. The inclusion's
            // bounding circle sits inside the host's inscribed circle.
            std::vector<int> hosts;
            for (std::size_t k = 0; k < s.ellipses.size(); ++k)
                if (s.ellipses[k].density > 0 && budget[k] > 1e-6) hosts.push_back(int(k));
            if (!hosts.empty()) {
                const int k = hosts[rng.below(hosts.size())];
                const Ellipse& host = s.ellipses[std::size_t(k)];
                const double rin = std::min(host.a, host.b);
                Ellipse e;
                e.a = rin * rng.uniform(0.1, 0.4);
                e.b = e.a * rng.uniform(0.5, 1.0);
                const double reach = rin - std::max(e.a, e.b);
                const double rr = reach * std::sqrt(rng.uniform()), ph = rng.uniform(0.0, 2 * kPi);
                e.center = host.center + Vec2{rr * std::cos(ph), rr * std::sin(ph)};
                e.tilt = rng.uniform(0.0, kPi);
                const double mag = std::min(budget[std::size_t(k)], rng.uniform(0.1, 1.0));
                e.density = -mag;
                budget[std::size_t(k)] -= mag;
                s.ellipses.push_back(e);
                budget.push_back(0.0);
                continue;
            }
        }
        Ellipse e;
        e.a = R * rng.uniform(0.05, 0.4);
        e.b = R * rng.uniform(0.05, 0.4);
        const double reach = R - std::max(e.a, e.b);
        const double rr = reach * std::sqrt(rng.uniform()), ph = rng.uniform(0.0, 2 * kPi);
        e.center = {rr * std::cos(ph), rr * std::sin(ph)};
        e.tilt = rng.uniform(0.0, kPi);
        e.density = rng.uniform(0.1, 1.0);
        s.ellipses.push_back(e);
        budget.push_back(e.density);
    }
    return s;
}

namespace {

PhantomSpec shepp_like(double R) {
    // Modified Shepp-Logan table on the unit disk: x0, y0, a, b, tilt(deg), density.
    static const std::array<std::array<double, 6>, 10> T = {{
        {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
        {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
        {0.22, 0.0, 0.11, 0.31, -18.0, -0.2},
        {-0.22, 0.0, 0.16, 0.41, 18.0, -0.2},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
        {0.0, -0.605, 0.023, 0.023, 0.0, 0.1},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
    }};
    PhantomSpec s;
    s.support_radius = R;
    for (const auto& r : T) s.ellipses.push_back({{r[0] * R, r[1] * R}, r[2] * R, r[3] * R, deg2rad(r[4]), r[5]});
    return s;
}

PhantomSpec resolution_bars(double R) {
    PhantomSpec s;
    s.support_radius = R;
    // Four groups of three bars, widths shrinking group by group.
    const std::array<double, 4> w = {0.10, 0.07, 0.05, 0.035};
    const std::array<Vec2, 4> centre = {Vec2{-0.35, 0.35}, Vec2{0.35, 0.35}, Vec2{-0.35, -0.35}, Vec2{0.35, -0.35}};
    const double len = 0.36;
    for (int g = 0; g < 4; ++g) {
        const double half = 0.5 * w[std::size_t(g)];
        for (int k = -1; k <= 1; ++k) {
            Ellipse e;
            e.center = {(centre[std::size_t(g)].x + 2.0 * w[std::size_t(g)] * k) * R, centre[std::size_t(g)].y * R};
            e.a = half * R;
            e.b = 0.5 * len * R;
            e.density = 1.0;
            s.ellipses.push_back(e);
        }
    }
    return s;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"disk", "two-disks", "shepp-like", "resolution-bars"}; }

PhantomSpec builtin(const std::string& name, double R) {
    if (!(R > 0)) throw ValidationError("builtin: support_radius must be > 0");
    PhantomSpec s;
    s.support_radius = R;
    if (name == "disk") {
        s.ellipses.push_back({{0, 0}, 0.5 * R, 0.5 * R, 0.0, 1.0});
    } else if (name == "two-disks") {
        s.ellipses.push_back({{-0.45 * R, 0.0}, 0.3 * R, 0.3 * R, 0.0, 1.0});
        s.ellipses.push_back({{0.45 * R, 0.1 * R}, 0.25 * R, 0.25 * R, 0.0, 0.5});
    } else if (name == "shepp-like") {
        s = shepp_like(R);
    } else if (name == "resolution-bars") {
        s = resolution_bars(R);
    } else {
        throw ValidationError("unknown builtin phantom: " + name);
    }
    return s;
}

PhantomSpec translated(const PhantomSpec& s, Vec2 t) {
    PhantomSpec o = s;
    for (auto& e : o.ellipses) e.center = e.center + t;
    return o;
}

PhantomSpec scaled_density(const PhantomSpec& s, double alpha) {
    PhantomSpec o = s;
    for (auto& e : o.ellipses) e.density *= alpha;
    return o;
}

nlohmann::json to_json(const PhantomSpec& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : s.ellipses)
        arr.push_back({{"center", {e.center.x, e.center.y}}, {"a", e.a}, {"b", e.b}, {"tilt", e.tilt},
                       {"density", e.density}});
    return {{"support_radius", s.support_radius}, {"ellipses", arr}};
}

PhantomSpec phantom_from_json(const nlohmann::json& j) {
    PhantomSpec s;
    try {
        s.support_radius = j.at("support_radius").get<double>();
        for (const auto& e : j.at("ellipses")) {
            Ellipse el;
            el.center = {e.at("center").at(0).get<double>(), e.at("center").at(1).get<double>()};
            el.a = e.at("a").get<double>();
            el.b = e.at("b").get<double>();
            el.tilt = e.value("tilt", 0.0);
            el.density = e.at("density").get<double>();
            s.ellipses.push_back(el);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("phantom json: ") + ex.what());
    }
    s.validate();
    return s;
}

}  // namespace lct
