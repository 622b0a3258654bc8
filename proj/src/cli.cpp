#include "lct/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "lct/container.hpp"
#include "lct/dataset.hpp"
#include "lct/metrics.hpp"

namespace lct::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Default field of view side; the pixel size follows the grid when unset.
constexpr double kFieldWidth = 8.45;

// Flags that were given are written into the config tree at a JSON pointer.
struct Binder {
    std::vector<std::function<void(json&)>> apply;

    template <class T>
    void add(CLI::App* app, const std::string& flag, const std::string& ptr, const std::string& help) {
        auto holder = std::make_shared<T>();
        CLI::Option* o = app->add_option(flag, *holder, help);
        apply.push_back([o, holder, ptr](json& j) {
            if (o->count() > 0) j[json::json_pointer(ptr)] = *holder;
        });
    }
};

void add_geometry_flags(CLI::App* s, Binder& b) {
    b.add<int>(s, "--T", "/geometry/T", "number of segments");
    b.add<double>(s, "--delta-theta", "/geometry/delta_theta_deg", "angle between segments (deg)");
    b.add<double>(s, "--ls", "/geometry/base/traj_len", "trajectory length (mm)");
    b.add<int>(s, "--n-src", "/geometry/base/n_src", "source samples per segment");
    b.add<double>(s, "--sdd", "/geometry/base/h", "source-detector distance h (mm)");
    b.add<double>(s, "--l", "/geometry/base/l", "source-centre distance (mm)");
    b.add<int>(s, "--det-cells", "/geometry/base/det_cells", "detector cells");
}

void add_phantom_flags(CLI::App* s, Binder& b) {
    b.add<std::string>(s, "--name", "/phantom/name", "builtin phantom name or 'random'");
    b.add<double>(s, "--support-radius", "/phantom/support_radius", "support radius (mm)");
    b.add<int>(s, "--n-ellipses", "/phantom/n_ellipses", "ellipses in a random phantom");
}

void add_bpf_flags(CLI::App* s, Binder& b) {
    b.add<std::string>(s, "--offset-mode", "/bpf/offset_mode", "zero_sum | zero_mean | zero_band");
    b.add<double>(s, "--pad-rate", "/bpf/pad_rate", "padding rate of the rotated grid");
    b.add<std::string>(s, "--fov-rule", "/bpf/fov_rule", "detector_bounded | all_sources_hit");
}

template <class T>
T get_or(const json& cfg, const std::string& ptr, T def) {
    const json::json_pointer p(ptr);
    return cfg.contains(p) ? cfg.at(p).get<T>() : def;
}

// Resolved settings shared by the commands.
struct Resolved {
    json cfg;
    std::string command;
    std::uint64_t seed = 7;
    MultiScanConfig scan;
    ImageGrid grid;
    std::string out;
};

ImageGrid resolve_grid(const json& cfg, int default_n) {
    ImageGrid g;
    g.n = get_or<int>(cfg, "/grid/n", default_n);
    g.pixel_size = get_or<double>(cfg, "/grid/pixel_size", kFieldWidth / double(g.n));
    if (cfg.contains(json::json_pointer("/grid/center"))) g = grid_from_json(cfg["grid"], g);
    g.validate();
    return g;
}

PhantomSpec resolve_phantom(json& cfg, std::uint64_t seed, const std::string& default_name) {
    if (cfg.contains(json::json_pointer("/inputs/phantom"))) {
        const std::string path = cfg["inputs"]["phantom"].get<std::string>();
        const auto bytes = read_bytes(path);
        json j;
        try {
            j = json::parse(bytes.begin(), bytes.end());
        } catch (const json::exception&) {
            throw ValidationError("phantom file is not JSON: " + path);
        }
        PhantomSpec s = phantom_from_json(j);
        s.validate();
        return s;
    }
    const std::string name = get_or<std::string>(cfg, "/phantom/name", default_name);
    const double R = get_or<double>(cfg, "/phantom/support_radius", 3.0);
    const int ne = get_or<int>(cfg, "/phantom/n_ellipses", 8);
    cfg["phantom"] = {{"name", name}, {"support_radius", R}, {"n_ellipses", ne}};
    PhantomSpec s = name == "random" ? random_phantom(seed, ne, R) : builtin(name, R);
    s.validate();
    return s;
}

FovRule parse_rule(const std::string& s) {
    if (s == "detector_bounded") return FovRule::detector_bounded;
    if (s == "all_sources_hit") return FovRule::all_sources_hit;
    throw ValidationError("unknown FOV rule: " + s);
}

BpfOptions resolve_bpf(json& cfg, double default_support) {
    BpfOptions o;
    const std::string mode = get_or<std::string>(cfg, "/bpf/offset_mode", "zero_sum");
    const std::string rule = get_or<std::string>(cfg, "/bpf/fov_rule", "detector_bounded");
    o.mode = offset_mode_from_string(mode);
    o.rule = parse_rule(rule);
    o.pad_rate = get_or<double>(cfg, "/bpf/pad_rate", 0.5);
    o.support_radius = get_or<double>(cfg, "/bpf/support_radius", default_support);
    if (o.pad_rate < 0) throw ValidationError("pad_rate must be >= 0");
    if (!(o.support_radius > 0)) throw ValidationError("support_radius must be > 0");
    cfg["bpf"] = {{"offset_mode", mode}, {"fov_rule", rule}, {"pad_rate", o.pad_rate}, {"support_radius", o.support_radius}};
    return o;
}

void write_config(const Resolved& r) {
    json c = r.cfg;
    c["command"] = r.command;
    write_text_atomic((fs::path(r.out) / "config.json").string(), c.dump(2) + "\n");
}

void write_pgm16(const std::string& path, const Image& img, double lo, double hi) {
    std::ostringstream s;
    s << "P5\n" << img.cols << " " << img.rows << "\n65535\n";
    std::string bytes = s.str();
    const double span = hi - lo;
    for (double v : img.data) {
        const double t = span > 0 ? (v - lo) / span : 0.0;
        const auto q = std::uint16_t(std::lround(std::min(std::max(t, 0.0), 1.0) * 65535.0));
        bytes.push_back(char(q >> 8));
        bytes.push_back(char(q & 0xff));
    }
    write_text_atomic(path, bytes);
}

std::string seg_file(int k) { return "sino_seg" + std::to_string(k) + ".lct"; }

int cmd_phantom(Resolved& r) {
    const PhantomSpec spec = resolve_phantom(r.cfg, r.seed, "shepp-like");
    if (r.cfg.value("emit_config", false)) return 0;
    fs::create_directories(r.out);
    write_text_atomic((fs::path(r.out) / "phantom.json").string(), to_json(spec).dump(2) + "\n");
    const json side = {{"geometry_digest", geometry_digest(r.scan, r.grid)}, {"grid", to_json(r.grid)}};
    write_array((fs::path(r.out) / "phantom.lct").string(), to_f32(rasterize(spec, r.grid)), &side);
    write_config(r);
    return 0;
}

int cmd_simulate(Resolved& r) {
    const PhantomSpec spec = resolve_phantom(r.cfg, r.seed, "shepp-like");
    if (r.cfg.value("emit_config", false)) return 0;
    fs::create_directories(r.out);
    const std::string digest = geometry_digest(r.scan, r.grid);
    const auto segs = segments(r.scan);
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const Sinogram s = simulate(spec, segs[k]);
        const json side = {{"geometry_digest", digest}, {"segment", to_json(segs[k])}, {"segment_index", k}};
        write_array((fs::path(r.out) / seg_file(int(k))).string(), to_f32(s.values), &side);
    }
    write_config(r);
    return 0;
}

std::vector<Sinogram> load_sinograms(const std::string& dir, const MultiScanConfig& scan) {
    std::vector<Sinogram> out;
    const auto segs = segments(scan);
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const std::string path = (fs::path(dir) / seg_file(int(k))).string();
        const auto side = read_sidecar(path);
        if (!side || !side->contains("segment")) throw ValidationError("sinogram sidecar missing: " + path);
        const SegmentGeometry g = segment_from_json((*side)["segment"]);
        const SegmentGeometry& e = segs[k];
        if (std::fabs(std::remainder(g.theta - e.theta, 2 * kPi)) > 1e-9 || g.n_src != e.n_src ||
            g.det_cells != e.det_cells || g.l != e.l || g.h != e.h || g.traj_len != e.traj_len ||
            g.det_cell_size != e.det_cell_size || g.det_offset != e.det_offset)
            throw ValidationError("sinogram geometry does not match the configured segment: " + path);
        Sinogram s;
        s.geom = e;
        s.values = to_f64(read_array(path));
        if (s.values.rows != e.n_src || s.values.cols != e.det_cells)
            throw FormatError("sinogram shape does not match its geometry: " + path);
        out.push_back(std::move(s));
    }
    return out;
}

int cmd_bpf(Resolved& r) {
    std::vector<Sinogram> sinos;
    double support = 3.0;
    std::optional<PhantomSpec> spec;
    const bool from_dir = r.cfg.contains(json::json_pointer("/inputs/sinograms"));
    if (!from_dir) {
        spec = resolve_phantom(r.cfg, r.seed, "shepp-like");
        support = spec->support_radius;
    } else {
        support = get_or<double>(r.cfg, "/phantom/support_radius", support);
    }
    const BpfOptions opt = resolve_bpf(r.cfg, support);
    if (r.cfg.value("emit_config", false)) return 0;
    if (from_dir)
        sinos = load_sinograms(r.cfg["inputs"]["sinograms"].get<std::string>(), r.scan);
    else
        for (const auto& g : segments(r.scan)) sinos.push_back(simulate(*spec, g));
    const BpfResult res = bpf_reconstruct(sinos, r.scan, r.grid, opt);
    fs::create_directories(r.out);
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < res.image.size(); ++i) {
        if (!res.valid.data[i]) continue;
        const double v = res.image.data[i];
        if (first || v < lo) lo = v;
        if (first || v > hi) hi = v;
        first = false;
    }
    const std::string digest = geometry_digest(r.scan, r.grid);
    const json side = {{"geometry_digest", digest},
                       {"grid", to_json(r.grid)},
                       {"preview", {{"file", "recon.pgm"}, {"min", lo}, {"max", hi}}}};
    write_array((fs::path(r.out) / "recon.lct").string(), to_f32(res.image), &side);
    const json vside = {{"geometry_digest", digest}};
    write_mask((fs::path(r.out) / "recon_valid.lct").string(), res.valid, &vside);
    write_pgm16((fs::path(r.out) / "recon.pgm").string(), res.image, lo, hi);
    write_config(r);
    return 0;
}

int cmd_dataset(Resolved& r) {
    DatasetConfig d;
    d.grid = r.grid;
    d.scan = r.scan;
    d.seed = r.seed;
    json dj = r.cfg.value("dataset", json::object());
    if (dj.contains("augment") && dj["augment"].is_string()) {
        std::vector<std::string> ops;
        std::stringstream ss(dj["augment"].get<std::string>());
        for (std::string t; std::getline(ss, t, ',');)
            if (!t.empty()) ops.push_back(t);
        dj["augment"] = ops;
    }
    dj.erase("seed");
    dj.erase("grid");
    dj.erase("scan");
    d = dataset_config_from_json(dj, d);
    d.validate();
    r.cfg["dataset"] = to_json(d);
    r.cfg["dataset"].erase("seed");
    r.cfg["dataset"].erase("grid");
    r.cfg["dataset"].erase("scan");
    if (r.cfg.value("emit_config", false)) return 0;
    fs::create_directories(r.out);
    generate_dataset(d, r.out);
    write_config(r);
    return 0;
}

const json& need(const json& cfg, const std::string& ptr, const std::string& flag) {
    const json::json_pointer p(ptr);
    if (!cfg.contains(p)) throw UsageError("missing required option " + flag);
    return cfg.at(p);
}

int cmd_metrics(Resolved& r) {
    const std::string ip = need(r.cfg, "/inputs/image", "--image").get<std::string>();
    const std::string lp = need(r.cfg, "/inputs/label", "--label").get<std::string>();
    if (r.cfg.value("emit_config", false)) return 0;
    const Image img = to_f64(read_array(ip));
    const Image lab = to_f64(read_array(lp));
    std::optional<Mask> mask;
    if (r.cfg.contains(json::json_pointer("/inputs/mask"))) mask = read_mask(r.cfg["inputs"]["mask"].get<std::string>());
    std::optional<double> range;
    if (r.cfg.contains(json::json_pointer("/metrics/data_range"))) range = r.cfg["metrics"]["data_range"].get<double>();
    const MetricReport rep = evaluate(img, lab, range, mask ? &*mask : nullptr);
    const std::string text = to_json(rep).dump(2) + "\n";
    fs::create_directories(r.out);
    write_text_atomic((fs::path(r.out) / "metrics.json").string(), text);
    write_config(r);
    std::cout << text;
    return 0;
}

int cmd_profile(Resolved& r) {
    const std::string ip = need(r.cfg, "/inputs/image", "--image").get<std::string>();
    const std::string ax = get_or<std::string>(r.cfg, "/profile/axis", "row");
    if (ax != "row" && ax != "col") throw ValidationError("axis must be row or col");
    if (r.cfg.value("emit_config", false)) return 0;
    const Image img = to_f64(read_array(ip));
    const Axis axis = ax == "row" ? Axis::row : Axis::col;
    const int len = axis == Axis::row ? img.cols : img.rows;
    const int across = axis == Axis::row ? img.rows : img.cols;
    const int index = get_or<int>(r.cfg, "/profile/index", across / 2);
    const int start = get_or<int>(r.cfg, "/profile/start", 0);
    const int end = get_or<int>(r.cfg, "/profile/end", len);
    r.cfg["profile"] = {{"axis", ax}, {"index", index}, {"start", start}, {"end", end}};
    const std::string csv = profile_csv(profile(img, axis, index, start, end), start);
    fs::create_directories(r.out);
    write_text_atomic((fs::path(r.out) / "profile.csv").string(), csv);
    write_config(r);
    std::cout << csv;
    return 0;
}

std::vector<double> default_sweep_values(const std::string& axis) {
    if (axis == "pixels") return {256, 512, 1024};
    if (axis == "LS") return {12, 14, 16, 18, 20};
    if (axis == "n_src") return {251, 1001, 2001};
    if (axis == "h") return {110, 130, 150, 170, 190, 210};
    throw ValidationError("unknown sweep axis: " + axis + " (pixels, LS, n_src, h)");
}

int cmd_sweep(Resolved& r) {
    const std::string axis = get_or<std::string>(r.cfg, "/sweep/axis", "n_src");
    std::vector<double> values = default_sweep_values(axis);
    if (r.cfg.contains(json::json_pointer("/sweep/values"))) values = r.cfg["sweep"]["values"].get<std::vector<double>>();
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    if (!r.cfg.contains(json::json_pointer("/phantom/support_radius"))) r.cfg["phantom"]["support_radius"] = 2.0;
    const PhantomSpec spec = resolve_phantom(r.cfg, r.seed, "disk");
    const BpfOptions opt = resolve_bpf(r.cfg, spec.support_radius);
    r.cfg["sweep"] = {{"axis", axis}, {"values", values}};

    struct Point {
        MultiScanConfig scan;
        ImageGrid grid;
    };
    std::vector<Point> pts;
    for (double v : values) {
        Point p{r.scan, r.grid};
        if (axis == "pixels") {
            p.grid.n = int(std::lround(v));
            p.grid.pixel_size = kFieldWidth / v;
        } else if (axis == "LS") {
            p.scan.base.traj_len = v;
        } else if (axis == "n_src") {
            p.scan.base.n_src = int(std::lround(v));
        } else {
            p.scan.base.h = v;
        }
        p.scan.validate();
        p.grid.validate();
        pts.push_back(p);
    }
    if (r.cfg.value("emit_config", false)) return 0;

    std::vector<BpfResult> recs;
    std::vector<Mask> masks;
    for (const auto& p : pts) {
        std::vector<Sinogram> sinos;
        for (const auto& g : segments(p.scan)) sinos.push_back(simulate(spec, g));
        recs.push_back(bpf_reconstruct(sinos, p.scan, p.grid, opt));
        Mask m = fov_mask(p.scan, p.grid, opt.rule);
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] &= recs.back().valid.data[i];
        masks.push_back(std::move(m));
    }
    // Same grid at every point: compare over the common region.
    if (axis != "pixels") {
        for (std::size_t k = 1; k < masks.size(); ++k)
            for (std::size_t i = 0; i < masks[0].size(); ++i) masks[0].data[i] &= masks[k].data[i];
        for (std::size_t k = 1; k < masks.size(); ++k) masks[k] = masks[0];
    }
    std::string csv = "axis,value,psnr,ssim,rmse\n";
    json table = json::array();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Image label = rasterize(spec, pts[k].grid);
        const MetricReport rep = evaluate(recs[k].image, label, std::nullopt, &masks[k]);
        std::ostringstream line;
        line.precision(10);
        line << axis << "," << values[k] << "," << rep.psnr << "," << rep.ssim << "," << rep.rmse << "\n";
        csv += line.str();
        json row = to_json(rep);
        row["axis"] = axis;
        row["value"] = values[k];
        table.push_back(row);
    }
    fs::create_directories(r.out);
    write_text_atomic((fs::path(r.out) / "sweep.csv").string(), csv);
    write_text_atomic((fs::path(r.out) / "sweep.json").string(), table.dump(2) + "\n");
    write_config(r);
    std::cout << csv;
    return 0;
}

std::set<fs::path> list_files(const fs::path& dir) {
    std::set<fs::path> out;
    std::error_code ec;
    if (!fs::exists(dir, ec)) return out;
    for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec))
        out.insert(it->path());
    return out;
}

// Removes everything under dir that was not in before (files first, then
// directories from the deepest).
void remove_new(const fs::path& dir, const std::set<fs::path>& before, bool dir_existed) {
    std::error_code ec;
    if (!dir_existed) {
        fs::remove_all(dir, ec);
        return;
    }
    const auto now = list_files(dir);
    std::vector<fs::path> fresh;
    for (const auto& p : now)
        if (!before.count(p)) fresh.push_back(p);
    std::sort(fresh.begin(), fresh.end(), [](const fs::path& a, const fs::path& b) {
        return std::distance(a.begin(), a.end()) > std::distance(b.begin(), b.end());
    });
    for (const auto& p : fresh) fs::remove(p, ec);
}

int fail(int code, const char* kind, const std::string& msg) {
    std::cerr << json{{"error", kind}, {"code", code}, {"message", msg}}.dump() << std::endl;
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Linear-trajectory CT: phantoms, simulation, BPF reconstruction, datasets, metrics"};
    app.require_subcommand(1);
    app.fallthrough();
    Binder b;
    std::string config_path, out = "out";
    bool emit = false;
    app.add_option("--config", config_path, "JSON config file (flags win)");
    app.add_option("--out", out, "output directory");
    b.add<std::uint64_t>(&app, "--seed", "/seed", "random seed");
    auto threads = std::make_shared<int>(0);
    CLI::Option* threads_opt = app.add_option("--threads", *threads, "worker threads (default: LCT_THREADS)");
    b.add<int>(&app, "--grid", "/grid/n", "image side in pixels");
    b.add<double>(&app, "--pixel-size", "/grid/pixel_size", "pixel size (mm)");
    app.add_flag("--emit-config", emit, "print the resolved config and exit");

    CLI::App* s_ph = app.add_subcommand("phantom", "write a PhantomSpec and its rasterization");
    add_phantom_flags(s_ph, b);
    CLI::App* s_sim = app.add_subcommand("simulate", "simulate one sinogram per segment");
    add_phantom_flags(s_sim, b);
    add_geometry_flags(s_sim, b);
    b.add<std::string>(s_sim, "--phantom", "/inputs/phantom", "PhantomSpec JSON file");
    CLI::App* s_bpf = app.add_subcommand("bpf", "BPF reconstruction from sinograms or a phantom");
    add_phantom_flags(s_bpf, b);
    add_geometry_flags(s_bpf, b);
    add_bpf_flags(s_bpf, b);
    b.add<std::string>(s_bpf, "--phantom", "/inputs/phantom", "PhantomSpec JSON file");
    b.add<std::string>(s_bpf, "--sinograms", "/inputs/sinograms", "directory written by simulate");
    CLI::App* s_ds = app.add_subcommand("dataset", "manufacture a paired dataset");
    add_geometry_flags(s_ds, b);
    b.add<std::string>(s_ds, "--kind", "/dataset/kind", "osnet | osnet-roi | mneto");
    b.add<int>(s_ds, "--count", "/dataset/count", "number of phantoms");
    b.add<std::string>(s_ds, "--augment", "/dataset/augment", "comma list of rot90,rot180,rot270,flip-h,flip-v");
    b.add<double>(s_ds, "--support-radius", "/dataset/support_radius", "phantom support radius (mm)");
    b.add<int>(s_ds, "--n-ellipses", "/dataset/n_ellipses", "ellipses per phantom");
    b.add<double>(s_ds, "--roi-radius", "/dataset/roi_radius", "ROI radius for osnet-roi (mm)");
    b.add<int>(s_ds, "--dense-n-src", "/dataset/dense_n_src", "source samples of MNetO labels");
    CLI::App* s_met = app.add_subcommand("metrics", "PSNR, SSIM and RMSE of an image against a label");
    b.add<std::string>(s_met, "--image", "/inputs/image", "image container");
    b.add<std::string>(s_met, "--label", "/inputs/label", "label container");
    b.add<std::string>(s_met, "--mask", "/inputs/mask", "u8 mask container");
    b.add<double>(s_met, "--data-range", "/metrics/data_range", "peak value (default: label max)");
    CLI::App* s_pro = app.add_subcommand("profile", "extract a row or column profile as CSV");
    b.add<std::string>(s_pro, "--image", "/inputs/image", "image container");
    b.add<std::string>(s_pro, "--axis", "/profile/axis", "row | col");
    b.add<int>(s_pro, "--index", "/profile/index", "row or column index (default: centre)");
    b.add<int>(s_pro, "--start", "/profile/start", "first sample");
    b.add<int>(s_pro, "--end", "/profile/end", "one past the last sample");
    CLI::App* s_sw = app.add_subcommand("sweep", "BPF metrics along one experiment axis");
    add_phantom_flags(s_sw, b);
    add_geometry_flags(s_sw, b);
    add_bpf_flags(s_sw, b);
    b.add<std::string>(s_sw, "--axis", "/sweep/axis", "pixels | LS | n_src | h");
    b.add<std::vector<double>>(s_sw, "--values", "/sweep/values", "axis values (default: the standard set)");

    std::vector<const char*> argv{"lct"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return 0;
        }
        return fail(2, "usage", e.what());
    }

    const fs::path out_dir(out);
    std::error_code ec;
    const bool existed = fs::exists(out_dir, ec);
    const auto before = list_files(out_dir);
    auto failure = [&](int code, const char* kind, const std::string& msg) {
        remove_new(out_dir, before, existed);
        return fail(code, kind, msg);
    };

    try {
        Resolved r;
        r.command = app.get_subcommands().front()->get_name();
        r.out = out;
        if (!config_path.empty()) {
            const auto bytes = read_bytes(config_path);
            try {
                r.cfg = json::parse(bytes.begin(), bytes.end());
            } catch (const json::exception&) {
                throw ValidationError("config file is not JSON: " + config_path);
            }
            if (!r.cfg.is_object()) throw ValidationError("config file must hold a JSON object");
            r.cfg.erase("command");
        } else {
            r.cfg = json::object();
        }
        for (auto& f : b.apply) f(r.cfg);

        int nthreads = *threads;
        if (threads_opt->count() == 0) {
            if (const char* env = std::getenv("LCT_THREADS")) {
                try {
                    nthreads = std::stoi(env);
                } catch (const std::exception&) {
                    throw UsageError("LCT_THREADS must be an integer");
                }
            }
        }
        if (nthreads < 0) throw UsageError("--threads must be >= 0");
        set_threads(nthreads);

        r.seed = get_or<std::uint64_t>(r.cfg, "/seed", 7);
        r.cfg["seed"] = r.seed;
        r.grid = resolve_grid(r.cfg, r.command == "dataset" ? 128 : 512);
        r.cfg["grid"] = to_json(r.grid);
        r.scan = multiscan_from_json(r.cfg.value("geometry", json::object()));
        r.scan.validate();
        r.cfg["geometry"] = to_json(r.scan);
        if (emit) r.cfg["emit_config"] = true;

        int rc = 0;
        if (r.command == "phantom")
            rc = cmd_phantom(r);
        else if (r.command == "simulate")
            rc = cmd_simulate(r);
        else if (r.command == "bpf")
            rc = cmd_bpf(r);
        else if (r.command == "dataset")
            rc = cmd_dataset(r);
        else if (r.command == "metrics")
            rc = cmd_metrics(r);
        else if (r.command == "profile")
            rc = cmd_profile(r);
        else
            rc = cmd_sweep(r);
        if (emit) {
            r.cfg.erase("emit_config");
            r.cfg["command"] = r.command;
            std::cout << r.cfg.dump(2) << std::endl;
        }
        return rc;
    } catch (const Error& e) {
        switch (e.kind()) {
            case Error::Kind::usage: return failure(2, "usage", e.what());
            case Error::Kind::validation: return failure(3, "validation", e.what());
            case Error::Kind::numeric: return failure(4, "numeric", e.what());
        }
        return failure(4, "numeric", e.what());
    } catch (const json::exception& e) {
        return failure(3, "validation", e.what());
    } catch (const fs::filesystem_error& e) {
        return failure(3, "validation", e.what());
    } catch (const std::exception& e) {
        return failure(4, "numeric", e.what());
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace lct::cli
