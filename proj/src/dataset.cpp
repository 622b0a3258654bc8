#include "lct/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "lct/container.hpp"

namespace lct {

std::string to_string(PairKind k) {
    switch (k) {
        case PairKind::osnet: return "osnet";
        case PairKind::osnet_roi: return "osnet-roi";
        case PairKind::mneto: return "mneto";
    }
    return "?";
}

PairKind pair_kind_from_string(const std::string& s) {
    if (s == "osnet") return PairKind::osnet;
    if (s == "osnet-roi") return PairKind::osnet_roi;
    if (s == "mneto") return PairKind::mneto;
    throw ValidationError("unknown dataset kind: " + s);
}

namespace {

std::vector<Sinogram> simulate_all(const PhantomSpec& spec, const MultiScanConfig& config, Exec exec) {
    std::vector<Sinogram> out;
    for (const auto& g : segments(config)) out.push_back(simulate(spec, g, exec));
    return out;
}

void warn_fov(const PhantomSpec& spec, const MultiScanConfig& config) {
    if (!support_inside_fov(spec, config)) warn("phantom support extends outside the FOV");
}

}  // namespace

bool support_inside_fov(const PhantomSpec& spec, const MultiScanConfig& config) {
    const int n = 720;
    for (const auto& g : segments(config)) {
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * kPi * double(i) / double(n);
            const Vec2 p{spec.support_radius * std::cos(a), spec.support_radius * std::sin(a)};
            if (!in_fov(g, p)) return false;
        }
    }
    return true;
}

PairArrays gen_osnet_pair(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid, Exec exec) {
    spec.validate();
    config.validate();
    grid.validate();
    warn_fov(spec, config);
    PairArrays p;
    p.input = overlay(segment_dbps(simulate_all(spec, config, exec), grid, FovRule::detector_bounded, exec)).values;
    p.label = rasterize(spec, grid);
    return p;
}

PairArrays gen_osnet_roi_pair(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid,
                              const Roi& roi, Exec exec) {
    spec.validate();
    config.validate();
    grid.validate();
    if (!(roi.radius > 0.0)) throw ValidationError("ROI radius must be positive");
    for (const auto& g : segments(config)) {
        for (int i = 0; i < 360; ++i) {
            const double a = 2.0 * kPi * double(i) / 360.0;
            if (!in_fov(g, roi.center + roi.radius * Vec2{std::cos(a), std::sin(a)}))
                throw ValidationError("ROI disk is not inside the FOV");
        }
    }
    std::vector<Sinogram> sinos;
    for (auto& s : simulate_all(spec, config, exec)) sinos.push_back(truncate_to_roi(s, roi.center, roi.radius));
    PairArrays p;
    p.input = overlay(segment_dbps(sinos, grid, FovRule::detector_bounded, exec)).values;
    p.label = rasterize(spec, grid);
    for (int r = 0; r < grid.n; ++r)
        for (int c = 0; c < grid.n; ++c)
            if (norm(grid.point(r, c) - roi.center) > roi.radius) p.label(r, c) = 0.0;
    return p;
}

std::vector<PairArrays> gen_mneto_pairs(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid,
                                        const MnetoOptions& opt, Exec exec) {
    spec.validate();
    config.validate();
    grid.validate();
    if (opt.dense_n_src < 2) throw ValidationError("dense_n_src must be >= 2");
    warn_fov(spec, config);
    const int side = padded_side(grid.n, opt.pad_rate);
    MultiScanConfig dense = config;
    dense.base.n_src = opt.dense_n_src;
    const auto sparse_dbps = segment_dbps(simulate_all(spec, config, exec), grid, FovRule::detector_bounded, exec);
    std::vector<Sinogram> dense_sinos = simulate_all(spec, dense, exec);
    BpfOptions bo;
    bo.mode = opt.mode;
    bo.pad_rate = opt.pad_rate;
    bo.support_radius = spec.support_radius;
    bo.keep_segments = true;
    BpfResult dense_res = bpf_reconstruct(dense_sinos, dense, grid, bo, exec);
    std::vector<PairArrays> out;
    for (std::size_t i = 0; i < sparse_dbps.size(); ++i) {
        Recon& rec = dense_res.segments[i];
        for (std::size_t k = 0; k < rec.values.size(); ++k)
            if (!rec.valid.data[k]) rec.values.data[k] = 0.0;
        PairArrays p;
        p.input = pad_center(sparse_dbps[i].values, side);
        p.label = pad_center(rec.values, side);
        p.segment_index = int(i);
        out.push_back(std::move(p));
    }
    return out;
}

Image pad_center(const Image& img, int side) {
    if (side < img.rows || side < img.cols) throw ValidationError("pad_center: side smaller than image");
    Image out(side, side, 0.0);
    const int r0 = (side - img.rows) / 2, c0 = (side - img.cols) / 2;
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) out(r0 + r, c0 + c) = img(r, c);
    return out;
}

Image crop_center(const Image& img, int side) {
    if (side > img.rows || side > img.cols) throw ValidationError("crop_center: side larger than image");
    Image out(side, side);
    const int r0 = (img.rows - side) / 2, c0 = (img.cols - side) / 2;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) out(r, c) = img(r0 + r, c0 + c);
    return out;
}

nlohmann::json to_json(const SamplePair& s) {
    nlohmann::json j;
    j["type"] = "pair";
    j["id"] = s.id;
    j["kind"] = to_string(s.kind);
    j["input"] = s.input;
    j["label"] = s.label;
    j["segment_index"] = s.segment_index ? nlohmann::json(*s.segment_index) : nlohmann::json(nullptr);
    j["phantom_seed"] = s.phantom_seed;
    j["geometry_digest"] = s.geometry_digest;
    j["split"] = s.split;
    j["augmentation"] = s.augmentation;
    j["source_id"] = s.source_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(s.source_id);
    j["fov_warning"] = s.fov_warning;
    return j;
}

SamplePair sample_from_json(const nlohmann::json& j) {
    try {
        SamplePair s;
        s.id = j.at("id").get<std::string>();
        s.kind = pair_kind_from_string(j.at("kind").get<std::string>());
        s.input = j.at("input").get<std::string>();
        s.label = j.at("label").get<std::string>();
        if (!j.at("segment_index").is_null()) s.segment_index = j["segment_index"].get<int>();
        s.phantom_seed = j.at("phantom_seed").get<std::uint64_t>();
        s.geometry_digest = j.at("geometry_digest").get<std::string>();
        s.split = j.at("split").get<std::string>();
        s.augmentation = j.at("augmentation").get<std::vector<std::string>>();
        if (j.contains("source_id") && !j["source_id"].is_null()) s.source_id = j["source_id"].get<std::string>();
        s.fov_warning = j.value("fov_warning", false);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad manifest record: ") + e.what());
    }
}

std::string manifest_ndjson(const DatasetManifest& m) {
    std::string out = nlohmann::json{{"type", "config"}, {"config", m.config}}.dump() + "\n";
    for (const auto& e : m.entries) out += to_json(e).dump() + "\n";
    return out;
}

DatasetManifest parse_manifest(const std::string& text) {
    DatasetManifest m;
    std::istringstream in(text);
    std::string line;
    bool head = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("manifest line is not JSON");
        }
        if (head) {
            if (j.value("type", "") != "config") throw ValidationError("manifest must start with a config record");
            m.config = j.at("config");
            head = false;
        } else {
            m.entries.push_back(sample_from_json(j));
        }
    }
    if (head) throw ValidationError("empty manifest");
    return m;
}

SplitCounts split_counts(int n, std::array<int, 3> ratio) {
    const int tot = ratio[0] + ratio[1] + ratio[2];
    if (ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0 || tot <= 0) throw ValidationError("bad split ratio");
    SplitCounts c;
    c.train = int(std::lround(double(n) * ratio[0] / tot));
    c.val = int(std::lround(double(n) * ratio[1] / tot));
    c.val = std::min(c.val, n - c.train);
    c.test = n - c.train - c.val;
    return c;
}

DatasetManifest split(const DatasetManifest& m, std::uint64_t seed, std::array<int, 3> ratio) {
    std::vector<std::uint64_t> groups;
    std::map<std::uint64_t, std::size_t> index;
    for (const auto& e : m.entries) {
        if (index.emplace(e.phantom_seed, groups.size()).second) groups.push_back(e.phantom_seed);
    }
    if (groups.size() < 10) throw ValidationError("split needs at least 10 phantoms");
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    CounterRng rng(seed, 0x73706c6974ULL);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    const SplitCounts c = split_counts(int(groups.size()), ratio);
    std::vector<std::string> label(groups.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int ik = int(k);
        label[order[k]] = ik < c.train ? "train" : ik < c.train + c.val ? "val" : "test";
    }
    DatasetManifest out = m;
    for (auto& e : out.entries) e.split = label[index[e.phantom_seed]];
    return out;
}

std::string to_string(AugOp op) {
    switch (op) {
        case AugOp::rot90: return "rot90";
        case AugOp::rot180: return "rot180";
        case AugOp::rot270: return "rot270";
        case AugOp::flip_h: return "flip-h";
        case AugOp::flip_v: return "flip-v";
    }
    return "?";
}

AugOp aug_op_from_string(const std::string& s) {
    for (AugOp op : all_aug_ops())
        if (to_string(op) == s) return op;
    throw ValidationError("unknown augmentation: " + s);
}

std::vector<AugOp> all_aug_ops() { return {AugOp::rot90, AugOp::rot180, AugOp::rot270, AugOp::flip_h, AugOp::flip_v}; }

Image apply_op(const Image& img, AugOp op) {
    const int R = img.rows, C = img.cols;
    if ((op == AugOp::rot90 || op == AugOp::rot270) && R != C) throw ValidationError("rotation needs a square image");
    Image out(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            switch (op) {
                case AugOp::rot90: out(r, c) = img(c, C - 1 - r); break;
                case AugOp::rot180: out(r, c) = img(R - 1 - r, C - 1 - c); break;
                case AugOp::rot270: out(r, c) = img(R - 1 - c, r); break;
                case AugOp::flip_h: out(r, c) = img(r, C - 1 - c); break;
                case AugOp::flip_v: out(r, c) = img(R - 1 - r, c); break;
            }
        }
    }
    return out;
}

std::vector<AugmentedPair> augment(const SamplePair& entry, const PairArrays& arrays, const std::vector<AugOp>& ops) {
    if (entry.split != "train") throw ValidationError("augmentation is only allowed on the train split");
    std::vector<AugmentedPair> out;
    for (AugOp op : ops) {
        AugmentedPair a;
        a.meta = entry;
        a.meta.id.clear();
        a.meta.input.clear();
        a.meta.label.clear();
        a.meta.augmentation = entry.augmentation;
        a.meta.augmentation.push_back(to_string(op));
        a.meta.source_id = entry.id;
        a.arrays.input = apply_op(arrays.input, op);
        a.arrays.label = apply_op(arrays.label, op);
        a.arrays.segment_index = arrays.segment_index;
        out.push_back(std::move(a));
    }
    return out;
}

void DatasetConfig::validate() const {
    if (count < 1) throw ValidationError("count must be >= 1");
    scan.validate();
    grid.validate();
    if (!(support_radius > 0.0)) throw ValidationError("support_radius must be positive");
    if (n_ellipses < 1) throw ValidationError("n_ellipses must be >= 1");
    if (kind == PairKind::osnet_roi && !(roi_radius > 0.0)) throw ValidationError("roi_radius must be positive");
    if (mneto.dense_n_src < 2) throw ValidationError("dense_n_src must be >= 2");
    if (mneto.pad_rate < 0.0) throw ValidationError("pad_rate must be >= 0");
}

nlohmann::json to_json(const DatasetConfig& c) {
    nlohmann::json j;
    j["kind"] = to_string(c.kind);
    j["count"] = c.count;
    j["seed"] = c.seed;
    j["scan"] = to_json(c.scan);
    j["grid"] = to_json(c.grid);
    j["support_radius"] = c.support_radius;
    j["n_ellipses"] = c.n_ellipses;
    j["roi_radius"] = c.roi_radius;
    j["dense_n_src"] = c.mneto.dense_n_src;
    j["pad_rate"] = c.mneto.pad_rate;
    j["offset_mode"] = to_string(c.mneto.mode);
    std::vector<std::string> ops;
    for (AugOp op : c.augment) ops.push_back(to_string(op));
    j["augment"] = ops;
    j["ratio"] = c.ratio;
    return j;
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j, const DatasetConfig& d) {
    try {
        DatasetConfig c = d;
        if (j.contains("kind")) c.kind = pair_kind_from_string(j["kind"].get<std::string>());
        c.count = j.value("count", c.count);
        c.seed = j.value("seed", c.seed);
        if (j.contains("scan")) c.scan = multiscan_from_json(j["scan"], c.scan);
        if (j.contains("grid")) c.grid = grid_from_json(j["grid"], c.grid);
        c.support_radius = j.value("support_radius", c.support_radius);
        c.n_ellipses = j.value("n_ellipses", c.n_ellipses);
        c.roi_radius = j.value("roi_radius", c.roi_radius);
        c.mneto.dense_n_src = j.value("dense_n_src", c.mneto.dense_n_src);
        c.mneto.pad_rate = j.value("pad_rate", c.mneto.pad_rate);
        if (j.contains("offset_mode")) {
            c.mneto.mode = offset_mode_from_string(j["offset_mode"].get<std::string>());
        }
        if (j.contains("augment")) {
            c.augment.clear();
            for (const auto& s : j["augment"]) c.augment.push_back(aug_op_from_string(s.get<std::string>()));
        }
        if (j.contains("ratio")) c.ratio = j["ratio"].get<std::array<int, 3>>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad dataset config: ") + e.what());
    }
}

std::uint64_t phantom_seed(std::uint64_t seed, int index) { return mix64(mix64(seed) + std::uint64_t(index)); }

namespace {

std::string id_of(int n, std::optional<int> seg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d", n);
    std::string s = buf;
    if (seg) s += "_seg" + std::to_string(*seg);
    return s;
}

Roi roi_for(const DatasetConfig& c, std::uint64_t pseed) {
    CounterRng rng(pseed, 0x726f69ULL);
    const double reach = std::max(0.0, 0.5 * (c.support_radius - c.roi_radius));
    const double a = rng.uniform(0.0, 2.0 * kPi);
    const double r = reach * std::sqrt(rng.uniform());
    return {{r * std::cos(a), r * std::sin(a)}, c.roi_radius};
}

}  // namespace

DatasetManifest generate_dataset(const DatasetConfig& c, const std::string& root, Exec exec) {
    namespace fs = std::filesystem;
    c.validate();
    const std::string digest = geometry_digest(c.scan, c.grid);

    // One placeholder entry per phantom fixes the split before any compute.
    DatasetManifest plan;
    plan.config = to_json(c);
    for (int i = 0; i < c.count; ++i) {
        SamplePair s;
        s.kind = c.kind;
        s.phantom_seed = phantom_seed(c.seed, i);
        s.geometry_digest = digest;
        plan.entries.push_back(s);
    }
    plan = split(plan, c.seed, c.ratio);

    DatasetManifest m;
    m.config = plan.config;
    int next = 0;
    auto emit = [&](SamplePair meta, const PairArrays& arrays, int number) {
        meta.id = id_of(number, arrays.segment_index);
        meta.segment_index = arrays.segment_index;
        meta.input = meta.split + "/inputs/" + meta.id + ".lct";
        meta.label = meta.split + "/labels/" + meta.id + ".lct";
        nlohmann::json side;
        side["geometry_digest"] = digest;
        side["kind"] = to_string(meta.kind);
        side["phantom_seed"] = meta.phantom_seed;
        side["segment_index"] = meta.segment_index ? nlohmann::json(*meta.segment_index) : nlohmann::json(nullptr);
        side["role"] = "input";
        write_array((fs::path(root) / meta.input).string(), to_f32(arrays.input), &side);
        side["role"] = "label";
        write_array((fs::path(root) / meta.label).string(), to_f32(arrays.label), &side);
        m.entries.push_back(meta);
        return meta;
    };

    for (const SamplePair& p : plan.entries) {
        const PhantomSpec spec = random_phantom(p.phantom_seed, c.n_ellipses, c.support_radius);
        SamplePair base = p;
        base.fov_warning = !support_inside_fov(spec, c.scan);
        std::vector<PairArrays> pairs;
        switch (c.kind) {
            case PairKind::osnet: pairs.push_back(gen_osnet_pair(spec, c.scan, c.grid, exec)); break;
            case PairKind::osnet_roi:
                pairs.push_back(gen_osnet_roi_pair(spec, c.scan, c.grid, roi_for(c, p.phantom_seed), exec));
                break;
            case PairKind::mneto: pairs = gen_mneto_pairs(spec, c.scan, c.grid, c.mneto, exec); break;
        }
        const int number = next++;
        std::vector<SamplePair> written;
        for (const auto& a : pairs) written.push_back(emit(base, a, number));
        if (base.split == "train" && !c.augment.empty()) {
            std::vector<std::vector<AugmentedPair>> per_pair;
            for (std::size_t k = 0; k < pairs.size(); ++k) per_pair.push_back(augment(written[k], pairs[k], c.augment));
            for (std::size_t o = 0; o < c.augment.size(); ++o) {
                const int an = next++;
                for (auto& pp : per_pair) emit(pp[o].meta, pp[o].arrays, an);
            }
        }
    }
    write_text_atomic((fs::path(root) / "manifest.ndjson").string(), manifest_ndjson(m));
    return m;
}

}  // namespace lct
