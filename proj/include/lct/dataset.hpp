#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lct/hilbert.hpp"

namespace lct {

enum class PairKind { osnet, osnet_roi, mneto };
std::string to_string(PairKind k);
PairKind pair_kind_from_string(const std::string& s);

struct Roi {
    Vec2 center{};
    double radius = 1.0;
};

// In-memory (input, label) arrays.
struct PairArrays {
    Image input;
    Image label;
    std::optional<int> segment_index;
};

// Input is the overlay of the T segment DBPs, label the rasterized phantom.
PairArrays gen_osnet_pair(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid,
                          Exec exec = Exec::parallel);
// Input from ROI-truncated sinograms; label zero outside the ROI disk.
PairArrays gen_osnet_roi_pair(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid,
                              const Roi& roi, Exec exec = Exec::parallel);

struct MnetoOptions {
    int dense_n_src = 2001;
    double pad_rate = 0.5;
    OffsetMode mode = OffsetMode::zero_sum;
};

// One pair per segment: padded segment DBP and padded segment image of a BPF
// reconstruction from dense-sampling sinograms (invalid pixels set to 0).
std::vector<PairArrays> gen_mneto_pairs(const PhantomSpec& spec, const MultiScanConfig& config, const ImageGrid& grid,
                                        const MnetoOptions& opt = {}, Exec exec = Exec::parallel);

Image pad_center(const Image& img, int side);
Image crop_center(const Image& img, int side);

// True when the support disk lies inside every segment's FOV.
bool support_inside_fov(const PhantomSpec& spec, const MultiScanConfig& config);

struct SamplePair {
    std::string id;  // NNNNNN or NNNNNN_segK
    PairKind kind = PairKind::osnet;
    std::string input;  // paths relative to the dataset root
    std::string label;
    std::optional<int> segment_index;
    std::uint64_t phantom_seed = 0;
    std::string geometry_digest;
    std::string split;  // train | val | test, empty before split()
    std::vector<std::string> augmentation;
    std::string source_id;  // id of the entry an augmented copy was made from
    bool fov_warning = false;
};

struct DatasetManifest {
    nlohmann::json config;
    std::vector<SamplePair> entries;
};

nlohmann::json to_json(const SamplePair& s);
SamplePair sample_from_json(const nlohmann::json& j);
std::string manifest_ndjson(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text);

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;
};
SplitCounts split_counts(int n_phantoms, std::array<int, 3> ratio = {8, 1, 1});

// Groups entries by phantom_seed, shuffles the groups with the seed and
// assigns whole groups to splits.
DatasetManifest split(const DatasetManifest& m, std::uint64_t seed, std::array<int, 3> ratio = {8, 1, 1});

enum class AugOp { rot90, rot180, rot270, flip_h, flip_v };
std::string to_string(AugOp op);
AugOp aug_op_from_string(const std::string& s);
std::vector<AugOp> all_aug_ops();
// rot90 is counter-clockwise. Square images only for the rotations.
Image apply_op(const Image& img, AugOp op);

struct AugmentedPair {
    SamplePair meta;  // id and paths left for the caller
    PairArrays arrays;
};
// One new entry per op. Throws ValidationError unless the entry is in train.
std::vector<AugmentedPair> augment(const SamplePair& entry, const PairArrays& arrays, const std::vector<AugOp>& ops);

struct DatasetConfig {
    PairKind kind = PairKind::osnet;
    int count = 10;
    std::uint64_t seed = 7;
    MultiScanConfig scan;
    ImageGrid grid{128, 8.45 / 128.0, {}};
    double support_radius = 3.0;
    int n_ellipses = 8;
    double roi_radius = 1.5;  // osnet-roi
    MnetoOptions mneto;
    std::vector<AugOp> augment;
    std::array<int, 3> ratio = {8, 1, 1};

    void validate() const;
};

nlohmann::json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j, const DatasetConfig& defaults = {});

// Seed of phantom i.
std::uint64_t phantom_seed(std::uint64_t seed, int index);

// Generates every pair, writes arrays under root and root/manifest.ndjson.
DatasetManifest generate_dataset(const DatasetConfig& c, const std::string& root, Exec exec = Exec::parallel);

}  // namespace lct
