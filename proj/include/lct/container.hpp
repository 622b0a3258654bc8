#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lct/core.hpp"

namespace lct {

// On-disk array container:
//   "LCTARR1\n" | u32 LE header length | JSON header | payload | u64 LE XXH64(payload, seed 0)
// Header: {"dtype":"f32","shape":[rows,cols],"order":"row-major","byteorder":"little"}.
// dtype "u8" is used for validity masks. An optional sidecar JSON lives at path + ".json".

struct FormatError : ValidationError {
    explicit FormatError(const std::string& w) : ValidationError(w) {}
};

using ArrayF32 = Array2<float>;

std::vector<std::uint8_t> encode_array(const ArrayF32& a);
std::vector<std::uint8_t> encode_mask(const Mask& m);
ArrayF32 decode_array(const std::vector<std::uint8_t>& bytes);
Mask decode_mask(const std::vector<std::uint8_t>& bytes);

// Writes via a temporary file and rename.
void write_bytes_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::string& path);

void write_array(const std::string& path, const ArrayF32& a, const nlohmann::json* sidecar = nullptr);
void write_mask(const std::string& path, const Mask& m, const nlohmann::json* sidecar = nullptr);
// When expected_digest is given, the sidecar's "geometry_digest" must match.
ArrayF32 read_array(const std::string& path, const std::optional<std::string>& expected_digest = std::nullopt);
Mask read_mask(const std::string& path);
std::optional<nlohmann::json> read_sidecar(const std::string& path);

ArrayF32 to_f32(const Image& img);
Image to_f64(const ArrayF32& a);

}  // namespace lct
