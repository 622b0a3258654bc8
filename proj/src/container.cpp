#include "lct/container.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace lct {

namespace {

const char kMagic[8] = {'L', 'C', 'T', 'A', 'R', 'R', '1', '\n'};

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::vector<std::uint8_t> encode(const char* dtype, int rows, int cols, const std::uint8_t* payload, std::size_t len) {
    nlohmann::ordered_json h;
    h["dtype"] = dtype;
    h["shape"] = {rows, cols};
    h["order"] = "row-major";
    h["byteorder"] = "little";
    const std::string hs = h.dump();
    std::vector<std::uint8_t> b(kMagic, kMagic + 8);
    put_u32(b, std::uint32_t(hs.size()));
    b.insert(b.end(), hs.begin(), hs.end());
    b.insert(b.end(), payload, payload + len);
    put_u64(b, xxh64(payload, len));
    return b;
}

struct Decoded {
    std::string dtype;
    int rows = 0, cols = 0;
    const std::uint8_t* payload = nullptr;
    std::size_t len = 0;
};

Decoded decode(const std::vector<std::uint8_t>& b) {
    if (b.size() < 12 || std::memcmp(b.data(), kMagic, 8) != 0) throw FormatError("array container: bad magic");
    const std::size_t hlen = std::size_t(get_le(b.data() + 8, 4));
    if (12 + hlen > b.size()) throw FormatError("array container: truncated header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(b.begin() + 12, b.begin() + 12 + std::ptrdiff_t(hlen));
    } catch (const nlohmann::json::exception&) {
        throw FormatError("array container: header is not JSON");
    }
    Decoded d;
    try {
        d.dtype = h.at("dtype").get<std::string>();
        d.rows = h.at("shape").at(0).get<int>();
        d.cols = h.at("shape").at(1).get<int>();
        if (h.at("order").get<std::string>() != "row-major" || h.at("byteorder").get<std::string>() != "little")
            throw FormatError("array container: unsupported order/byteorder");
    } catch (const nlohmann::json::exception&) {
        throw FormatError("array container: malformed header");
    }
    if (d.rows < 0 || d.cols < 0) throw FormatError("array container: bad shape");
    std::size_t elem;
    if (d.dtype == "f32")
        elem = 4;
    else if (d.dtype == "u8")
        elem = 1;
    else
        throw FormatError("array container: unsupported dtype " + d.dtype);
    d.len = std::size_t(d.rows) * std::size_t(d.cols) * elem;
    const std::size_t off = 12 + hlen;
    if (off + d.len + 8 != b.size()) throw FormatError("array container: size does not match shape");
    d.payload = b.data() + off;
    if (get_le(b.data() + off + d.len, 8) != xxh64(d.payload, d.len))
        throw FormatError("array container: checksum mismatch");
    return d;
}

void write_sidecar(const std::string& path, const nlohmann::json* sidecar) {
    if (sidecar) write_text_atomic(path + ".json", sidecar->dump(2) + "\n");
}

}  // namespace

std::vector<std::uint8_t> encode_array(const ArrayF32& a) {
    std::vector<std::uint8_t> payload(a.size() * 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &a.data[i], 4);
        for (int k = 0; k < 4; ++k) payload[4 * i + std::size_t(k)] = std::uint8_t(bits >> (8 * k));
    }
    return encode("f32", a.rows, a.cols, payload.data(), payload.size());
}

std::vector<std::uint8_t> encode_mask(const Mask& m) { return encode("u8", m.rows, m.cols, m.data.data(), m.size()); }

ArrayF32 decode_array(const std::vector<std::uint8_t>& bytes) {
    const Decoded d = decode(bytes);
    if (d.dtype != "f32") throw FormatError("array container: expected f32");
    ArrayF32 a(d.rows, d.cols);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::uint32_t bits = std::uint32_t(get_le(d.payload + 4 * i, 4));
        std::memcpy(&a.data[i], &bits, 4);
    }
    return a;
}

Mask decode_mask(const std::vector<std::uint8_t>& bytes) {
    const Decoded d = decode(bytes);
    if (d.dtype != "u8") throw FormatError("array container: expected u8");
    Mask m(d.rows, d.cols);
    std::memcpy(m.data.data(), d.payload, d.len);
    return m;
}

void write_bytes_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    namespace fs = std::filesystem;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot open for writing: " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!f) throw ValidationError("write failed: " + tmp);
    }
    fs::rename(tmp, p);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    write_bytes_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open: " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_array(const std::string& path, const ArrayF32& a, const nlohmann::json* sidecar) {
    write_bytes_atomic(path, encode_array(a));
    write_sidecar(path, sidecar);
}

void write_mask(const std::string& path, const Mask& m, const nlohmann::json* sidecar) {
    write_bytes_atomic(path, encode_mask(m));
    write_sidecar(path, sidecar);
}

std::optional<nlohmann::json> read_sidecar(const std::string& path) {
    const std::string sp = path + ".json";
    if (!std::filesystem::exists(sp)) return std::nullopt;
    const auto b = read_bytes(sp);
    try {
        return nlohmann::json::parse(b.begin(), b.end());
    } catch (const nlohmann::json::exception&) {
        throw FormatError("sidecar is not JSON: " + sp);
    }
}

ArrayF32 read_array(const std::string& path, const std::optional<std::string>& expected_digest) {
    ArrayF32 a = decode_array(read_bytes(path));
    if (expected_digest) {
        const auto sc = read_sidecar(path);
        if (!sc || !sc->contains("geometry_digest") || (*sc)["geometry_digest"].get<std::string>() != *expected_digest)
            throw FormatError("sidecar geometry digest mismatch: " + path);
    }
    return a;
}

Mask read_mask(const std::string& path) { return decode_mask(read_bytes(path)); }

ArrayF32 to_f32(const Image& img) {
    ArrayF32 a(img.rows, img.cols);
    for (std::size_t i = 0; i < img.size(); ++i) a.data[i] = float(img.data[i]);
    return a;
}

Image to_f64(const ArrayF32& a) {
    Image img(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) img.data[i] = double(a.data[i]);
    return img;
}

}  // namespace lct
