#include "cosod/feature_cache.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cosod/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cosod {

namespace {

constexpr const char* kManifest = "manifest.json";

std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xffU) << 24) | ((v & 0xff00U) << 8) | ((v >> 8) & 0xff00U) | (v >> 24);
}

std::vector<char> encode_le(const std::vector<float>& values) {
    std::vector<char> bytes(values.size() * sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(bytes.data(), values.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            auto u = byteswap32(std::bit_cast<std::uint32_t>(values[i]));
            std::memcpy(bytes.data() + 4 * i, &u, 4);
        }
    }
    return bytes;
}

std::vector<float> decode_le(const std::vector<char>& bytes) {
    std::vector<float> values(bytes.size() / sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes.data(), values.size() * sizeof(float));
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint32_t u;
            std::memcpy(&u, bytes.data() + 4 * i, 4);
            values[i] = std::bit_cast<float>(byteswap32(u));
        }
    }
    return values;
}

json entry_to_json(const FeatureCacheEntry& e) {
    return json{{"image_id", e.image_id},
                {"backend_id", e.backend_id},
                {"config_hash", e.config_hash},
                {"shape", {e.channels, e.height, e.width}},
                {"image_size", {e.image_h, e.image_w}},
                {"dtype", e.dtype_tag},
                {"payload", e.payload_path}};
}

FeatureCacheEntry entry_from_json(const json& j) {
    FeatureCacheEntry e;
    e.image_id = j.at("image_id").get<std::string>();
    e.backend_id = j.at("backend_id").get<std::string>();
    e.config_hash = j.at("config_hash").get<std::string>();
    const auto& shape = j.at("shape");
    e.channels = shape.at(0).get<int>();
    e.height = shape.at(1).get<int>();
    e.width = shape.at(2).get<int>();
    const auto& size = j.at("image_size");
    e.image_h = size.at(0).get<int>();
    e.image_w = size.at(1).get<int>();
    e.dtype_tag = j.at("dtype").get<std::string>();
    e.payload_path = j.at("payload").get<std::string>();
    return e;
}

std::vector<FeatureCacheEntry> read_manifest(const fs::path& dir) {
    const fs::path file = dir / kManifest;
    std::ifstream in(file);
    if (!in) {
        return {};
    }
    json j;
    try {
        in >> j;
        std::vector<FeatureCacheEntry> out;
        for (const auto& row : j.at("entries")) {
            out.push_back(entry_from_json(row));
        }
        return out;
    } catch (const json::exception& e) {
        throw CorruptionError("unreadable cache manifest " + file.string() + ": " + e.what());
    }
}

void write_manifest(const fs::path& dir, const std::string& backend_id, std::vector<FeatureCacheEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.image_id, a.config_hash) < std::tie(b.image_id, b.config_hash);
    });
    json rows = json::array();
    for (const auto& e : entries) {
        rows.push_back(entry_to_json(e));
    }
    json j{{"backend_id", backend_id}, {"entries", rows}};
    const fs::path tmp = dir / (std::string(kManifest) + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, dir / kManifest);
}

std::string payload_name(const std::string& image_id, const std::string& config_hash) {
    std::string name;
    for (char c : image_id) {
        name += (c == '/' || c == '\\') ? std::string("__") : std::string(1, c);
    }
    return name + "." + config_hash + ".bin";
}

} // namespace

FeatureCache::FeatureCache(fs::path root) : root_(std::move(root)) {}

fs::path FeatureCache::backend_dir(const std::string& backend_id) const {
    return root_ / backend_id;
}

FeatureCacheEntry FeatureCache::save(const std::string& image_id, const std::string& config_hash,
                                     const FeatureMap& data) {
    data.validate();
    const fs::path dir = backend_dir(data.backend_id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create cache directory " + dir.string() + ": " + ec.message());
    }

    FeatureCacheEntry entry;
    entry.image_id = image_id;
    entry.backend_id = data.backend_id;
    entry.config_hash = config_hash;
    entry.channels = data.channels;
    entry.height = data.grid_h;
    entry.width = data.grid_w;
    entry.image_h = data.image_h;
    entry.image_w = data.image_w;
    entry.payload_path = payload_name(image_id, config_hash);

    const auto bytes = encode_le(data.values);
    {
        std::ofstream out(dir / entry.payload_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write cache payload " + (dir / entry.payload_path).string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    auto entries = read_manifest(dir);
    std::erase_if(entries, [&](const auto& e) { return e.image_id == image_id && e.config_hash == config_hash; });
    entries.push_back(entry);
    write_manifest(dir, data.backend_id, std::move(entries));
    return entry;
}

std::optional<FeatureMap> FeatureCache::load(const std::string& image_id, const std::string& backend_id,
                                             const std::string& config_hash) const {
    const fs::path dir = backend_dir(backend_id);
    const auto entries = read_manifest(dir);
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) {
        return e.image_id == image_id && e.config_hash == config_hash;
    });
    if (it == entries.end()) {
        return std::nullopt;
    }
    const auto& e = *it;
    if (e.dtype_tag != "f32" || e.channels < 1 || e.height < 1 || e.width < 1) {
        throw CorruptionError("cache entry " + image_id + " has an invalid shape or dtype");
    }
    const fs::path payload = dir / e.payload_path;
    std::ifstream in(payload, std::ios::binary);
    if (!in) {
        throw CorruptionError("cache payload missing: " + payload.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != e.payload_bytes()) {
        throw CorruptionError("cache payload " + payload.string() + " holds " + std::to_string(bytes.size()) +
                              " bytes, manifest expects " + std::to_string(e.payload_bytes()));
    }
    FeatureMap f;
    f.channels = e.channels;
    f.grid_h = e.height;
    f.grid_w = e.width;
    f.image_h = e.image_h;
    f.image_w = e.image_w;
    f.backend_id = e.backend_id;
    f.values = decode_le(bytes);
    return f;
}

std::vector<FeatureCacheEntry> FeatureCache::entries(const std::string& backend_id) const {
    return read_manifest(backend_dir(backend_id));
}

} // namespace cosod
