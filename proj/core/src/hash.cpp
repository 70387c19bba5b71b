#include "cosod/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>

namespace cosod {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a& Fnv1a::update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= kFnvPrime;
    }
    return *this;
}

Fnv1a& Fnv1a::update(std::string_view text) {
    return update(std::as_bytes(std::span(text.data(), text.size())));
}

Fnv1a& Fnv1a::update(std::uint64_t value) {
    std::array<std::byte, 8> bytes{};
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<std::byte>((value >> (8 * i)) & 0xffU);
    }
    return update(bytes);
}

std::string Fnv1a::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::uint64_t hash_string(std::string_view text) {
    return Fnv1a{}.update(text).digest();
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    return Fnv1a{}.update(seed).update(key).digest();
}

std::string checksum_files(const std::vector<std::filesystem::path>& files) {
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    for (const auto& file : files) {
        h.update(file.generic_string());
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            h.update(std::string_view("<missing>"));
            continue;
        }
        while (in) {
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            auto n = static_cast<std::size_t>(in.gcount());
            h.update(std::as_bytes(std::span(buf.data(), n)));
        }
    }
    return h.hex();
}

} // namespace cosod
