#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cosod {

// 64-bit FNV-1a. Used for cache keys, per-image seeds and weight checksums;
// not a cryptographic hash.
class Fnv1a {
  public:
    Fnv1a& update(std::span<const std::byte> bytes);
    Fnv1a& update(std::string_view text);
    Fnv1a& update(std::uint64_t value);
    std::uint64_t digest() const { return state_; }
    std::string hex() const;

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t hash_string(std::string_view text);

/// Derives an independent seed for a named item from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

/// Checksum over the contents of the given files in order. Missing files
/// contribute their path and a marker so that disappearance is detected.
std::string checksum_files(const std::vector<std::filesystem::path>& files);

} // namespace cosod
