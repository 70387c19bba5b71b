#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cosod/dataset.hpp"
#include "cosod/synthetic.hpp"

namespace support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

  private:
    std::filesystem::path path_;
};

cosod::SaliencyMap make_map(int h, int w, std::vector<double> values);

/// Writes a small RGB PNG/JPG of the given size.
void write_image(const std::filesystem::path& file, int h, int w, unsigned char value = 90);

std::string read_file(const std::filesystem::path& file);

/// Every regular file below `root`, as sorted relative paths.
std::vector<std::string> list_files(const std::filesystem::path& root);

} // namespace support
