#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <opencv2/imgcodecs.hpp>

namespace fs = std::filesystem;

namespace support {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("cosod_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

cosod::SaliencyMap make_map(int h, int w, std::vector<double> values) {
    cosod::SaliencyMap m;
    m.height = h;
    m.width = w;
    m.values = std::move(values);
    return m;
}

void write_image(const fs::path& file, int h, int w, unsigned char value) {
    fs::create_directories(file.parent_path());
    cv::Mat img(h, w, CV_8UC3, cv::Scalar(value, value / 2, 255 - value));
    cv::imwrite(file.string(), img);
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> list_files(const fs::path& root) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out.push_back(fs::relative(e.path(), root).generic_string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace support
