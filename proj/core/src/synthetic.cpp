#include "cosod/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cosod/error.hpp"
#include "cosod/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cosod {

void SyntheticGroupSpec::validate() const {
    if (grid_h < 1 || grid_w < 1 || channels < 1 || image_h < 1 || image_w < 1) {
        throw ConfigError("synthetic group " + group_id + " has non-positive dimensions");
    }
    if (common_embedding.size() != static_cast<std::size_t>(channels) ||
        background_embedding.size() != static_cast<std::size_t>(channels)) {
        throw ConfigError("synthetic group " + group_id + " embeddings must have " + std::to_string(channels) +
                          " entries");
    }
    if (common_embedding == background_embedding) {
        throw ConfigError("synthetic group " + group_id + " common and background embeddings are equal");
    }
    if (noise_amplitude < 0.0) {
        throw ConfigError("synthetic group " + group_id + " has negative noise amplitude");
    }
    for (const auto& img : images) {
        const auto& r = img.planted;
        if (r.row0 > r.row1 || r.col0 > r.col1 || r.row0 < 0 || r.col0 < 0 || r.row1 >= grid_h ||
            r.col1 >= grid_w) {
            throw ConfigError("planted rectangle of " + group_id + "/" + img.image_id +
                              " is empty or outside the grid");
        }
    }
}

const SyntheticImageSpec* SyntheticGroupSpec::find(const std::string& image_id) const {
    auto it = std::find_if(images.begin(), images.end(), [&](const auto& i) { return i.image_id == image_id; });
    return it == images.end() ? nullptr : &*it;
}

PixelRect SyntheticGroupSpec::to_pixels(const GridRect& r) const {
    auto col = [&](int c) { return static_cast<int>(static_cast<long long>(c) * image_w / grid_w); };
    auto row = [&](int c) { return static_cast<int>(static_cast<long long>(c) * image_h / grid_h); };
    return {col(r.col0), row(r.row0), col(r.col1 + 1), row(r.row1 + 1)};
}

std::vector<FeatureMap> synthetic_extract(const SyntheticGroupSpec& spec) {
    spec.validate();
    std::vector<FeatureMap> out;
    out.reserve(spec.images.size());
    for (const auto& img : spec.images) {
        FeatureMap f = FeatureMap::zeros(spec.channels, {spec.grid_h, spec.grid_w}, {spec.image_h, spec.image_w},
                                         kSyntheticBackendId);
        for (int y = 0; y < spec.grid_h; ++y) {
            for (int x = 0; x < spec.grid_w; ++x) {
                const auto& e = img.planted.contains(y, x) ? spec.common_embedding : spec.background_embedding;
                for (int c = 0; c < spec.channels; ++c) {
                    f.at(c, y, x) = e[c];
                }
            }
        }
        if (spec.noise_amplitude > 0.0) {
            std::mt19937_64 rng(derive_seed(spec.seed, spec.group_id + "/" + img.image_id));
            std::uniform_real_distribution<double> dist(-spec.noise_amplitude, spec.noise_amplitude);
            for (auto& v : f.values) {
                v = static_cast<float>(v + dist(rng));
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

const SyntheticGroupSpec* SyntheticFixture::find(const std::string& group_id) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.group_id == group_id; });
    return it == groups.end() ? nullptr : &*it;
}

namespace {

json group_to_json(const SyntheticGroupSpec& g) {
    json images = json::array();
    for (const auto& i : g.images) {
        images.push_back({{"image_id", i.image_id},
                          {"planted", {i.planted.row0, i.planted.col0, i.planted.row1, i.planted.col1}}});
    }
    return json{{"group_id", g.group_id},
                {"grid", {g.grid_h, g.grid_w}},
                {"channels", g.channels},
                {"image_size", {g.image_h, g.image_w}},
                {"common_embedding", g.common_embedding},
                {"background_embedding", g.background_embedding},
                {"noise_amplitude", g.noise_amplitude},
                {"seed", g.seed},
                {"images", images}};
}

SyntheticGroupSpec group_from_json(const json& j) {
    SyntheticGroupSpec g;
    g.group_id = j.at("group_id").get<std::string>();
    g.grid_h = j.at("grid").at(0).get<int>();
    g.grid_w = j.at("grid").at(1).get<int>();
    g.channels = j.at("channels").get<int>();
    if (j.contains("image_size")) {
        g.image_h = j.at("image_size").at(0).get<int>();
        g.image_w = j.at("image_size").at(1).get<int>();
    } else {
        g.image_h = g.grid_h;
        g.image_w = g.grid_w;
    }
    g.common_embedding = j.at("common_embedding").get<std::vector<float>>();
    g.background_embedding = j.at("background_embedding").get<std::vector<float>>();
    g.noise_amplitude = j.value("noise_amplitude", 0.0);
    g.seed = j.value("seed", std::uint64_t{0});
    for (const auto& i : j.at("images")) {
        const auto& p = i.at("planted");
        g.images.push_back(
            {i.at("image_id").get<std::string>(),
             GridRect{p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>(), p.at(3).get<int>()}});
    }
    g.validate();
    return g;
}

void write_png(const fs::path& file, const cv::Mat& img) {
    fs::create_directories(file.parent_path());
    if (!cv::imwrite(file.string(), img)) {
        throw IoError("cannot write " + file.string());
    }
}

cv::Vec3b embedding_color(const std::vector<float>& e) {
    auto channel = [&](std::size_t i) {
        const double v = e[i % e.size()];
        return static_cast<unsigned char>(std::clamp(128.0 + 100.0 * v, 0.0, 255.0));
    };
    return {channel(0), channel(1), channel(2)};
}

} // namespace

SyntheticFixture load_synthetic_fixture(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot open synthetic spec " + file.string());
    }
    try {
        json j;
        in >> j;
        SyntheticFixture fx;
        for (const auto& g : j.at("groups")) {
            fx.groups.push_back(group_from_json(g));
        }
        return fx;
    } catch (const json::exception& e) {
        throw ConfigError("malformed synthetic spec " + file.string() + ": " + e.what());
    }
}

void save_synthetic_fixture(const SyntheticFixture& fixture, const fs::path& file) {
    json groups = json::array();
    for (const auto& g : fixture.groups) {
        groups.push_back(group_to_json(g));
    }
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    std::ofstream out(file);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out << json{{"groups", groups}}.dump(2) << '\n';
}

SyntheticFixture make_synthetic_fixture(const FixtureOptions& o) {
    if (o.groups < 1 || o.images_per_group < 1 || o.grid < 4 || o.channels < 2 || o.cell_pixels < 1) {
        throw ConfigError("invalid synthetic fixture options");
    }
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> extent(std::max(2, o.grid / 5), std::max(2, o.grid * 2 / 5));

    SyntheticFixture fx;
    for (int gi = 0; gi < o.groups; ++gi) {
        SyntheticGroupSpec g;
        char name[32];
        std::snprintf(name, sizeof(name), "group_%02d", gi);
        g.group_id = name;
        g.grid_h = g.grid_w = o.grid;
        g.channels = o.channels;
        g.image_h = g.image_w = o.grid * o.cell_pixels;
        g.noise_amplitude = o.noise_amplitude;
        g.seed = derive_seed(o.seed, g.group_id);

        // Background = 0.4 * common + small isotropic part, redrawn until
        // c.c > c.b > b.b with margins. Then every convex mix p of c and b
        // (the proxy, whatever the salient fraction) has c.p > b.p.
        do {
            g.common_embedding.assign(o.channels, 0.0f);
            g.background_embedding.assign(o.channels, 0.0f);
            for (int c = 0; c < o.channels; ++c) {
                g.common_embedding[c] = static_cast<float>(normal(rng));
            }
            for (int c = 0; c < o.channels; ++c) {
                g.background_embedding[c] = static_cast<float>(0.4 * g.common_embedding[c] + 0.3 * normal(rng));
            }
        } while ([&] {
            double cc = 0.0, cb = 0.0, bb = 0.0;
            for (int c = 0; c < o.channels; ++c) {
                cc += g.common_embedding[c] * g.common_embedding[c];
                cb += g.common_embedding[c] * g.background_embedding[c];
                bb += g.background_embedding[c] * g.background_embedding[c];
            }
            return !(cc > cb + 0.1 * cc && cb > bb + 0.05 * cc);
        }());

        for (int ii = 0; ii < o.images_per_group; ++ii) {
            SyntheticImageSpec img;
            std::snprintf(name, sizeof(name), "img_%02d", ii);
            img.image_id = name;
            const int h = extent(rng);
            const int w = extent(rng);
            std::uniform_int_distribution<int> r0(0, o.grid - h);
            std::uniform_int_distribution<int> c0(0, o.grid - w);
            img.planted.row0 = r0(rng);
            img.planted.col0 = c0(rng);
            img.planted.row1 = img.planted.row0 + h - 1;
            img.planted.col1 = img.planted.col0 + w - 1;
            g.images.push_back(img);
        }
        g.validate();
        fx.groups.push_back(std::move(g));
    }
    return fx;
}

FixtureLayout write_synthetic_fixture(const SyntheticFixture& fixture, const fs::path& root) {
    FixtureLayout layout{root / "images", root / "gt", root / "saliency", root / "images" / "synthetic.json"};
    for (const auto& g : fixture.groups) {
        g.validate();
        const cv::Vec3b bg = embedding_color(g.background_embedding);
        const cv::Vec3b fg = embedding_color(g.common_embedding);
        for (const auto& img : g.images) {
            const PixelRect r = g.to_pixels(img.planted);
            cv::Mat colour(g.image_h, g.image_w, CV_8UC3);
            cv::Mat gt(g.image_h, g.image_w, CV_8UC1);
            cv::Mat sal(g.image_h, g.image_w, CV_8UC1);
            for (int y = 0; y < g.image_h; ++y) {
                for (int x = 0; x < g.image_w; ++x) {
                    const bool inside = r.contains(x, y);
                    colour.at<cv::Vec3b>(y, x) = inside ? fg : bg;
                    gt.at<unsigned char>(y, x) = inside ? 255 : 0;
                    sal.at<unsigned char>(y, x) = inside ? 242 : 13;
                }
            }
            const auto file = img.image_id + ".png";
            write_png(layout.images_root / g.group_id / file, colour);
            write_png(layout.gt_root / g.group_id / file, gt);
            write_png(layout.saliency_root / g.group_id / file, sal);
        }
    }
    save_synthetic_fixture(fixture, layout.spec_path);
    return layout;
}

} // namespace cosod
