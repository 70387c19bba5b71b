#include "cosod/backends.hpp"

#include <algorithm>
#include <bit>

#include "cosod/error.hpp"
#include "cosod/fusion.hpp"
#include "cosod/hash.hpp"
#include "cosod/resample.hpp"

namespace cosod {

std::string_view to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::vit:
        return "vit";
    case BackendKind::diffusion:
        return "diffusion";
    case BackendKind::fused:
        return "fused";
    case BackendKind::synthetic:
        return "synthetic";
    }
    return "?";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
    for (auto k : {BackendKind::vit, BackendKind::diffusion, BackendKind::fused, BackendKind::synthetic}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {

void hash_floats(Fnv1a& h, const std::vector<float>& v) {
    for (float f : v) {
        h.update(static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(f)));
    }
}

} // namespace

SyntheticBackend::SyntheticBackend(SyntheticFixture fixture) : fixture_(std::move(fixture)) {
    Fnv1a h;
    for (const auto& g : fixture_.groups) {
        g.validate();
        h.update(g.group_id);
        for (int v : {g.grid_h, g.grid_w, g.channels, g.image_h, g.image_w}) {
            h.update(static_cast<std::uint64_t>(v));
        }
        hash_floats(h, g.common_embedding);
        hash_floats(h, g.background_embedding);
        h.update(std::bit_cast<std::uint64_t>(g.noise_amplitude));
        h.update(g.seed);
        for (const auto& i : g.images) {
            h.update(i.image_id);
            for (int v : {i.planted.row0, i.planted.col0, i.planted.row1, i.planted.col1}) {
                h.update(static_cast<std::uint64_t>(v));
            }
        }
    }
    hash_ = h.hex();
}

std::vector<FeatureMap> SyntheticBackend::extract_group(const GroupRecord& group) {
    const SyntheticGroupSpec* spec = fixture_.find(group.group_id);
    if (spec == nullptr) {
        throw ConfigError("synthetic spec has no group " + group.group_id);
    }
    const auto all = synthetic_extract(*spec);
    std::vector<FeatureMap> out;
    for (const auto& m : group.members) {
        auto it = std::find_if(spec->images.begin(), spec->images.end(),
                               [&](const auto& i) { return i.image_id == m.image_id; });
        if (it == spec->images.end()) {
            throw ConfigError("synthetic spec has no image " + m.key());
        }
        if (m.height != 0 && (m.height != spec->image_h || m.width != spec->image_w)) {
            throw ShapeError("image " + m.key() + " is " + std::to_string(m.height) + "x" +
                             std::to_string(m.width) + " but the synthetic spec says " +
                             std::to_string(spec->image_h) + "x" + std::to_string(spec->image_w));
        }
        out.push_back(all[static_cast<std::size_t>(it - spec->images.begin())]);
    }
    return out;
}

VitBackend::VitBackend(std::unique_ptr<VitModel> model, VitOptions options)
    : model_(std::move(model)), options_(options) {
    if (!model_) {
        throw ConfigError("ViT backend needs a model");
    }
}

std::string VitBackend::config_hash() const {
    Fnv1a h;
    for (int v : {options_.input_size, options_.patch_size, options_.layer, options_.prefix_tokens}) {
        h.update(static_cast<std::uint64_t>(v));
    }
    hash_floats(h, {options_.mean.begin(), options_.mean.end()});
    hash_floats(h, {options_.stddev.begin(), options_.stddev.end()});
    return h.hex();
}

FeatureMap VitBackend::extract_raw(const ImageRecord& image) {
    return extract_vit(image, *model_, options_);
}

std::vector<FeatureMap> VitBackend::extract_group(const GroupRecord& group) {
    std::vector<FeatureMap> out;
    for (const auto& m : group.members) {
        out.push_back(fuse_vit_only(extract_raw(m)).features);
    }
    return out;
}

DiffusionBackend::DiffusionBackend(std::unique_ptr<DiffusionModel> model, DiffusionBackendConfig config,
                                   NoiseSchedule schedule)
    : model_(std::move(model)), config_(std::move(config)), schedule_(std::move(schedule)) {
    if (!model_) {
        throw ConfigError("diffusion backend needs a model");
    }
    config_.validate(schedule_);
}

std::vector<FeatureMap> DiffusionBackend::extract_raw_group(const GroupRecord& group) {
    std::vector<std::vector<FeatureMap>> layers;
    for (const auto& m : group.members) {
        layers.push_back(extract_diffusion_layers(m, config_, *model_, schedule_));
    }
    return reduce_and_merge_layers(layers, config_.pca_dims_per_layer);
}

std::vector<FeatureMap> DiffusionBackend::extract_group(const GroupRecord& group) {
    auto raw = extract_raw_group(group);
    for (auto& f : raw) {
        f = l2_normalize_pixelwise(f);
    }
    return raw;
}

FusedBackend::FusedBackend(std::unique_ptr<VitBackend> vit, std::unique_ptr<DiffusionBackend> diffusion)
    : vit_(std::move(vit)), diffusion_(std::move(diffusion)) {
    if (!vit_ || !diffusion_) {
        throw ConfigError("fused backend needs both a ViT and a diffusion backend");
    }
}

std::string FusedBackend::config_hash() const {
    return Fnv1a{}.update(vit_->config_hash()).update(diffusion_->config_hash()).hex();
}

std::vector<FeatureMap> FusedBackend::extract_group(const GroupRecord& group) {
    auto sd = diffusion_->extract_raw_group(group);
    std::vector<FeatureMap> out;
    for (std::size_t i = 0; i < group.members.size(); ++i) {
        FeatureMap vit = vit_->extract_raw(group.members[i]);
        const GridSize target{std::max(vit.grid_h, sd[i].grid_h), std::max(vit.grid_w, sd[i].grid_w)};
        FusedFeatureMap fused = fuse(upsample_bilinear(sd[i], target), upsample_bilinear(vit, target));
        out.push_back(std::move(fused.features));
    }
    return out;
}

std::vector<std::filesystem::path> FusedBackend::weight_files() const {
    auto files = diffusion_->weight_files();
    auto more = vit_->weight_files();
    files.insert(files.end(), more.begin(), more.end());
    return files;
}

} // namespace cosod
