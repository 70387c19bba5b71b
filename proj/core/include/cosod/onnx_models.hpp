#pragma once

#include <filesystem>
#include <memory>

#include "cosod/diffusion_backend.hpp"
#include "cosod/vit_backend.hpp"

namespace cosod {

// ONNX-backed engines run through OpenCV's dnn module. Each loader throws
// ConfigError when a file is missing, naming the config key and the
// environment variable that can point at it.
//
// Export contracts:
//   ViT:   input 1x3xSxS; output "layer_<L>" (1xTxC) per exported block, or a
//          single output holding the requested block.
//   VAE:   input 1x3xSxS in [-1,1]; output 1x4xhxw latent mean (or 1x8xhxw
//          moments, of which the first four channels are used).
//   U-Net: inputs "sample", "timestep", "encoder_hidden_states"; outputs
//          "up_ft_<i>" (1xCxhxw) for each exported up-path block i.
//   Text:  raw little-endian float32 file, Tx768, the prompt's CLIP encoding.

std::unique_ptr<VitModel> load_onnx_vit(const std::filesystem::path& onnx);

std::unique_ptr<DiffusionModel> load_onnx_diffusion(const std::filesystem::path& vae_encoder,
                                                    const std::filesystem::path& unet,
                                                    const std::filesystem::path& text_embedding);

/// Throws ConfigError unless `path` names an existing file.
void require_weight_file(const std::filesystem::path& path, const char* what, const char* config_key,
                         const char* env_var);

} // namespace cosod
