#pragma once

#include <filesystem>
#include <memory>

#include "cosod/cmp.hpp"

namespace cosod {

/// SAM (ViT-B image encoder) through two ONNX graphs run by OpenCV dnn.
///
/// Encoder: input 1x3x1024x1024 (longest side resized to 1024, normalized,
/// zero-padded bottom/right); output 1x256x64x64 image embedding.
/// Decoder: the standard prompt-decoder export with inputs image_embeddings,
/// point_coords, point_labels, mask_input, has_mask_input, orig_im_size and
/// outputs masks (1xMxHxW logits) and iou_predictions (1xM).
std::unique_ptr<Segmenter> load_sam_segmenter(const std::filesystem::path& encoder,
                                              const std::filesystem::path& decoder);

} // namespace cosod
