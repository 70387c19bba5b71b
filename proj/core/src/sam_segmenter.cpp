#include "cosod/sam_segmenter.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "cosod/error.hpp"
#include "cosod/onnx_models.hpp"

namespace fs = std::filesystem;

namespace cosod {

namespace {

constexpr int kSamInput = 1024;

class SamSegmenter final : public Segmenter {
  public:
    SamSegmenter(fs::path encoder, fs::path decoder) : encoder_path_(std::move(encoder)), decoder_path_(std::move(decoder)) {
        try {
            encoder_ = cv::dnn::readNetFromONNX(encoder_path_.string());
            decoder_ = cv::dnn::readNetFromONNX(decoder_path_.string());
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("cannot load SAM: ") + e.what());
        }
    }

    SegmenterResult segment(const ImageRecord& image, std::span<const PromptPoint> prompts) override {
        const double scale = static_cast<double>(kSamInput) / std::max(image.width, image.height);
        const int new_w = static_cast<int>(std::lround(image.width * scale));
        const int new_h = static_cast<int>(std::lround(image.height * scale));

        cv::Mat resized;
        cv::resize(image.pixels, resized, {new_w, new_h}, 0, 0, cv::INTER_LINEAR);
        cv::Mat f;
        resized.convertTo(f, CV_32FC3);
        cv::subtract(f, cv::Scalar(123.675, 116.28, 103.53), f);
        cv::divide(f, cv::Scalar(58.395, 57.12, 57.375), f);
        cv::Mat padded = cv::Mat::zeros(kSamInput, kSamInput, CV_32FC3);
        f.copyTo(padded(cv::Rect(0, 0, new_w, new_h)));

        cv::Mat embedding;
        cv::Mat masks;
        cv::Mat iou;
        try {
            encoder_.setInput(cv::dnn::blobFromImage(padded));
            embedding = encoder_.forward().clone();

            // All prompts are positive; a trailing padding point (label -1)
            // stands in for the absent box prompt.
            const int n = static_cast<int>(prompts.size()) + 1;
            const int coord_sizes[] = {1, n, 2};
            cv::Mat coords(3, coord_sizes, CV_32F, cv::Scalar(0));
            const int label_sizes[] = {1, n};
            cv::Mat labels(2, label_sizes, CV_32F, cv::Scalar(-1));
            for (int i = 0; i < n - 1; ++i) {
                coords.ptr<float>(0)[2 * i] = static_cast<float>(prompts[i].x * scale);
                coords.ptr<float>(0)[2 * i + 1] = static_cast<float>(prompts[i].y * scale);
                labels.ptr<float>(0)[i] = 1.0f;
            }
            const int mask_sizes[] = {1, 1, 256, 256};
            cv::Mat mask_input(4, mask_sizes, CV_32F, cv::Scalar(0));
            cv::Mat has_mask(1, 1, CV_32F, cv::Scalar(0));
            cv::Mat orig(1, 2, CV_32F);
            orig.at<float>(0) = static_cast<float>(image.height);
            orig.at<float>(1) = static_cast<float>(image.width);

            decoder_.setInput(embedding, "image_embeddings");
            decoder_.setInput(coords, "point_coords");
            decoder_.setInput(labels, "point_labels");
            decoder_.setInput(mask_input, "mask_input");
            decoder_.setInput(has_mask, "has_mask_input");
            decoder_.setInput(orig, "orig_im_size");
            std::vector<cv::Mat> outs;
            decoder_.forward(outs, std::vector<std::string>{"masks", "iou_predictions"});
            masks = outs.at(0);
            iou = outs.at(1);
        } catch (const cv::Exception& e) {
            throw BackendError("SAM inference failed for " + image.key() + ": " + e.what());
        }

        if (masks.dims != 4 || masks.size[2] != image.height || masks.size[3] != image.width) {
            throw BackendError("SAM returned masks of unexpected shape for " + image.key());
        }
        SegmenterResult result;
        const int m = masks.size[1];
        const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
        const float* logits = masks.ptr<float>();
        const float* scores = iou.ptr<float>();
        for (int i = 0; i < m; ++i) {
            BinaryMask bm = BinaryMask::empty(image.height, image.width);
            for (std::size_t p = 0; p < plane; ++p) {
                bm.bits[p] = logits[i * plane + p] > 0.0f ? 1 : 0;
            }
            result.masks.push_back(std::move(bm));
            result.scores.push_back(scores[i]);
        }
        return result;
    }

    std::vector<fs::path> weight_files() const override { return {encoder_path_, decoder_path_}; }

  private:
    fs::path encoder_path_;
    fs::path decoder_path_;
    cv::dnn::Net encoder_;
    cv::dnn::Net decoder_;
};

} // namespace

std::unique_ptr<Segmenter> load_sam_segmenter(const fs::path& encoder, const fs::path& decoder) {
    require_weight_file(encoder, "SAM image encoder", "sam-encoder", "COSOD_SAM_ENCODER");
    require_weight_file(decoder, "SAM mask decoder", "sam-decoder", "COSOD_SAM_DECODER");
    return std::make_unique<SamSegmenter>(encoder, decoder);
}

} // namespace cosod
