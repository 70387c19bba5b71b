#include "cosod/onnx_models.hpp"

#include <fstream>
#include <regex>

#include <opencv2/dnn.hpp>

#include "cosod/error.hpp"

namespace fs = std::filesystem;

namespace cosod {

void require_weight_file(const fs::path& path, const char* what, const char* config_key, const char* env_var) {
    if (path.empty() || !fs::is_regular_file(path)) {
        std::string msg = std::string("missing ") + what + " weights";
        if (!path.empty()) {
            msg += " (" + path.string() + " does not exist)";
        }
        msg += "; set --" + std::string(config_key) + " / `" + config_key + "` in the config file or the " +
               env_var + " environment variable";
        throw ConfigError(msg);
    }
}

namespace {

cv::dnn::Net read_net(const fs::path& path) {
    try {
        cv::dnn::Net net = cv::dnn::readNetFromONNX(path.string());
        net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
        net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
        return net;
    } catch (const cv::Exception& e) {
        throw BackendError("cannot load ONNX model " + path.string() + ": " + e.what());
    }
}

class OnnxVitModel final : public VitModel {
  public:
    explicit OnnxVitModel(fs::path path) : path_(std::move(path)), net_(read_net(path_)) {
        outputs_ = net_.getUnconnectedOutLayersNames();
    }

    cv::Mat tokens(const cv::Mat& blob, int layer) override {
        const std::string wanted = "layer_" + std::to_string(layer);
        std::string name;
        if (std::find(outputs_.begin(), outputs_.end(), wanted) != outputs_.end()) {
            name = wanted;
        } else if (outputs_.size() == 1) {
            name = outputs_.front();
        } else {
            throw BackendError("ViT model " + path_.string() + " has no output " + wanted);
        }
        cv::Mat out;
        try {
            net_.setInput(blob);
            out = net_.forward(name);
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("ViT inference failed: ") + e.what());
        }
        if (out.dims != 3 || out.size[0] != 1) {
            throw BackendError("ViT output " + name + " must be 1xTxC");
        }
        return cv::Mat(out.size[1], out.size[2], CV_32F, out.ptr<float>()).clone();
    }

    std::vector<fs::path> weight_files() const override { return {path_}; }

  private:
    fs::path path_;
    cv::dnn::Net net_;
    std::vector<std::string> outputs_;
};

class OnnxDiffusionModel final : public DiffusionModel {
  public:
    OnnxDiffusionModel(fs::path vae, fs::path unet, fs::path text)
        : vae_path_(std::move(vae)), unet_path_(std::move(unet)), text_path_(std::move(text)),
          vae_(read_net(vae_path_)), unet_(read_net(unet_path_)) {
        std::ifstream in(text_path_, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        constexpr std::size_t kWidth = 768;
        if (bytes.empty() || bytes.size() % (kWidth * sizeof(float)) != 0) {
            throw ConfigError("text embedding " + text_path_.string() + " must be a Tx768 float32 file");
        }
        const int tokens = static_cast<int>(bytes.size() / (kWidth * sizeof(float)));
        const int sizes[] = {1, tokens, static_cast<int>(kWidth)};
        text_ = cv::Mat(3, sizes, CV_32F);
        std::memcpy(text_.ptr(), bytes.data(), bytes.size());

        static const std::regex kUp("up_ft_([0-9]+)");
        for (const auto& name : unet_.getUnconnectedOutLayersNames()) {
            std::smatch m;
            if (std::regex_match(name, m, kUp)) {
                layers_.push_back(std::stoi(m[1].str()));
            }
        }
        std::sort(layers_.begin(), layers_.end());
    }

    Latent encode(const cv::Mat& blob) override {
        cv::Mat out;
        try {
            vae_.setInput(blob);
            out = vae_.forward();
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("latent encoding failed: ") + e.what());
        }
        if (out.dims != 4 || out.size[0] != 1 || (out.size[1] != 4 && out.size[1] != 8)) {
            throw BackendError("VAE encoder output must be 1x4xhxw or 1x8xhxw");
        }
        constexpr float kLatentScale = 0.18215f;
        Latent z;
        z.channels = 4;
        z.height = out.size[2];
        z.width = out.size[3];
        const std::size_t n = static_cast<std::size_t>(4) * z.height * z.width;
        const float* src = out.ptr<float>();
        z.values.assign(src, src + n);
        for (auto& v : z.values) {
            v *= kLatentScale;
        }
        return z;
    }

    std::vector<FeatureMap> unet_features(const Latent& noisy, int timestep, std::span<const int> layers) override {
        const int sizes[] = {1, noisy.channels, noisy.height, noisy.width};
        cv::Mat sample(4, sizes, CV_32F, const_cast<float*>(noisy.values.data()));
        cv::Mat t(1, 1, CV_32F, cv::Scalar(static_cast<float>(timestep)));
        std::vector<std::string> names;
        for (int l : layers) {
            names.push_back("up_ft_" + std::to_string(l));
        }
        std::vector<cv::Mat> outs;
        try {
            unet_.setInput(sample, "sample");
            unet_.setInput(t, "timestep");
            unet_.setInput(text_, "encoder_hidden_states");
            unet_.forward(outs, names);
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("U-Net inference failed: ") + e.what());
        }
        std::vector<FeatureMap> result;
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const cv::Mat& o = outs[i];
            if (o.dims != 4 || o.size[0] != 1) {
                throw BackendError("U-Net output " + names[i] + " must be 1xCxhxw");
            }
            FeatureMap f = FeatureMap::zeros(o.size[1], {o.size[2], o.size[3]}, {1, 1}, kDiffusionBackendId);
            const float* src = o.ptr<float>();
            std::copy(src, src + f.values.size(), f.values.begin());
            result.push_back(std::move(f));
        }
        return result;
    }

    std::vector<int> valid_layers() const override { return layers_; }

    std::vector<fs::path> weight_files() const override { return {vae_path_, unet_path_, text_path_}; }

  private:
    fs::path vae_path_;
    fs::path unet_path_;
    fs::path text_path_;
    cv::dnn::Net vae_;
    cv::dnn::Net unet_;
    cv::Mat text_;
    std::vector<int> layers_;
};

} // namespace

std::unique_ptr<VitModel> load_onnx_vit(const fs::path& onnx) {
    require_weight_file(onnx, "ViT", "vit-onnx", "COSOD_VIT_ONNX");
    return std::make_unique<OnnxVitModel>(onnx);
}

std::unique_ptr<DiffusionModel> load_onnx_diffusion(const fs::path& vae_encoder, const fs::path& unet,
                                                    const fs::path& text_embedding) {
    require_weight_file(vae_encoder, "diffusion VAE encoder", "sd-vae-encoder", "COSOD_SD_VAE_ENCODER");
    require_weight_file(unet, "diffusion U-Net", "sd-unet", "COSOD_SD_UNET");
    require_weight_file(text_embedding, "diffusion text embedding", "sd-text-embedding", "COSOD_SD_TEXT_EMBEDDING");
    return std::make_unique<OnnxDiffusionModel>(vae_encoder, unet, text_embedding);
}

} // namespace cosod
