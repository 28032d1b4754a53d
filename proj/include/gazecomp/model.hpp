#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gazecomp/graph.hpp"
#include "gazecomp/heatmap.hpp"
#include "gazecomp/optim.hpp"

#include "json.hpp"

namespace gazecomp {

enum class FusionMode { None, Channel, Correlation, Both };
enum class SupervisedFrames { SecondHalf, All };

const char* fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

struct ModelConfig {
    int frames = 8;  // F, even; first F/2 frames observed, rest predicted
    int height = 8;
    int width = 8;
    int channels = 5;
    int d = 64;
    int heads = 4;
    int encoder_layers = 2;
    int decoder_layers = 2;
    int ffn_mult = 2;
    double sigma = 2.0;  // heatmap kernel width, in grid cells
    FusionMode fusion_mode = FusionMode::Both;
    SupervisedFrames supervised_frames = SupervisedFrames::SecondHalf;
    bool positional_encoding = true;
    bool kl_reverse = false;

    bool operator==(const ModelConfig&) const = default;

    int half() const { return frames / 2; }
    int visual_tokens() const { return frames * height * width; }
    bool uses_channel_fusion() const {
        return fusion_mode == FusionMode::Channel || fusion_mode == FusionMode::Both;
    }
    bool uses_correlation_fusion() const {
        return fusion_mode == FusionMode::Correlation || fusion_mode == FusionMode::Both;
    }
    int input_channels() const { return channels + (uses_channel_fusion() ? 1 : 0); }
    void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

struct TrainConfig {
    int epochs = 10;
    int batch_size = 4;
    double lr = 1e-4;
    double weight_decay = 0.07;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool shuffle = true;

    bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

// One training/inference window: F feature grids plus the observed first-half
// trajectory; target_traj carries the unobserved half during training.
struct ClipWindow {
    int frames = 0, channels = 0, height = 0, width = 0;
    std::vector<double> grids;  // [F][C][H][W] row-major
    GazeTrajectory partial_traj;
    GazeTrajectory target_traj;
    int window_end = 0;  // absolute 1-based timestep of the last frame

    double grid_at(int f, int c, int r, int col) const {
        return grids[((static_cast<size_t>(f) * channels + c) * height + r) * width + col];
    }
    double& grid_at(int f, int c, int r, int col) {
        return grids[((static_cast<size_t>(f) * channels + c) * height + r) * width + col];
    }
    void validate(const ModelConfig& cfg) const;
};

// Appends the first-half heatmaps as channel C+1 (zeros over the second half).
ClipWindow channel_fuse(const ClipWindow& clip, const HeatmapStack& heatmaps);

// Fixed sinusoidal encodings over (frame, row, column); rows follow visual
// token order, the trajectory token gets none.
Tensor positional_table(const ModelConfig& cfg);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean batch loss per epoch, pre-update
    int steps = 0;
};

class CompletionModel {
public:
    CompletionModel() = default;
    explicit CompletionModel(ModelConfig cfg);

    // Draws every parameter from seeds derived off (seed, parameter name).
    void init(uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    // Parameters reachable from the loss under the configured fusion mode.
    std::vector<Parameter*> trainable_parameters();
    Parameter* find_parameter(const std::string& name);

    // (visual tokens [F*H*W, d], trajectory token [1, d]); positional
    // encodings are added later by forward, not here.
    std::pair<Var, Var> token_embed(const ClipWindow& clip, const HeatmapStack& heatmaps) const;

    // Pre-norm self-attention + FFN stack plus final layer norm.
    Var encode(const Var& tokens) const;

    // Attention between the gaze token (key/value) and the visual tokens
    // (queries); softmax runs over the visual-token axis, so a single visual
    // token always receives weight 1. Residual add.
    Var correlation_fuse(const Var& gaze_token, const Var& visual_tokens) const;

    // Predicted per-frame distributions, shape [F, H*W], rows sum to 1.
    Var forward_var(const ClipWindow& clip) const;
    HeatmapStack forward(const ClipWindow& clip) const;

    // Mean per-supervised-frame KL between prediction and the encoded ground
    // truth. Requires target_traj with at least one valid point in the
    // supervised range.
    Var loss_var(const ClipWindow& clip) const;
    double mean_loss(const std::vector<ClipWindow>& dataset) const;

    TrainResult train(const std::vector<ClipWindow>& dataset, const TrainConfig& tc, uint64_t seed);

    // Decoded trajectory over the predicted half plus the full heatmap stack.
    std::pair<GazeTrajectory, HeatmapStack> complete(const ClipWindow& clip) const;

    void save_checkpoint(const std::string& path) const;
    static CompletionModel load_checkpoint(const std::string& path);
    // Throws ConfigMismatchError when the stored config differs from `expected`.
    static CompletionModel load_checkpoint(const std::string& path, const ModelConfig& expected);

private:
    struct AttnParams {
        Parameter wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct LayerNormParams {
        Parameter gamma, beta;
    };
    struct FfnParams {
        Parameter w1, b1, w2, b2;
    };
    struct Block {
        LayerNormParams ln1;
        AttnParams attn;
        LayerNormParams ln2;
        FfnParams ffn;
    };

    Var mha(const Var& q_in, const Var& kv_in, const AttnParams& p) const;
    Var ffn_apply(const Var& x, const FfnParams& p) const;
    Var ln_apply(const Var& x, const LayerNormParams& p) const;
    // Visual-token embedding; `hm` non-null applies channel fusion inline.
    Var embed_visual(const ClipWindow& clip, const HeatmapStack* hm) const;
    Var embed_traj(const HeatmapStack& hm) const;
    void build_parameters();
    void make_block(Block& b, const std::string& prefix);
    void make_attn(AttnParams& a, const std::string& prefix);
    // Walks every parameter in declared (checkpoint) order.
    void visit_params(const std::function<void(Parameter&)>& f);

    ModelConfig cfg_;
    Parameter embed_w_, embed_b_;
    Parameter traj_w_, traj_b_;
    std::vector<Block> encoder_;
    AttnParams corr_;
    bool has_corr_ = false;
    Parameter dec_queries_;
    std::vector<Block> decoder_;
    Parameter head_w_, head_b_;
    Tensor pos_table_;
};

}  // namespace gazecomp
