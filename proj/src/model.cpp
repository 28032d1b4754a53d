#include "gazecomp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gazecomp/binio.hpp"
#include "gazecomp/seeds.hpp"

namespace gazecomp {

namespace {
constexpr char kCkptMagic[8] = {'G', 'A', 'Z', 'E', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCkptVersion = 1;
}  // namespace

const char* fusion_mode_name(FusionMode m) {
    switch (m) {
        case FusionMode::None: return "none";
        case FusionMode::Channel: return "channel";
        case FusionMode::Correlation: return "correlation";
        case FusionMode::Both: return "both";
    }
    return "unknown";
}

FusionMode fusion_mode_from_name(const std::string& name) {
    if (name == "none") return FusionMode::None;
    if (name == "channel") return FusionMode::Channel;
    if (name == "correlation") return FusionMode::Correlation;
    if (name == "both") return FusionMode::Both;
    throw UsageError("unknown fusion mode '" + name + "'");
}

void ModelConfig::validate() const {
    if (frames < 2 || frames % 2 != 0)
        throw ShapeError("model config: frames must be even and >= 2");
    if (height < 2 || width < 2) throw ShapeError("model config: grid must be at least 2x2");
    if (channels < 1) throw ShapeError("model config: channels must be >= 1");
    if (d < 1 || heads < 1 || d % heads != 0)
        throw ShapeError("model config: d must be a positive multiple of heads");
    if (encoder_layers < 1 || decoder_layers < 1 || ffn_mult < 1)
        throw ShapeError("model config: layer counts and ffn_mult must be >= 1");
    if (!(sigma > 0.0)) throw ShapeError("model config: sigma must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
    j = nlohmann::json{
        {"frames", cfg.frames},
        {"height", cfg.height},
        {"width", cfg.width},
        {"channels", cfg.channels},
        {"d", cfg.d},
        {"heads", cfg.heads},
        {"encoder_layers", cfg.encoder_layers},
        {"decoder_layers", cfg.decoder_layers},
        {"ffn_mult", cfg.ffn_mult},
        {"sigma", cfg.sigma},
        {"fusion_mode", fusion_mode_name(cfg.fusion_mode)},
        {"supervised_frames",
         cfg.supervised_frames == SupervisedFrames::All ? "all" : "second_half"},
        {"positional_encoding", cfg.positional_encoding},
        {"kl_reverse", cfg.kl_reverse},
    };
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
    const ModelConfig def;
    cfg.frames = j.value("frames", def.frames);
    cfg.height = j.value("height", def.height);
    cfg.width = j.value("width", def.width);
    cfg.channels = j.value("channels", def.channels);
    cfg.d = j.value("d", def.d);
    cfg.heads = j.value("heads", def.heads);
    cfg.encoder_layers = j.value("encoder_layers", def.encoder_layers);
    cfg.decoder_layers = j.value("decoder_layers", def.decoder_layers);
    cfg.ffn_mult = j.value("ffn_mult", def.ffn_mult);
    cfg.sigma = j.value("sigma", def.sigma);
    cfg.fusion_mode = fusion_mode_from_name(j.value("fusion_mode", std::string("both")));
    const std::string sup = j.value("supervised_frames", std::string("second_half"));
    if (sup == "all")
        cfg.supervised_frames = SupervisedFrames::All;
    else if (sup == "second_half")
        cfg.supervised_frames = SupervisedFrames::SecondHalf;
    else
        throw UsageError("unknown supervised_frames '" + sup + "'");
    cfg.positional_encoding = j.value("positional_encoding", def.positional_encoding);
    cfg.kl_reverse = j.value("kl_reverse", def.kl_reverse);
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = nlohmann::json{
        {"epochs", cfg.epochs},   {"batch_size", cfg.batch_size},
        {"lr", cfg.lr},           {"weight_decay", cfg.weight_decay},
        {"beta1", cfg.beta1},     {"beta2", cfg.beta2},
        {"eps", cfg.eps},         {"shuffle", cfg.shuffle},
    };
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    const TrainConfig def;
    cfg.epochs = j.value("epochs", def.epochs);
    cfg.batch_size = j.value("batch_size", def.batch_size);
    cfg.lr = j.value("lr", def.lr);
    cfg.weight_decay = j.value("weight_decay", def.weight_decay);
    cfg.beta1 = j.value("beta1", def.beta1);
    cfg.beta2 = j.value("beta2", def.beta2);
    cfg.eps = j.value("eps", def.eps);
    cfg.shuffle = j.value("shuffle", def.shuffle);
}

void ClipWindow::validate(const ModelConfig& cfg) const {
    if (frames != cfg.frames || channels != cfg.channels || height != cfg.height ||
        width != cfg.width) {
        throw ShapeError("clip dimensions (" + std::to_string(frames) + "," +
                         std::to_string(channels) + "," + std::to_string(height) + "," +
                         std::to_string(width) + ") do not match model config");
    }
    if (grids.size() != static_cast<size_t>(frames) * channels * height * width)
        throw ShapeError("clip grid buffer size mismatch");
    if (static_cast<int>(partial_traj.size()) != cfg.half())
        throw ShapeError("clip partial trajectory must cover exactly the first half (" +
                         std::to_string(partial_traj.size()) + " vs " +
                         std::to_string(cfg.half()) + ")");
    if (!target_traj.empty() && static_cast<int>(target_traj.size()) != cfg.half())
        throw ShapeError("clip target trajectory must be empty or cover the second half");
}

ClipWindow channel_fuse(const ClipWindow& clip, const HeatmapStack& heatmaps) {
    if (heatmaps.height() != clip.height || heatmaps.width() != clip.width)
        throw ShapeError("channel_fuse: heatmap grid does not match frame grid");
    if (heatmaps.frames() != clip.frames / 2)
        throw ShapeError("channel_fuse: expected F/2 heatmap frames, got " +
                         std::to_string(heatmaps.frames()));
    ClipWindow out = clip;
    out.channels = clip.channels + 1;
    out.grids.assign(static_cast<size_t>(out.frames) * out.channels * out.height * out.width, 0.0);
    for (int f = 0; f < clip.frames; ++f) {
        for (int c = 0; c < clip.channels; ++c)
            for (int r = 0; r < clip.height; ++r)
                for (int col = 0; col < clip.width; ++col)
                    out.grid_at(f, c, r, col) = clip.grid_at(f, c, r, col);
        if (f < heatmaps.frames())
            for (int r = 0; r < clip.height; ++r)
                for (int col = 0; col < clip.width; ++col)
                    out.grid_at(f, clip.channels, r, col) = heatmaps.at(f, r, col);
    }
    return out;
}

Tensor positional_table(const ModelConfig& cfg) {
    const int d = cfg.d;
    const int band_f = d / 3;
    const int band_r = d / 3;
    const int band_c = d - 2 * (d / 3);
    Tensor t({cfg.visual_tokens(), d});
    auto fill_band = [&](int row, int off, int m, int pos) {
        for (int k = 0; k < m; ++k) {
            const double denom = std::pow(10000.0, static_cast<double>(2 * (k / 2)) / m);
            const double a = pos / denom;
            t.at2(row, off + k) = (k % 2 == 0) ? std::sin(a) : std::cos(a);
        }
    };
    int row = 0;
    for (int f = 0; f < cfg.frames; ++f)
        for (int r = 0; r < cfg.height; ++r)
            for (int c = 0; c < cfg.width; ++c, ++row) {
                fill_band(row, 0, band_f, f);
                fill_band(row, band_f, band_r, r);
                fill_band(row, band_f + band_r, band_c, c);
            }
    return t;
}

CompletionModel::CompletionModel(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    build_parameters();
    pos_table_ = positional_table(cfg_);
}

void CompletionModel::make_attn(AttnParams& a, const std::string& prefix) {
    const int d = cfg_.d;
    a.wq = Parameter(prefix + ".wq", Tensor::zeros({d, d}));
    a.bq = Parameter(prefix + ".bq", Tensor::zeros({1, d}));
    a.wk = Parameter(prefix + ".wk", Tensor::zeros({d, d}));
    a.bk = Parameter(prefix + ".bk", Tensor::zeros({1, d}));
    a.wv = Parameter(prefix + ".wv", Tensor::zeros({d, d}));
    a.bv = Parameter(prefix + ".bv", Tensor::zeros({1, d}));
    a.wo = Parameter(prefix + ".wo", Tensor::zeros({d, d}));
    a.bo = Parameter(prefix + ".bo", Tensor::zeros({1, d}));
}

void CompletionModel::make_block(Block& b, const std::string& prefix) {
    const int d = cfg_.d, ffn = cfg_.ffn_mult * cfg_.d;
    b.ln1.gamma = Parameter(prefix + ".ln1.gamma", Tensor::full({1, d}, 1.0));
    b.ln1.beta = Parameter(prefix + ".ln1.beta", Tensor::zeros({1, d}));
    make_attn(b.attn, prefix + ".attn");
    b.ln2.gamma = Parameter(prefix + ".ln2.gamma", Tensor::full({1, d}, 1.0));
    b.ln2.beta = Parameter(prefix + ".ln2.beta", Tensor::zeros({1, d}));
    b.ffn.w1 = Parameter(prefix + ".ffn.w1", Tensor::zeros({d, ffn}));
    b.ffn.b1 = Parameter(prefix + ".ffn.b1", Tensor::zeros({1, ffn}));
    b.ffn.w2 = Parameter(prefix + ".ffn.w2", Tensor::zeros({ffn, d}));
    b.ffn.b2 = Parameter(prefix + ".ffn.b2", Tensor::zeros({1, d}));
}

void CompletionModel::build_parameters() {
    const int d = cfg_.d, hw = cfg_.height * cfg_.width;
    embed_w_ = Parameter("embed.weight", Tensor::zeros({cfg_.input_channels(), d}));
    embed_b_ = Parameter("embed.bias", Tensor::zeros({1, d}));
    traj_w_ = Parameter("traj.weight", Tensor::zeros({hw, d}));
    traj_b_ = Parameter("traj.bias", Tensor::zeros({1, d}));
    encoder_.resize(cfg_.encoder_layers);
    for (int l = 0; l < cfg_.encoder_layers; ++l)
        make_block(encoder_[l], "enc" + std::to_string(l));
    has_corr_ = cfg_.uses_correlation_fusion();
    if (has_corr_) make_attn(corr_, "corr");
    dec_queries_ = Parameter("dec.queries", Tensor::zeros({cfg_.visual_tokens(), d}));
    decoder_.resize(cfg_.decoder_layers);
    for (int l = 0; l < cfg_.decoder_layers; ++l)
        make_block(decoder_[l], "dec" + std::to_string(l));
    head_w_ = Parameter("head.weight", Tensor::zeros({d, 1}));
    head_b_ = Parameter("head.bias", Tensor::zeros({1, 1}));
}

void CompletionModel::visit_params(const std::function<void(Parameter&)>& f) {
    auto attn = [&](AttnParams& a) {
        f(a.wq);
        f(a.bq);
        f(a.wk);
        f(a.bk);
        f(a.wv);
        f(a.bv);
        f(a.wo);
        f(a.bo);
    };
    auto block = [&](Block& b) {
        f(b.ln1.gamma);
        f(b.ln1.beta);
        attn(b.attn);
        f(b.ln2.gamma);
        f(b.ln2.beta);
        f(b.ffn.w1);
        f(b.ffn.b1);
        f(b.ffn.w2);
        f(b.ffn.b2);
    };
    f(embed_w_);
    f(embed_b_);
    f(traj_w_);
    f(traj_b_);
    for (auto& b : encoder_) block(b);
    if (has_corr_) attn(corr_);
    f(dec_queries_);
    for (auto& b : decoder_) block(b);
    f(head_w_);
    f(head_b_);
}

void CompletionModel::init(uint64_t seed) {
    visit_params([&](Parameter& p) {
        Tensor& t = p.mutable_value();
        const std::string& name = p.name();
        const std::string tail = name.substr(name.rfind('.') + 1);
        if (tail == "gamma") {
            t.fill(1.0);
        } else if (!tail.empty() && tail[0] == 'b') {  // biases and ln beta
            t.fill(0.0);
        } else {
            Rng rng(derive_seed(seed, name));
            t = Tensor::xavier(t.shape(), rng);
        }
    });
}

std::vector<Parameter*> CompletionModel::parameters() {
    std::vector<Parameter*> out;
    visit_params([&](Parameter& p) { out.push_back(&p); });
    return out;
}

std::vector<const Parameter*> CompletionModel::parameters() const {
    std::vector<const Parameter*> out;
    const_cast<CompletionModel*>(this)->visit_params(
        [&](Parameter& p) { out.push_back(&p); });
    return out;
}

std::vector<Parameter*> CompletionModel::trainable_parameters() {
    std::vector<Parameter*> out;
    visit_params([&](Parameter& p) {
        // The trajectory token is outside the graph unless correlation fusion
        // is active; keep its parameters away from the optimizer then.
        if (!cfg_.uses_correlation_fusion() &&
            (p.name() == "traj.weight" || p.name() == "traj.bias"))
            return;
        out.push_back(&p);
    });
    return out;
}

Parameter* CompletionModel::find_parameter(const std::string& name) {
    Parameter* found = nullptr;
    visit_params([&](Parameter& p) {
        if (p.name() == name) found = &p;
    });
    return found;
}

Var CompletionModel::ln_apply(const Var& x, const LayerNormParams& p) const {
    return layer_norm(x, p.gamma.var(), p.beta.var());
}

Var CompletionModel::ffn_apply(const Var& x, const FfnParams& p) const {
    Var h = gelu(add_rowvec(matmul(x, p.w1.var()), p.b1.var()));
    return add_rowvec(matmul(h, p.w2.var()), p.b2.var());
}

Var CompletionModel::mha(const Var& q_in, const Var& kv_in, const AttnParams& p) const {
    const int d = cfg_.d, nh = cfg_.heads, dh = d / nh;
    Var q = add_rowvec(matmul(q_in, p.wq.var()), p.bq.var());
    Var k = add_rowvec(matmul(kv_in, p.wk.var()), p.bk.var());
    Var v = add_rowvec(matmul(kv_in, p.wv.var()), p.bv.var());
    std::vector<Var> heads;
    heads.reserve(nh);
    for (int h = 0; h < nh; ++h) {
        Var qh = slice_cols(q, h * dh, dh);
        Var kh = slice_cols(k, h * dh, dh);
        Var vh = slice_cols(v, h * dh, dh);
        Var logits = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        heads.push_back(matmul(softmax(logits, 1), vh));
    }
    return add_rowvec(matmul(concat_cols(heads), p.wo.var()), p.bo.var());
}

Var CompletionModel::embed_visual(const ClipWindow& clip, const HeatmapStack* hm) const {
    const int cin = cfg_.input_channels();
    if ((hm != nullptr) != cfg_.uses_channel_fusion())
        throw ShapeError("embed_visual: heatmap presence disagrees with fusion mode");
    Tensor cells({cfg_.visual_tokens(), cin});
    int row = 0;
    for (int f = 0; f < cfg_.frames; ++f)
        for (int r = 0; r < cfg_.height; ++r)
            for (int c = 0; c < cfg_.width; ++c, ++row) {
                for (int ch = 0; ch < cfg_.channels; ++ch)
                    cells.at2(row, ch) = clip.grid_at(f, ch, r, c);
                if (hm) cells.at2(row, cfg_.channels) = f < cfg_.half() ? hm->at(f, r, c) : 0.0;
            }
    return add_rowvec(matmul(Var::constant(std::move(cells)), embed_w_.var()), embed_b_.var());
}

Var CompletionModel::embed_traj(const HeatmapStack& hm) const {
    Tensor pooled({1, cfg_.height * cfg_.width});
    const double inv = 1.0 / cfg_.half();
    for (int f = 0; f < cfg_.half(); ++f) {
        const double* p = hm.frame_data(f);
        for (size_t k = 0; k < hm.cells_per_frame(); ++k) pooled[k] += p[k] * inv;
    }
    return add_rowvec(matmul(Var::constant(std::move(pooled)), traj_w_.var()), traj_b_.var());
}

std::pair<Var, Var> CompletionModel::token_embed(const ClipWindow& clip,
                                                 const HeatmapStack& heatmaps) const {
    clip.validate(cfg_);
    if (heatmaps.height() != cfg_.height || heatmaps.width() != cfg_.width ||
        heatmaps.frames() != cfg_.half())
        throw ShapeError("token_embed: heatmap stack must cover the first half at grid size");
    Var visual = embed_visual(clip, cfg_.uses_channel_fusion() ? &heatmaps : nullptr);
    return {visual, embed_traj(heatmaps)};
}

Var CompletionModel::encode(const Var& tokens) const {
    Var x = tokens;
    for (const auto& b : encoder_) {
        Var h = ln_apply(x, b.ln1);
        x = add(x, mha(h, h, b.attn));
        x = add(x, ffn_apply(ln_apply(x, b.ln2), b.ffn));
    }
    return x;
}

Var CompletionModel::correlation_fuse(const Var& gaze_token, const Var& visual_tokens) const {
    if (!has_corr_)
        throw ShapeError("correlation_fuse: module disabled by fusion_mode " +
                         std::string(fusion_mode_name(cfg_.fusion_mode)));
    const int d = cfg_.d, nh = cfg_.heads, dh = d / nh;
    if (gaze_token.value().rows() != 1 || gaze_token.value().cols() != d ||
        visual_tokens.value().cols() != d)
        throw ShapeError("correlation_fuse: token width mismatch");
    Var q = add_rowvec(matmul(visual_tokens, corr_.wq.var()), corr_.bq.var());
    Var k = add_rowvec(matmul(gaze_token, corr_.wk.var()), corr_.bk.var());
    Var v = add_rowvec(matmul(gaze_token, corr_.wv.var()), corr_.bv.var());
    std::vector<Var> heads;
    heads.reserve(nh);
    for (int h = 0; h < nh; ++h) {
        Var qh = slice_cols(q, h * dh, dh);
        Var kh = slice_cols(k, h * dh, dh);
        Var vh = slice_cols(v, h * dh, dh);
        // [N,1] gaze-affinity logits; the softmax distributes the gaze value
        // across visual tokens, so a lone token always gets weight 1.
        Var logits = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        Var w = softmax(logits, 0);
        heads.push_back(matmul(w, vh));
    }
    Var out = add_rowvec(matmul(concat_cols(heads), corr_.wo.var()), corr_.bo.var());
    return add(visual_tokens, out);
}

Var CompletionModel::forward_var(const ClipWindow& clip) const {
    clip.validate(cfg_);
    const int n_vis = cfg_.visual_tokens();
    Var visual, traj;
    if (cfg_.fusion_mode == FusionMode::None) {
        visual = embed_visual(clip, nullptr);
    } else {
        HeatmapStack hm = encode_gaussian(clip.partial_traj, cfg_.sigma, cfg_.height, cfg_.width);
        visual = embed_visual(clip, cfg_.uses_channel_fusion() ? &hm : nullptr);
        if (cfg_.uses_correlation_fusion()) traj = embed_traj(hm);
    }
    if (cfg_.positional_encoding) visual = add(visual, Var::constant(pos_table_));

    Var enc = encode(traj.defined() ? concat_rows({visual, traj}) : visual);

    Var kv;
    if (traj.defined()) {
        Var enc_vis = slice_rows(enc, 0, n_vis);
        Var enc_gaze = slice_rows(enc, n_vis, 1);
        kv = correlation_fuse(enc_gaze, enc_vis);
    } else {
        kv = enc;
    }

    Var x = dec_queries_.var();
    for (const auto& b : decoder_) {
        x = add(x, mha(ln_apply(x, b.ln1), kv, b.attn));
        x = add(x, ffn_apply(ln_apply(x, b.ln2), b.ffn));
    }
    Var logits = add_rowvec(matmul(x, head_w_.var()), head_b_.var());
    return softmax(reshape(logits, {cfg_.frames, cfg_.height * cfg_.width}), 1);
}

HeatmapStack CompletionModel::forward(const ClipWindow& clip) const {
    Var q = forward_var(clip);
    HeatmapStack out(cfg_.frames, cfg_.height, cfg_.width);
    const size_t n = out.cells_per_frame();
    for (int f = 0; f < cfg_.frames; ++f) {
        const double* src = q.value().data() + static_cast<size_t>(f) * n;
        std::copy(src, src + n, out.frame_data(f));
    }
    out.uniform_flags.assign(cfg_.frames, false);
    return out;
}

Var CompletionModel::loss_var(const ClipWindow& clip) const {
    if (static_cast<int>(clip.target_traj.size()) != cfg_.half())
        throw TrainingError("training window lacks a full target trajectory");
    GazeTrajectory full;
    full.frame_offset = clip.partial_traj.frame_offset;
    full.points = clip.partial_traj.points;
    full.points.insert(full.points.end(), clip.target_traj.points.begin(),
                       clip.target_traj.points.end());
    HeatmapStack target = encode_gaussian(full, cfg_.sigma, cfg_.height, cfg_.width);
    Tensor tgt({cfg_.frames, static_cast<int>(target.cells_per_frame())});
    for (int f = 0; f < cfg_.frames; ++f)
        std::copy(target.frame_data(f), target.frame_data(f) + target.cells_per_frame(),
                  tgt.data() + static_cast<size_t>(f) * target.cells_per_frame());

    const int row_from = cfg_.supervised_frames == SupervisedFrames::All ? 0 : cfg_.half();
    Var pred = forward_var(clip);
    Var total;
    int count = 0;
    for (int f = row_from; f < cfg_.frames; ++f) {
        const bool valid = f < cfg_.half() ? clip.partial_traj[f].valid
                                           : clip.target_traj[f - cfg_.half()].valid;
        if (!valid) continue;  // exclusion rule: missing gaze is never supervised
        Var term = kl_divergence(pred, tgt, 1e-8, cfg_.kl_reverse, f, f + 1);
        total = total.defined() ? add(total, term) : term;
        ++count;
    }
    if (count == 0) throw TrainingError("window has no valid supervised frames");
    return scale(total, 1.0 / count);
}

double CompletionModel::mean_loss(const std::vector<ClipWindow>& dataset) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& clip : dataset) {
        try {
            sum += loss_var(clip).scalar_value();
            ++n;
        } catch (const TrainingError&) {
            continue;  // windows without supervisable frames don't count
        }
    }
    if (n == 0) throw TrainingError("mean_loss: no usable windows");
    return sum / n;
}

TrainResult CompletionModel::train(const std::vector<ClipWindow>& dataset, const TrainConfig& tc,
                                   uint64_t seed) {
    if (dataset.empty()) throw TrainingError("empty training dataset");
    if (tc.epochs < 0 || tc.batch_size < 1)
        throw UsageError("train config: epochs must be >= 0 and batch_size >= 1");

    std::vector<size_t> usable;
    const int from = cfg_.supervised_frames == SupervisedFrames::All ? 0 : cfg_.half();
    for (size_t i = 0; i < dataset.size(); ++i) {
        const auto& c = dataset[i];
        if (static_cast<int>(c.target_traj.size()) != cfg_.half()) continue;
        bool any = false;
        for (int f = from; f < cfg_.frames && !any; ++f)
            any = f < cfg_.half() ? c.partial_traj[f].valid : c.target_traj[f - cfg_.half()].valid;
        if (any) usable.push_back(i);
    }
    if (usable.empty()) throw TrainingError("no trainable windows in dataset");

    auto params = trainable_parameters();
    AdamW opt({tc.lr, tc.weight_decay, tc.beta1, tc.beta2, tc.eps});
    TrainResult res;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        std::vector<size_t> order = usable;
        if (tc.shuffle) {
            Rng rng(derive_seed(seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1],
                          order[rng.uniform_int(0, static_cast<int64_t>(i) - 1)]);
        }
        double epoch_sum = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += tc.batch_size) {
            const size_t end = std::min(order.size(), start + tc.batch_size);
            try {
                Var loss;
                for (size_t k = start; k < end; ++k) {
                    Var term = loss_var(dataset[order[k]]);
                    loss = loss.defined() ? add(loss, term) : term;
                }
                loss = scale(loss, 1.0 / static_cast<double>(end - start));
                const double lv = loss.scalar_value();
                if (!std::isfinite(lv)) throw NumericError("loss is not finite");
                epoch_sum += lv;
                ++batches;
                for (auto* p : params) p->zero_grad();
                loss.backward();
                opt.step(params);
                ++res.steps;
            } catch (const NumericError& e) {
                throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                    e.what());
            }
        }
        res.epoch_loss.push_back(epoch_sum / batches);
        log_debug("epoch " + std::to_string(epoch) + " loss " +
                  std::to_string(res.epoch_loss.back()));
    }
    return res;
}

std::pair<GazeTrajectory, HeatmapStack> CompletionModel::complete(const ClipWindow& clip) const {
    HeatmapStack full = forward(clip);
    HeatmapStack tail(cfg_.half(), cfg_.height, cfg_.width);
    const size_t n = full.cells_per_frame();
    for (int f = 0; f < cfg_.half(); ++f)
        std::copy(full.frame_data(cfg_.half() + f), full.frame_data(cfg_.half() + f) + n,
                  tail.frame_data(f));
    GazeTrajectory traj = decode_peak(tail);
    traj.frame_offset = clip.window_end - cfg_.half() + 1;
    return {std::move(traj), std::move(full)};
}

void CompletionModel::save_checkpoint(const std::string& path) const {
    ByteWriter w;
    w.raw(kCkptMagic, sizeof(kCkptMagic));
    w.u32(kCkptVersion);
    nlohmann::json j = cfg_;
    w.str(j.dump());
    auto ps = parameters();
    w.u32(static_cast<uint32_t>(ps.size()));
    for (const auto* p : ps) {
        w.str(p->name());
        const Tensor& t = p->value();
        w.u32(static_cast<uint32_t>(t.rank()));
        for (size_t i = 0; i < t.rank(); ++i) w.u32(static_cast<uint32_t>(t.shape()[i]));
        w.u64(t.size());
        for (size_t i = 0; i < t.size(); ++i) w.f64(t[i]);
    }
    const uint32_t crc = crc32(w.bytes());
    w.u32(crc);
    atomic_write_file(path, w.bytes());
}

CompletionModel CompletionModel::load_checkpoint(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < sizeof(kCkptMagic) + 8)
        throw TruncationError("checkpoint '" + path + "' too small (" +
                              std::to_string(bytes.size()) + " bytes)");
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[bytes.size() - 4 + i]))
                  << (8 * i);
    const std::string payload = bytes.substr(0, bytes.size() - 4);
    if (crc32(payload) != stored)
        throw FormatInconsistencyError("checkpoint '" + path + "' checksum mismatch");

    ByteReader r(payload);
    char magic[sizeof(kCkptMagic)];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw FormatInconsistencyError("'" + path + "' is not a checkpoint file (bad magic)");
    const uint32_t ver = r.u32();
    if (ver != kCkptVersion)
        throw VersionMismatchError("checkpoint version " + std::to_string(ver) +
                                   " unsupported (want " + std::to_string(kCkptVersion) + ")");
    ModelConfig cfg;
    try {
        cfg = nlohmann::json::parse(r.str()).get<ModelConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatInconsistencyError("checkpoint config header unreadable: " +
                                       std::string(e.what()));
    }
    CompletionModel model(cfg);
    auto ps = model.parameters();
    const uint32_t n = r.u32();
    if (n != ps.size())
        throw FormatInconsistencyError("checkpoint parameter count " + std::to_string(n) +
                                       " does not match config-implied " +
                                       std::to_string(ps.size()));
    for (auto* p : ps) {
        const std::string name = r.str();
        if (name != p->name())
            throw FormatInconsistencyError("unexpected parameter '" + name + "' (want '" +
                                           p->name() + "')");
        const uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (auto& s : shape) s = static_cast<int>(r.u32());
        Tensor t(shape);
        const uint64_t count = r.u64();
        if (count != t.size())
            throw FormatInconsistencyError("parameter '" + name + "' element count mismatch");
        for (size_t i = 0; i < t.size(); ++i) t[i] = r.f64();
        if (!t.same_shape(p->value()))
            throw FormatInconsistencyError("parameter '" + name + "' shape mismatch");
        p->mutable_value() = std::move(t);
    }
    if (!r.exhausted()) throw FormatInconsistencyError("trailing bytes in checkpoint '" + path + "'");
    return model;
}

CompletionModel CompletionModel::load_checkpoint(const std::string& path,
                                                 const ModelConfig& expected) {
    CompletionModel model = load_checkpoint(path);
    if (!(model.config() == expected)) {
        nlohmann::json have = model.config(), want = expected;
        throw ConfigMismatchError("checkpoint config " + have.dump() +
                                  " does not match runtime config " + want.dump());
    }
    return model;
}

}  // namespace gazecomp
