#include "gazecomp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazecomp/heatmap.hpp"
#include "gazecomp/seeds.hpp"

namespace gazecomp {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::string format_fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

const char* kActionTypes[] = {"assemble", "pour", "press", "inspect"};

}  // namespace

const char* mistake_kind_name(MistakeKind k) {
    switch (k) {
        case MistakeKind::Shuffle: return "shuffle";
        case MistakeKind::Erratic: return "erratic";
        case MistakeKind::Overshoot: return "overshoot";
    }
    return "unknown";
}

void Workspace::validate() const {
    if (objects.size() < 2) throw BenchmarkError("workspace needs at least 2 objects");
    if (height < 2 || width < 2) throw BenchmarkError("workspace grid must be at least 2x2");
    for (const auto& o : objects) {
        if (o.x < 0.0 || o.x > 1.0 || o.y < 0.0 || o.y > 1.0)
            throw BenchmarkError("object center outside [0,1]^2");
        if (!(o.radius > 0.0)) throw BenchmarkError("object radius must be positive");
    }
}

void ActionScript::validate(const Workspace& ws) const {
    if (steps.empty()) throw BenchmarkError("script has no steps");
    for (int id : steps) {
        bool known = false;
        for (const auto& o : ws.objects) known = known || o.id == id;
        if (!known)
            throw BenchmarkError("script references unknown object " + std::to_string(id));
    }
    if (dwell_min < 1 || dwell_max < dwell_min)
        throw BenchmarkError("dwell duration range invalid");
    if (saccade_min < 1 || saccade_max < saccade_min)
        throw BenchmarkError("saccade duration range invalid");
    if (!(sigma_g >= 0.0)) throw BenchmarkError("sigma_g must be nonnegative");
}

GenerationResult generate_session(const Workspace& ws, const ActionScript& script,
                                  const MistakeSpec& mistakes, int length, uint64_t seed) {
    ws.validate();
    script.validate(ws);
    if (length < 1) throw BenchmarkError("session length must be >= 1");
    if (mistakes.rate < 0.0 || mistakes.rate > 1.0)
        throw BenchmarkError("mistake rate must lie in [0,1]");
    if (mistakes.rate > 0.0 && mistakes.kinds.empty())
        throw BenchmarkError("mistake rate > 0 with no mistake kinds enabled");

    auto center_of = [&](int id) -> const ObjectSpec& {
        for (const auto& o : ws.objects)
            if (o.id == id) return o;
        throw BenchmarkError("unknown object " + std::to_string(id));
    };

    GenerationResult out;
    SessionRecord& s = out.session;
    s.height = ws.height;
    s.width = ws.width;
    s.channels = static_cast<int>(ws.objects.size());

    // Presence channels: one Gaussian blob per object, constant over time.
    std::vector<float> base(static_cast<size_t>(s.channels) * s.height * s.width);
    for (int ch = 0; ch < s.channels; ++ch) {
        const ObjectSpec& o = ws.objects[ch];
        for (int r = 0; r < s.height; ++r)
            for (int c = 0; c < s.width; ++c) {
                const double cx = cell_to_coord(c, s.width);
                const double cy = cell_to_coord(r, s.height);
                const double d2 = (cx - o.x) * (cx - o.x) + (cy - o.y) * (cy - o.y);
                base[(static_cast<size_t>(ch) * s.height + r) * s.width + c] =
                    static_cast<float>(std::exp(-d2 / (2.0 * o.radius * o.radius)));
            }
    }
    s.frames.reserve(static_cast<size_t>(length) * base.size());
    for (int t = 0; t < length; ++t) s.frames.insert(s.frames.end(), base.begin(), base.end());

    Rng rng(seed);
    const double sig = script.sigma_g;
    GazePoint pos{center_of(script.steps[0]).x, center_of(script.steps[0]).y, true};
    GazePoint wander_target = pos;

    auto emit = [&](double x, double y, int step, int target, int kind, bool corrupted) {
        GazePoint p{clamp01(x), clamp01(y), true};
        s.gaze.points.push_back(p);
        s.labels.push_back(corrupted ? 1 : 0);
        out.events.push_back({step, target, kind, corrupted});
        pos = p;
    };
    auto saccade_to = [&](double tx, double ty, int n, int step, int target, int kind,
                          bool corrupted) {
        const double sx = pos.x, sy = pos.y;
        for (int i = 1; i <= n; ++i) {
            if (static_cast<int>(s.gaze.size()) >= length) return;
            const double frac = static_cast<double>(i) / (n + 1);
            emit(sx + (tx - sx) * frac + rng.normal(0.0, sig),
                 sy + (ty - sy) * frac + rng.normal(0.0, sig), step, target, kind, corrupted);
        }
    };
    auto dwell_at = [&](double tx, double ty, int n, int step, int target, int kind,
                        bool corrupted) {
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(s.gaze.size()) >= length) return;
            emit(tx + rng.normal(0.0, sig), ty + rng.normal(0.0, sig), step, target, kind,
                 corrupted);
        }
    };

    int step = 0;
    while (static_cast<int>(s.gaze.size()) < length) {
        const int target = script.steps[step % script.steps.size()];
        const ObjectSpec& obj = center_of(target);
        const bool corrupted = mistakes.rate > 0.0 && rng.bernoulli(mistakes.rate);
        const MistakeKind kind =
            corrupted ? mistakes.kinds[rng.uniform_int(0, static_cast<int64_t>(
                                                              mistakes.kinds.size()) -
                                                              1)]
                      : MistakeKind::Shuffle;
        const int kind_tag = corrupted ? static_cast<int>(kind) : -1;
        const int sac_n = static_cast<int>(rng.uniform_int(script.saccade_min, script.saccade_max));
        const int dwell_n = static_cast<int>(rng.uniform_int(script.dwell_min, script.dwell_max));

        if (!corrupted) {
            saccade_to(obj.x, obj.y, sac_n, step, target, kind_tag, false);
            dwell_at(obj.x, obj.y, dwell_n, step, target, kind_tag, false);
        } else if (kind == MistakeKind::Shuffle || kind == MistakeKind::Overshoot) {
            int wrong = target;
            while (wrong == target)
                wrong = ws.objects[rng.uniform_int(0, static_cast<int64_t>(ws.objects.size()) - 1)]
                            .id;
            const ObjectSpec& wobj = center_of(wrong);
            if (kind == MistakeKind::Shuffle) {
                saccade_to(wobj.x, wobj.y, sac_n, step, target, kind_tag, true);
                dwell_at(wobj.x, wobj.y, dwell_n, step, target, kind_tag, true);
            } else {
                const int first_half = (dwell_n + 1) / 2;
                const int correction =
                    static_cast<int>(rng.uniform_int(script.saccade_min, script.saccade_max));
                saccade_to(wobj.x, wobj.y, sac_n, step, target, kind_tag, true);
                dwell_at(wobj.x, wobj.y, first_half, step, target, kind_tag, true);
                saccade_to(obj.x, obj.y, correction, step, target, kind_tag, true);
                dwell_at(obj.x, obj.y, dwell_n - first_half, step, target, kind_tag, true);
            }
        } else {  // erratic wandering with inflated jitter
            const double esig = sig * mistakes.erratic_multiplier;
            const int total = sac_n + dwell_n;
            for (int i = 0; i < total && static_cast<int>(s.gaze.size()) < length; ++i) {
                if (rng.bernoulli(0.5)) {
                    wander_target.x = rng.uniform(0.05, 0.95);
                    wander_target.y = rng.uniform(0.05, 0.95);
                }
                emit(0.5 * (pos.x + wander_target.x) + rng.normal(0.0, esig),
                     0.5 * (pos.y + wander_target.y) + rng.normal(0.0, esig), step, target,
                     kind_tag, true);
            }
        }
        ++step;
    }
    s.validate();
    return out;
}

void BenchmarkConfig::validate() const {
    if (n_objects < 2) throw BenchmarkError("benchmark needs at least 2 objects");
    if (n_scripts < 1) throw BenchmarkError("benchmark needs at least 1 script");
    if (height < 2 || width < 2) throw BenchmarkError("benchmark grid must be at least 2x2");
    if (mistake_rate < 0.0 || mistake_rate > 1.0)
        throw BenchmarkError("mistake rate must lie in [0,1]");
    if (mode != "one_class" && mode != "unsupervised")
        throw BenchmarkError("mode must be one_class or unsupervised, got '" + mode + "'");
    if (train_sessions < 1 || val_sessions < 1 || test_sessions < 1)
        throw BenchmarkError("every split needs at least one session");
    if (train_length < 1 || val_length < 1 || test_length < 1)
        throw BenchmarkError("session lengths must be >= 1");
    if (dwell_min < 1 || dwell_max < dwell_min || saccade_min < 1 || saccade_max < saccade_min)
        throw BenchmarkError("duration ranges invalid");
    if (radius_min <= 0.0 || radius_max < radius_min)
        throw BenchmarkError("radius range invalid");
}

double BenchmarkConfig::split_rate(const std::string& split) const {
    if (split == "test") return mistake_rate;
    return mode == "unsupervised" ? mistake_rate : 0.0;
}

void to_json(nlohmann::json& j, const BenchmarkConfig& cfg) {
    j = nlohmann::json{
        {"height", cfg.height},
        {"width", cfg.width},
        {"n_objects", cfg.n_objects},
        {"n_scripts", cfg.n_scripts},
        {"dwell_min", cfg.dwell_min},
        {"dwell_max", cfg.dwell_max},
        {"saccade_min", cfg.saccade_min},
        {"saccade_max", cfg.saccade_max},
        {"sigma_g", cfg.sigma_g},
        {"erratic_multiplier", cfg.erratic_multiplier},
        {"radius_min", cfg.radius_min},
        {"radius_max", cfg.radius_max},
        {"mode", cfg.mode},
        {"mistake_rate", cfg.mistake_rate},
        {"train_sessions", cfg.train_sessions},
        {"val_sessions", cfg.val_sessions},
        {"test_sessions", cfg.test_sessions},
        {"train_length", cfg.train_length},
        {"val_length", cfg.val_length},
        {"test_length", cfg.test_length},
    };
}

void from_json(const nlohmann::json& j, BenchmarkConfig& cfg) {
    const BenchmarkConfig def;
    cfg.height = j.value("height", def.height);
    cfg.width = j.value("width", def.width);
    cfg.n_objects = j.value("n_objects", def.n_objects);
    cfg.n_scripts = j.value("n_scripts", def.n_scripts);
    cfg.dwell_min = j.value("dwell_min", def.dwell_min);
    cfg.dwell_max = j.value("dwell_max", def.dwell_max);
    cfg.saccade_min = j.value("saccade_min", def.saccade_min);
    cfg.saccade_max = j.value("saccade_max", def.saccade_max);
    cfg.sigma_g = j.value("sigma_g", def.sigma_g);
    cfg.erratic_multiplier = j.value("erratic_multiplier", def.erratic_multiplier);
    cfg.radius_min = j.value("radius_min", def.radius_min);
    cfg.radius_max = j.value("radius_max", def.radius_max);
    cfg.mode = j.value("mode", def.mode);
    cfg.mistake_rate = j.value("mistake_rate", def.mistake_rate);
    cfg.train_sessions = j.value("train_sessions", def.train_sessions);
    cfg.val_sessions = j.value("val_sessions", def.val_sessions);
    cfg.test_sessions = j.value("test_sessions", def.test_sessions);
    cfg.train_length = j.value("train_length", def.train_length);
    cfg.val_length = j.value("val_length", def.val_length);
    cfg.test_length = j.value("test_length", def.test_length);
}

ActionScript stock_script(const BenchmarkConfig& cfg, int index) {
    // All scripts walk the same global cycle 0 -> 1 -> ... -> n-1 -> 0, so the
    // successor relation is shared and a gaze-conditioned model can learn it.
    ActionScript sc;
    const int start = index % cfg.n_objects;
    const int loops = 1 + index / cfg.n_objects;
    sc.steps.resize(static_cast<size_t>(loops) * cfg.n_objects);
    for (size_t i = 0; i < sc.steps.size(); ++i)
        sc.steps[i] = (start + static_cast<int>(i)) % cfg.n_objects;
    sc.dwell_min = cfg.dwell_min;
    sc.dwell_max = cfg.dwell_max;
    sc.saccade_min = cfg.saccade_min;
    sc.saccade_max = cfg.saccade_max;
    sc.sigma_g = cfg.sigma_g;
    return sc;
}

namespace {

Workspace sample_workspace(const BenchmarkConfig& cfg, Rng& rng) {
    Workspace ws;
    ws.height = cfg.height;
    ws.width = cfg.width;
    double min_sep = 0.22;
    for (int i = 0; i < cfg.n_objects; ++i) {
        ObjectSpec o;
        o.id = i;
        o.radius = rng.uniform(cfg.radius_min, cfg.radius_max);
        for (int attempt = 0;; ++attempt) {
            o.x = rng.uniform(0.15, 0.85);
            o.y = rng.uniform(0.15, 0.85);
            bool ok = true;
            for (const auto& other : ws.objects) {
                const double dx = o.x - other.x, dy = o.y - other.y;
                if (std::sqrt(dx * dx + dy * dy) < min_sep) ok = false;
            }
            if (ok) break;
            if (attempt > 0 && attempt % 200 == 0) min_sep *= 0.5;  // always terminates
        }
        ws.objects.push_back(o);
    }
    return ws;
}

struct SplitPlan {
    std::string name;
    int sessions;
    int length;
};

}  // namespace

Benchmark generate_benchmark(const BenchmarkConfig& cfg, uint64_t seed) {
    cfg.validate();
    Benchmark bench;
    nlohmann::json session_list = nlohmann::json::array();

    const SplitPlan plans[] = {{"train", cfg.train_sessions, cfg.train_length},
                               {"val", cfg.val_sessions, cfg.val_length},
                               {"test", cfg.test_sessions, cfg.test_length}};
    double mistake_disp = 0.0, correct_disp = 0.0;
    int64_t mistake_n = 0, correct_n = 0;

    for (const auto& plan : plans) {
        std::vector<SessionRecord>& dest = plan.name == "train" ? bench.train
                                           : plan.name == "val" ? bench.val
                                                                : bench.test;
        for (int i = 0; i < plan.sessions; ++i) {
            const uint64_t session_seed = derive_seed(seed, "split:" + plan.name, i);
            Rng setup(derive_seed(session_seed, "setup"));
            Workspace ws = sample_workspace(cfg, setup);
            const int script_index = i % cfg.n_scripts;
            const double difficulty = setup.uniform(1.0, 5.0);
            const double confidence = setup.uniform(1.0, 5.0);
            ActionScript script = stock_script(cfg, script_index);
            script.sigma_g = cfg.sigma_g * (1.0 + 0.25 * (difficulty - 1.0));

            MistakeSpec mistakes;
            mistakes.rate = cfg.split_rate(plan.name);
            mistakes.erratic_multiplier = cfg.erratic_multiplier;

            GenerationResult gen = generate_session(ws, script, mistakes, plan.length,
                                                    derive_seed(session_seed, "trace"));
            SessionRecord& s = gen.session;
            char idbuf[48];
            std::snprintf(idbuf, sizeof(idbuf), "%s-%03d", plan.name.c_str(), i);
            s.session_id = idbuf;
            s.metadata["activity_id"] = std::to_string(script_index);
            s.metadata["action_type"] = kActionTypes[script_index % 4];
            s.metadata["difficulty"] = format_fixed(difficulty);
            s.metadata["confidence"] = format_fixed(confidence);
            s.metadata["split"] = plan.name;

            for (size_t t = 1; t < s.gaze.size(); ++t) {
                const double dx = s.gaze[t].x - s.gaze[t - 1].x;
                const double dy = s.gaze[t].y - s.gaze[t - 1].y;
                const double d = std::sqrt(dx * dx + dy * dy);
                if (s.labels[t]) {
                    mistake_disp += d;
                    ++mistake_n;
                } else {
                    correct_disp += d;
                    ++correct_n;
                }
            }

            session_list.push_back({{"id", s.session_id},
                                    {"split", plan.name},
                                    {"seed", std::to_string(session_seed)},
                                    {"script", script_index},
                                    {"difficulty", s.metadata["difficulty"]}});
            dest.push_back(std::move(s));
        }
    }

    nlohmann::json manifest;
    manifest["tool"] = kToolVersion;
    manifest["benchmark"] = cfg;
    manifest["seed"] = std::to_string(seed);
    manifest["sessions"] = std::move(session_list);
    if (mistake_n > 0 && correct_n > 0) {
        const double mm = mistake_disp / mistake_n;
        const double cm = correct_disp / correct_n;
        manifest["separability"] = {{"mistake_mean_step", mm}, {"correct_mean_step", cm}};
        if (!(mm > cm)) {
            throw BenchmarkError(
                "separability check failed: mistake-span gaze movement (" + format_fixed(mm) +
                ") does not exceed correct-span movement (" + format_fixed(cm) +
                "); the benchmark would be unlearnable");
        }
    }
    bench.manifest = std::move(manifest);
    return bench;
}

Benchmark replay_benchmark(const nlohmann::json& manifest) {
    if (!manifest.contains("benchmark") || !manifest.contains("seed"))
        throw FormatInconsistencyError("manifest lacks benchmark config or seed");
    BenchmarkConfig cfg = manifest.at("benchmark").get<BenchmarkConfig>();
    const uint64_t seed = std::stoull(manifest.at("seed").get<std::string>());
    return generate_benchmark(cfg, seed);
}

}  // namespace gazecomp
