#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazecomp/session.hpp"

#include "json.hpp"

namespace gazecomp {

struct ObjectSpec {
    int id = 0;
    double x = 0.5, y = 0.5;  // center, normalized
    double radius = 0.1;
};

struct Workspace {
    std::vector<ObjectSpec> objects;
    int height = 8, width = 8;

    void validate() const;
};

struct ActionScript {
    std::vector<int> steps;  // object ids in visit order, cycled as needed
    int dwell_min = 6, dwell_max = 10;
    int saccade_min = 2, saccade_max = 4;
    double sigma_g = 0.02;  // fixation jitter stddev

    void validate(const Workspace& ws) const;
};

enum class MistakeKind { Shuffle = 0, Erratic = 1, Overshoot = 2 };

const char* mistake_kind_name(MistakeKind k);

struct MistakeSpec {
    double rate = 0.0;  // per-step corruption probability
    std::vector<MistakeKind> kinds = {MistakeKind::Shuffle, MistakeKind::Erratic,
                                      MistakeKind::Overshoot};
    double erratic_multiplier = 4.0;
};

// Generator-internal ground truth, one entry per frame; tests verify the
// emitted labels against it.
struct FrameEvent {
    int step = 0;           // script step ordinal
    int target_object = 0;  // scripted object (what should have been fixated)
    int kind = -1;          // MistakeKind when corrupted, -1 otherwise
    bool corrupted = false;
};

struct GenerationResult {
    SessionRecord session;
    std::vector<FrameEvent> events;
};

GenerationResult generate_session(const Workspace& ws, const ActionScript& script,
                                  const MistakeSpec& mistakes, int length, uint64_t seed);

// All knobs of the default benchmark. Splits follow a roughly 60:15:25
// session ratio; the test split is longer so pooled frame counts are large
// enough for stable AUC estimates.
struct BenchmarkConfig {
    int height = 8, width = 8;
    int n_objects = 5;
    int n_scripts = 8;
    int dwell_min = 6, dwell_max = 10;
    int saccade_min = 2, saccade_max = 4;
    double sigma_g = 0.02;
    double erratic_multiplier = 4.0;
    double radius_min = 0.06, radius_max = 0.12;
    std::string mode = "one_class";  // "one_class" | "unsupervised"
    double mistake_rate = 0.28;      // test split always; train/val only when unsupervised
    int train_sessions = 29, val_sessions = 7, test_sessions = 12;
    int train_length = 64, val_length = 64, test_length = 176;

    bool operator==(const BenchmarkConfig&) const = default;
    void validate() const;
    double split_rate(const std::string& split) const;
};

void to_json(nlohmann::json& j, const BenchmarkConfig& cfg);
void from_json(const nlohmann::json& j, BenchmarkConfig& cfg);

struct Benchmark {
    std::vector<SessionRecord> train, val, test;
    nlohmann::json manifest;
};

// Deterministic in (config, seed); the two modes share identical val/test
// session seeds, so one-class and unsupervised runs see the same test data.
Benchmark generate_benchmark(const BenchmarkConfig& cfg, uint64_t seed);

// Rebuilds a benchmark from a manifest produced by generate_benchmark.
Benchmark replay_benchmark(const nlohmann::json& manifest);

// The 8 stock scripts: rotations and double-loops of one global object cycle,
// so the "next object" relation is learnable across scripts.
ActionScript stock_script(const BenchmarkConfig& cfg, int index);

}  // namespace gazecomp
