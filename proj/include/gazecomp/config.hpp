#pragma once

#include <cstdint>
#include <string>

#include "gazecomp/model.hpp"
#include "gazecomp/synthetic.hpp"

#include "json.hpp"

namespace gazecomp {

// Every tunable of a run. The snapshot embedded in output artifacts is this
// struct's JSON form; replaying it reproduces the artifact bit-exactly.
struct RunConfig {
    uint64_t seed = 1234;
    ModelConfig model;
    TrainConfig train;
    BenchmarkConfig benchmark;
    std::string scoring = "heatmap";
    int detect_stride = 1;
    int train_stride = 8;       // non-overlapping windows for training
    int prediction_length = 0;  // 0 = full predicted half (F/2)

    bool operator==(const RunConfig&) const = default;
    void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& cfg);
void from_json(const nlohmann::json& j, RunConfig& cfg);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

// Shortest-roundtrip decimal formatting; reparsing yields the same bits.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace gazecomp
