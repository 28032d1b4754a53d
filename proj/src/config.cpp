#include "gazecomp/config.hpp"

#include <charconv>
#include <fstream>

#include "gazecomp/binio.hpp"

namespace gazecomp {

void RunConfig::validate() const {
    model.validate();
    benchmark.validate();
    if (model.height != benchmark.height || model.width != benchmark.width ||
        model.channels != benchmark.n_objects) {
        throw ConfigMismatchError(
            "model grid/channels (" + std::to_string(model.channels) + "x" +
            std::to_string(model.height) + "x" + std::to_string(model.width) +
            ") must match benchmark objects/grid (" + std::to_string(benchmark.n_objects) + "x" +
            std::to_string(benchmark.height) + "x" + std::to_string(benchmark.width) + ")");
    }
    score_function_from_name(scoring);  // throws UsageError on junk
    if (detect_stride < 1 || train_stride < 1)
        throw UsageError("strides must be >= 1");
    if (prediction_length < 0 || prediction_length > model.half())
        throw UsageError("prediction_length must lie in [0, F/2]");
    if (train.epochs < 0 || train.batch_size < 1)
        throw UsageError("train config: epochs must be >= 0 and batch_size >= 1");
}

void to_json(nlohmann::json& j, const RunConfig& cfg) {
    j = nlohmann::json{
        {"model", cfg.model},
        {"train", cfg.train},
        {"benchmark", cfg.benchmark},
        {"scoring", cfg.scoring},
        {"detect_stride", cfg.detect_stride},
        {"train_stride", cfg.train_stride},
        {"prediction_length", cfg.prediction_length},
    };
    // JSON numbers lose precision past 2^53; fall back to a string there.
    if (cfg.seed <= (1ull << 53))
        j["seed"] = cfg.seed;
    else
        j["seed"] = std::to_string(cfg.seed);
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
    const RunConfig def;
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        cfg.seed = s.is_string() ? std::stoull(s.get<std::string>()) : s.get<uint64_t>();
    } else {
        cfg.seed = def.seed;
    }
    cfg.model = j.value("model", def.model);
    cfg.train = j.value("train", def.train);
    cfg.benchmark = j.value("benchmark", def.benchmark);
    cfg.scoring = j.value("scoring", def.scoring);
    cfg.detect_stride = j.value("detect_stride", def.detect_stride);
    cfg.train_stride = j.value("train_stride", def.train_stride);
    cfg.prediction_length = j.value("prediction_length", def.prediction_length);
}

RunConfig load_run_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
    }
    RunConfig cfg;
    try {
        cfg = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config '" + path + "' has bad fields: " + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    nlohmann::json j = cfg;
    atomic_write_file(path, j.dump(2) + "\n");
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatInconsistencyError("cannot parse '" + s + "' as a number");
    return v;
}

}  // namespace gazecomp
