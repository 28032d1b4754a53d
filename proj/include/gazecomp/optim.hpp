#pragma once

#include <string>
#include <vector>

#include "gazecomp/graph.hpp"

namespace gazecomp {

// Named trainable leaf. The value and its accumulated gradient live on the
// underlying graph node so forward passes can reference the parameter
// directly.
class Parameter {
public:
    Parameter() = default;
    Parameter(std::string name, Tensor value)
        : name_(std::move(name)), var_(Var::leaf(std::move(value), true)) {}

    const std::string& name() const { return name_; }
    const Var& var() const { return var_; }
    const Tensor& value() const { return var_.value(); }
    Tensor& mutable_value() { return var_.mutable_value(); }
    const Tensor& grad() const { return var_.grad(); }
    bool has_grad() const { return var_.grad().same_shape(var_.value()); }
    void zero_grad() { var_.zero_grad(); }

private:
    std::string name_;
    Var var_;
};

struct AdamWOptions {
    double lr = 1e-4;
    double weight_decay = 0.07;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// AdamW with decoupled weight decay: the decay term scales the value
// directly (value *= 1 - lr*wd) instead of flowing through the gradient.
class AdamW {
public:
    explicit AdamW(AdamWOptions opts = {}) : opts_(opts) {}

    const AdamWOptions& options() const { return opts_; }
    int64_t step_count() const { return step_count_; }

    // One update over all parameters. Gradients must be populated; a
    // non-finite gradient raises OptimError naming the parameter.
    void step(std::vector<Parameter*>& params);

    void reset() {
        step_count_ = 0;
        m_.clear();
        v_.clear();
    }

private:
    AdamWOptions opts_;
    int64_t step_count_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace gazecomp
