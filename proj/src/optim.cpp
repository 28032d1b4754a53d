#include "gazecomp/optim.hpp"

namespace gazecomp {

void AdamW::step(std::vector<Parameter*>& params) {
    if (m_.empty()) {
        for (auto* p : params) {
            m_.push_back(Tensor::zeros(p->value().shape()));
            v_.push_back(Tensor::zeros(p->value().shape()));
        }
    }
    if (m_.size() != params.size()) throw OptimError("optimizer state does not match parameter list");

    ++step_count_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_count_));

    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        if (!p.has_grad()) throw OptimError("gradient not populated for parameter '" + p.name() + "'");
        const Tensor& g = p.grad();
        if (!g.all_finite()) throw OptimError("non-finite gradient in parameter '" + p.name() + "'");
        Tensor& value = p.mutable_value();
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (size_t i = 0; i < value.size(); ++i) {
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= opts_.lr * opts_.weight_decay * value[i];
            value[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
        }
    }
}

}  // namespace gazecomp
