#include "gazecomp/tensor.hpp"

#include <sstream>

namespace gazecomp {

size_t shape_product(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape");
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::xavier(std::vector<int> shape, Rng& rng) {
    // fan_in/fan_out from the last two dims; rank-1 tensors use their length.
    int fan_in = shape.size() >= 2 ? shape[shape.size() - 1] : shape.back();
    int fan_out = shape.size() >= 2 ? shape[shape.size() - 2] : shape.back();
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    return uniform(std::move(shape), -limit, limit, rng);
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::check_finite(const std::string& where) const {
    if (!all_finite()) throw NumericError("non-finite value in " + where);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

}  // namespace gazecomp
