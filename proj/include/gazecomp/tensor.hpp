#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gazecomp/common.hpp"
#include "gazecomp/seeds.hpp"

namespace gazecomp {

// Dense row-major tensor of doubles. Small and deliberately boring: the
// fixed model architecture only ever needs ranks 1..3.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    // Xavier-uniform init over [-limit, limit] with limit = sqrt(6/(fan_in+fan_out)).
    static Tensor xavier(std::vector<int> shape, Rng& rng);
    static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

    const std::vector<int>& shape() const { return shape_; }
    int dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }
    size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double& at2(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    double at2(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    int rows() const { return shape_.at(0); }
    int cols() const { return shape_.at(1); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // Throws NumericError if any element is NaN or infinite.
    void check_finite(const std::string& where) const;
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

size_t shape_product(const std::vector<int>& shape);

}  // namespace gazecomp
