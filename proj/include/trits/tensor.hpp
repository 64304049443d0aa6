#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "trits/error.hpp"

namespace trits {

std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of doubles. The value half of a graph node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor randn(Shape shape, double stddev, std::mt19937_64& rng);
    static Tensor uniform(Shape shape, double lo, double hi, std::mt19937_64& rng);
    static Tensor eye(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t numel() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty() && shape_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& vec() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Multi-index access with bounds checks.
    double& at(std::initializer_list<std::size_t> index);
    double at(std::initializer_list<std::size_t> index) const;

    double item() const;

    /// Same data, new shape; element count must match.
    Tensor reshaped(Shape shape) const;

    void fill(double value);
    bool all_finite() const noexcept;

private:
    std::size_t offset(std::initializer_list<std::size_t> index) const;

    Shape shape_;
    std::vector<double> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace trits
