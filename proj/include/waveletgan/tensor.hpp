#pragma once

#include "waveletgan/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace wg {

// Dense n-dimensional double array, row-major. The universal value type for
// signals, images, parameters and gradients. Value semantics throughout.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const;
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 4-D accessors (batch, height, width, channel); bounds unchecked.
    double& at4(std::size_t b, std::size_t h, std::size_t w, std::size_t c) {
        return data_[((b * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
    }
    double at4(std::size_t b, std::size_t h, std::size_t w, std::size_t c) const {
        return data_[((b * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
    }
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    void fill(double v);
    // Same data, new shape; element counts must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Throws ShapeError naming `what` unless the tensor has the given rank.
void require_rank(const Tensor& t, std::size_t rank, const char* what);
// Throws NumericError naming `what` if any entry is non-finite.
void require_finite(const Tensor& t, const char* what);

} // namespace wg
