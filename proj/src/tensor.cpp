#include "waveletgan/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace wg {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_)
        if (d == 0) throw ShapeError("tensor dimension must be positive, got shape " + shape_str());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_))
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::size_t Tensor::dim(std::size_t i) const {
    if (i >= shape_.size())
        throw ShapeError("dim index " + std::to_string(i) + " out of range for " + shape_str());
    return shape_[i];
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != data_.size())
        throw ShapeError("cannot reshape " + shape_str() + " to new element count " +
                         std::to_string(shape_product(shape)));
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + t.shape_str());
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        std::size_t bad = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!std::isfinite(t[i])) { bad = i; break; }
        throw NumericError(std::string(what) + ": non-finite value at flat index " +
                           std::to_string(bad) + " of shape " + t.shape_str());
    }
}

} // namespace wg
