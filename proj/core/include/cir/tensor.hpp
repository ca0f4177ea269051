#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <vector>

#include "cir/errors.hpp"

namespace cir {

/// Dense row-major buffer of doubles. Batches are rank-2: {rows, cols}.
struct TensorBuffer {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    TensorBuffer() = default;
    TensorBuffer(std::initializer_list<std::size_t> dims, double fill = 0.0)
        : shape(dims), values(numel_of(shape), fill) {}

    static TensorBuffer matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return TensorBuffer({rows, cols}, fill);
    }

    std::size_t numel() const noexcept { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }

    double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

    bool operator==(const TensorBuffer& other) const = default;

    static std::size_t numel_of(const std::vector<std::size_t>& dims) {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }
};

/// Copies the selected rows of a rank-2 buffer into a new contiguous batch.
inline TensorBuffer gather_rows(const TensorBuffer& x, std::span<const std::size_t> idx) {
    TensorBuffer out = TensorBuffer::matrix(idx.size(), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = x.row(idx[r]);
        auto dst = out.row(r);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
    }
    return out;
}

}  // namespace cir
