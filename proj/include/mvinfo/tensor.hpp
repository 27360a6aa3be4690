#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvinfo::nn {

// Dense row-major 64-bit float tensor. Rank is usually 1 or 2; shape is
// validated against the data length on construction.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
        : shape(std::move(shape_in)), data(std::move(data_in)) {
        if (data.size() != element_count(shape)) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape");
        }
    }

    static Tensor zeros(std::vector<std::size_t> shape_in) {
        const std::size_t n = element_count(shape_in);
        return Tensor(std::move(shape_in), std::vector<double>(n, 0.0));
    }

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t s : shape) n *= s;
        return n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols(); }
    double* row(std::size_t r) { return data.data() + r * cols(); }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape != b.shape) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
}

} // namespace mvinfo::nn
