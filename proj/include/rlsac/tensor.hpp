#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "rlsac/errors.hpp"

namespace rlsac {

/// Dense row-major tensor of 64-bit reals.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (element_count(shape) != data.size())
            throw DimensionError("tensor: shape does not match value count");
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        auto n = element_count(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> s, double v) {
        auto n = element_count(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    /// 2-D convenience constructor from nested lists.
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        std::vector<double> d;
        std::size_t cols = rows.begin()->size();
        for (const auto& r : rows) {
            if (r.size() != cols) throw DimensionError("tensor: ragged rows");
            d.insert(d.end(), r.begin(), r.end());
        }
        return Tensor({rows.size(), cols}, std::move(d));
    }

    static Tensor vec(std::vector<double> d) {
        auto n = d.size();
        return Tensor({n}, std::move(d));
    }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }

    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const {
        if (shape.size() < 2) return shape.empty() ? 1 : 1;
        std::size_t c = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
        return c;
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace rlsac
