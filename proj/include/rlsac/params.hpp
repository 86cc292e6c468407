#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rlsac/rng.hpp"
#include "rlsac/tensor.hpp"

namespace rlsac {

/// One trainable tensor plus its gradient accumulator and Adam moments.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;

    Param() = default;
    Param(std::string n, Tensor v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(Tensor::zeros(value.shape)),
          adam_m(Tensor::zeros(value.shape)),
          adam_v(Tensor::zeros(value.shape)) {}
};

/// Ordered collection of named parameters. Order is fixed at construction and
/// defines the serialization layout and the flattened vector used by the
/// gradient checker.
class ParamStore {
public:
    Param& add(const std::string& name, Tensor value) {
        params_.emplace_back(name, std::move(value));
        return params_.back();
    }

    /// Weight matrix initialized uniformly in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
    Param& add_linear(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
    /// Bias initialized with the same fan-in scaling.
    Param& add_bias(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);

    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    std::size_t size() const { return params_.size(); }

    void zero_grad();
    std::size_t total_elements() const;

    /// Flatten / restore all values in declaration order.
    std::vector<double> flatten_values() const;
    void set_values(const std::vector<double>& flat);
    std::vector<double> flatten_grads() const;

    /// Copies values from another store with identical layout.
    void copy_values_from(const ParamStore& other);

    /// target <- polyak * online + (1 - polyak) * target, element-wise.
    void polyak_from(const ParamStore& online, double polyak);

    /// One Adam step on the accumulated gradients. `step_count` is 1-based.
    void adam_step(double lr, long step_count, double beta1 = 0.9, double beta2 = 0.999,
                   double eps = 1e-8);

private:
    std::vector<Param> params_;
};

/// Versioned text serialization: header "DIFFMATH-PARAMS v1", then per tensor
/// a line "tensor <name> <rank> <dims...>" followed by the row-major values at
/// 17 significant digits (round-trip exact for 64-bit reals).
void save_params(std::ostream& out, const ParamStore& store);
void load_params(std::istream& in, ParamStore& store);

}  // namespace rlsac
