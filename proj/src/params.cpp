#include "rlsac/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "rlsac/errors.hpp"

namespace rlsac {

Param& ParamStore::add_linear(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                              Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor w = Tensor::zeros({fan_in, fan_out});
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
    return add(name, std::move(w));
}

Param& ParamStore::add_bias(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                            Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor b = Tensor::zeros({fan_out});
    for (auto& v : b.data) v = rng.uniform(-bound, bound);
    return add(name, std::move(b));
}

void ParamStore::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

std::size_t ParamStore::total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::vector<double> ParamStore::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(total_elements());
    for (const auto& p : params_) flat.insert(flat.end(), p.value.data.begin(), p.value.data.end());
    return flat;
}

void ParamStore::set_values(const std::vector<double>& flat) {
    if (flat.size() != total_elements())
        throw DimensionError("ParamStore::set_values: flat size mismatch");
    std::size_t offset = 0;
    for (auto& p : params_) {
        std::copy_n(flat.begin() + offset, p.value.size(), p.value.data.begin());
        offset += p.value.size();
    }
}

std::vector<double> ParamStore::flatten_grads() const {
    std::vector<double> flat;
    flat.reserve(total_elements());
    for (const auto& p : params_) flat.insert(flat.end(), p.grad.data.begin(), p.grad.data.end());
    return flat;
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (other.size() != size()) throw DimensionError("ParamStore::copy_values_from: layout mismatch");
    for (std::size_t i = 0; i < size(); ++i) params_[i].value = other[i].value;
}

void ParamStore::polyak_from(const ParamStore& online, double polyak) {
    if (online.size() != size()) throw DimensionError("ParamStore::polyak_from: layout mismatch");
    for (std::size_t i = 0; i < size(); ++i) {
        auto& dst = params_[i].value.data;
        const auto& src = online[i].value.data;
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] = polyak * src[j] + (1.0 - polyak) * dst[j];
    }
}

void ParamStore::adam_step(double lr, long step_count, double beta1, double beta2, double eps) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto& p : params_) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.data[i];
            p.adam_m.data[i] = beta1 * p.adam_m.data[i] + (1.0 - beta1) * g;
            p.adam_v.data[i] = beta2 * p.adam_v.data[i] + (1.0 - beta2) * g * g;
            const double mhat = p.adam_m.data[i] / bc1;
            const double vhat = p.adam_v.data[i] / bc2;
            p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void save_params(std::ostream& out, const ParamStore& store) {
    out << "DIFFMATH-PARAMS v1\n";
    char buf[32];
    for (const auto& p : store.all()) {
        out << "tensor " << p.name << " " << p.value.shape.size();
        for (auto d : p.value.shape) out << " " << d;
        out << "\n";
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", p.value.data[i]);
            out << buf << (i + 1 == p.value.size() ? "\n" : " ");
        }
    }
}

void load_params(std::istream& in, ParamStore& store) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("params: empty stream at line 1");
    if (line != "DIFFMATH-PARAMS v1")
        throw ParseError("params: unsupported version header at line 1: '" + line + "'");
    for (auto& p : store.all()) {
        std::string tag, name;
        std::size_t rank;
        if (!(in >> tag >> name >> rank) || tag != "tensor")
            throw ParseError("params: expected 'tensor' block for '" + p.name + "'");
        if (name != p.name)
            throw ParseError("params: tensor name mismatch, expected '" + p.name + "' got '" + name + "'");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape)
            if (!(in >> d)) throw ParseError("params: truncated shape for '" + name + "'");
        if (shape != p.value.shape) throw ParseError("params: shape mismatch for '" + name + "'");
        for (auto& v : p.value.data)
            if (!(in >> v)) throw ParseError("params: truncated values for '" + name + "'");
    }
}

}  // namespace rlsac
