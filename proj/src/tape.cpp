#include "rlsac/tape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace rlsac {

namespace {
using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace

VarId Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, const Tensor&)> backprop) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad && record_;
    if (node.requires_grad) {
        node.grad = Tensor::zeros(node.value.shape);
        node.backprop = std::move(backprop);
    }
    nodes_.push_back(std::move(node));
    return static_cast<VarId>(nodes_.size()) - 1;
}

void Tape::accumulate(VarId id, const std::vector<double>& g) {
    auto& dst = nodes_[id].grad.data;
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::accumulate_at(VarId id, std::size_t flat_index, double g) {
    nodes_[id].grad.data[flat_index] += g;
}

VarId Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

void Tape::backward(VarId loss) {
    if (!record_) throw ContractError("backward: tape was created in inference mode");
    if (!nodes_[loss].value.is_scalar()) throw ContractError("backward: loss must be a scalar");
    if (backward_done_) throw ContractError("backward: called twice without reset_gradients");
    backward_done_ = true;
    if (!nodes_[loss].requires_grad) return;
    nodes_[loss].grad.data[0] = 1.0;
    for (VarId id = loss; id >= 0; --id) {
        const Node& node = nodes_[id];
        if (node.requires_grad && node.backprop) node.backprop(*this, node.grad);
    }
}

void Tape::reset_gradients() {
    for (auto& node : nodes_) {
        if (node.requires_grad) std::fill(node.grad.data.begin(), node.grad.data.end(), 0.0);
    }
    backward_done_ = false;
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2)
        throw DimensionError("matmul: operands must be 2-D");
    const std::size_t p = ta.shape[0], q = ta.shape[1], r = tb.shape[1];
    if (tb.shape[0] != q) throw DimensionError("matmul: inner dimensions disagree");

    Tensor out = Tensor::zeros({p, r});
    {
        ConstMatMap ma(ta.data.data(), p, q);
        ConstMatMap mb(tb.data.data(), q, r);
        MatMap mo(out.data.data(), p, r);
        mo.noalias() = ma * mb;
    }
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[b].requires_grad);
    return push(std::move(out), need, [a, b, p, q, r](Tape& t, const Tensor& g) {
        ConstMatMap mg(g.data.data(), p, r);
        if (t.nodes_[a].requires_grad) {
            ConstMatMap mb(t.value(b).data.data(), q, r);
            MatMap ga(t.nodes_[a].grad.data.data(), p, q);
            ga.noalias() += mg * mb.transpose();
        }
        if (t.nodes_[b].requires_grad) {
            ConstMatMap ma(t.value(a).data.data(), p, q);
            MatMap gb(t.nodes_[b].grad.data.data(), q, r);
            gb.noalias() += ma.transpose() * mg;
        }
    });
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimensionError("add: shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[b].requires_grad);
    return push(std::move(out), need, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) t.accumulate(a, g.data);
        if (t.nodes_[b].requires_grad) t.accumulate(b, g.data);
    });
}

VarId Tape::sub(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimensionError("sub: shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= tb.data[i];
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[b].requires_grad);
    return push(std::move(out), need, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) t.accumulate(a, g.data);
        if (t.nodes_[b].requires_grad) {
            auto& dst = t.nodes_[b].grad.data;
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] -= g.data[i];
        }
    });
}

VarId Tape::mul(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimensionError("mul: shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[b].requires_grad);
    return push(std::move(out), need, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            const auto& vb = t.value(b).data;
            auto& dst = t.nodes_[a].grad.data;
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data[i] * vb[i];
        }
        if (t.nodes_[b].requires_grad) {
            const auto& va = t.value(a).data;
            auto& dst = t.nodes_[b].grad.data;
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data[i] * va[i];
        }
    });
}

VarId Tape::scale(VarId a, double s) {
    Tensor out = value(a);
    for (auto& v : out.data) v *= s;
    const bool need = record_ && nodes_[a].requires_grad;
    return push(std::move(out), need, [a, s](Tape& t, const Tensor& g) {
        auto& dst = t.nodes_[a].grad.data;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data[i] * s;
    });
}

VarId Tape::add_scalar(VarId a, double s) {
    Tensor out = value(a);
    for (auto& v : out.data) v += s;
    const bool need = record_ && nodes_[a].requires_grad;
    return push(std::move(out), need, [a](Tape& t, const Tensor& g) { t.accumulate(a, g.data); });
}

VarId Tape::relu(VarId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    const bool need = record_ && nodes_[a].requires_grad;
    return push(std::move(out), need, [a](Tape& t, const Tensor& g) {
        const auto& va = t.value(a).data;
        auto& dst = t.nodes_[a].grad.data;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (va[i] > 0.0) dst[i] += g.data[i];
    });
}

VarId Tape::exp(VarId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::exp(v);
    const bool need = record_ && nodes_[a].requires_grad;
    const VarId self = static_cast<VarId>(nodes_.size());
    return push(std::move(out), need, [a, self](Tape& t, const Tensor& g) {
        const auto& vo = t.value(self).data;
        auto& dst = t.nodes_[a].grad.data;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data[i] * vo[i];
    });
}

VarId Tape::add_row_broadcast(VarId a, VarId bias) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(bias);
    if (ta.shape.size() != 2) throw DimensionError("add_row_broadcast: matrix must be 2-D");
    const std::size_t rows = ta.shape[0], cols = ta.shape[1];
    if (tb.size() != cols) throw DimensionError("add_row_broadcast: bias length mismatch");
    Tensor out = ta;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] += tb.data[c];
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[bias].requires_grad);
    return push(std::move(out), need, [a, bias, rows, cols](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) t.accumulate(a, g.data);
        if (t.nodes_[bias].requires_grad) {
            auto& dst = t.nodes_[bias].grad.data;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) dst[c] += g.data[r * cols + c];
        }
    });
}

VarId Tape::concat_cols(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[0] != tb.shape[0])
        throw DimensionError("concat_cols: operands must be 2-D with equal row counts");
    const std::size_t rows = ta.shape[0], ca = ta.shape[1], cb = tb.shape[1];
    Tensor out = Tensor::zeros({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(&ta.data[r * ca], ca, &out.data[r * (ca + cb)]);
        std::copy_n(&tb.data[r * cb], cb, &out.data[r * (ca + cb) + ca]);
    }
    const bool need = record_ && (nodes_[a].requires_grad || nodes_[b].requires_grad);
    return push(std::move(out), need, [a, b, rows, ca, cb](Tape& t, const Tensor& g) {
        for (std::size_t r = 0; r < rows; ++r) {
            if (t.nodes_[a].requires_grad)
                for (std::size_t c = 0; c < ca; ++c)
                    t.accumulate_at(a, r * ca + c, g.data[r * (ca + cb) + c]);
            if (t.nodes_[b].requires_grad)
                for (std::size_t c = 0; c < cb; ++c)
                    t.accumulate_at(b, r * cb + c, g.data[r * (ca + cb) + ca + c]);
        }
    });
}

VarId Tape::gather_rows(VarId a, std::vector<int> index) {
    const Tensor& ta = value(a);
    if (ta.shape.size() != 2) throw DimensionError("gather_rows: input must be 2-D");
    const std::size_t rows = ta.shape[0], cols = ta.shape[1];
    Tensor out = Tensor::zeros({index.size(), cols});
    for (std::size_t r = 0; r < index.size(); ++r) {
        const int src = index[r];
        if (src < 0 || static_cast<std::size_t>(src) >= rows)
            throw DimensionError("gather_rows: index out of range");
        std::copy_n(&ta.data[static_cast<std::size_t>(src) * cols], cols, &out.data[r * cols]);
    }
    const bool need = record_ && nodes_[a].requires_grad;
    return push(std::move(out), need, [a, index = std::move(index), cols](Tape& t, const Tensor& g) {
        auto& dst = t.nodes_[a].grad.data;
        for (std::size_t r = 0; r < index.size(); ++r) {
            const std::size_t base = static_cast<std::size_t>(index[r]) * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[base + c] += g.data[r * cols + c];
        }
    });
}

VarId Tape::reshape(VarId a, std::vector<std::size_t> shape) {
    const Tensor& ta = value(a);
    if (Tensor::element_count(shape) != ta.size()) throw DimensionError("reshape: element count mismatch");
    Tensor out(std::move(shape), ta.data);
    const bool need = record_ && nodes_[a].requires_grad;
    return push(std::move(out), need, [a](Tape& t, const Tensor& g) { t.accumulate(a, g.data); });
}

VarId Tape::neighbor_max_pool(VarId edge_features, const NeighborGraph& graph) {
    const Tensor& te = value(edge_features);
    if (te.shape.size() != 3) throw DimensionError("neighbor_max_pool: expected N x k x H input");
    const std::size_t n = te.shape[0], k = te.shape[1], h = te.shape[2];
    if (static_cast<int>(n) != graph.num_points() || static_cast<int>(k) != graph.k)
        throw DimensionError("neighbor_max_pool: feature dims do not match graph");

    Tensor out = Tensor::zeros({n, h});
    std::vector<int> argmax(n * h, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < h; ++c) {
            double best = te.data[(i * k) * h + c];
            int best_slot = 0;
            for (std::size_t slot = 1; slot < k; ++slot) {
                const double v = te.data[(i * k + slot) * h + c];
                if (v > best) {  // strict: ties keep the lowest slot
                    best = v;
                    best_slot = static_cast<int>(slot);
                }
            }
            out.data[i * h + c] = best;
            argmax[i * h + c] = best_slot;
        }
    }
    const bool need = record_ && nodes_[edge_features].requires_grad;
    return push(std::move(out), need,
                [edge_features, argmax = std::move(argmax), k, h, n](Tape& t, const Tensor& g) {
                    auto& dst = t.nodes_[edge_features].grad.data;
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t c = 0; c < h; ++c)
                            dst[(i * k + static_cast<std::size_t>(argmax[i * h + c])) * h + c] +=
                                g.data[i * h + c];
                });
}

VarId Tape::log_softmax(VarId logits) {
    const Tensor& tl = value(logits);
    if (tl.size() == 0) throw DimensionError("log_softmax: empty input");
    if (tl.shape.size() > 2 || (tl.shape.size() == 2 && tl.shape[1] != 1))
        throw DimensionError("log_softmax: expected a vector");
    const std::size_t n = tl.size();
    double mx = tl.data[0];
    for (double v : tl.data) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : tl.data) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    Tensor out = tl;
    for (auto& v : out.data) v -= lse;
    const bool need = record_ && nodes_[logits].requires_grad;
    const VarId self = static_cast<VarId>(nodes_.size());
    return push(std::move(out), need, [logits, self, n](Tape& t, const Tensor& g) {
        const auto& logp = t.value(self).data;
        double gsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) gsum += g.data[i];
        auto& dst = t.nodes_[logits].grad.data;
        for (std::size_t i = 0; i < n; ++i) dst[i] += g.data[i] - std::exp(logp[i]) * gsum;
    });
}

VarId Tape::sum_all(VarId a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double v : ta.data) s += v;
    const bool need = record_ && nodes_[a].requires_grad;
    return push(Tensor({1}, {s}), need, [a](Tape& t, const Tensor& g) {
        auto& dst = t.nodes_[a].grad.data;
        for (auto& v : dst) v += g.data[0];
    });
}

VarId Tape::mean_all(VarId a) {
    const std::size_t n = value(a).size();
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

}  // namespace rlsac
