// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace duration {

std::size_t ParameterSet::add(std::string name, Matrix value) {
    require(!index_of(name).has_value(), ErrorKind::InvalidArgument,
            "duplicate parameter name '" + name + "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::optional<std::size_t> ParameterSet::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

Gradients zero_gradients(const ParameterSet& params) {
    Gradients g;
    g.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) g.emplace_back(params[i].rows(), params[i].cols());
    return g;
}

void accumulate(Gradients& into, const Gradients& from, double weight) {
    require(into.size() == from.size(), ErrorKind::InvalidArgument, "gradient set size mismatch");
    for (std::size_t i = 0; i < into.size(); ++i) {
        auto dst = into[i].values();
        auto src = from[i].values();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += weight * src[j];
    }
}

const char* op_name(Op op) noexcept {
    switch (op) {
        case Op::Input: return "input";
        case Op::Constant: return "constant";
        case Op::Parameter: return "parameter";
        case Op::MatMul: return "matmul";
        case Op::SparseMatMul: return "sparse_matmul";
        case Op::AddBias: return "add_bias";
        case Op::Add: return "add";
        case Op::Subtract: return "subtract";
        case Op::Scale: return "scale";
        case Op::Relu: return "relu";
        case Op::Sigmoid: return "sigmoid";
        case Op::ConcatCols: return "concat_cols";
        case Op::ConcatRows: return "concat_rows";
        case Op::RowwiseDot: return "rowwise_dot";
        case Op::Mean: return "mean";
        case Op::Sum: return "sum";
        case Op::Square: return "square";
        case Op::FrobeniusSq: return "frobenius_sq";
        case Op::RbfPairwise: return "rbf_pairwise";
        case Op::Covariance: return "covariance";
        case Op::Pad: return "pad";
        case Op::BceWithLogits: return "bce_with_logits";
    }
    return "?";
}

namespace {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void shape_error(Op op, const std::string& detail) {
    fail(ErrorKind::InvalidArgument, std::string("shape mismatch in ") + op_name(op) + ": " + detail);
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

NodeId Graph::push(Node node) {
    if (node.op != Op::Parameter && node.op != Op::Input && node.op != Op::Constant) {
        for (auto in : node.inputs) node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
    }
    nodes_.push_back(std::move(node));
    evaluated_ = false;
    differentiated_ = false;
    return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::at(NodeId n) const {
    require(n.index < nodes_.size(), ErrorKind::InvalidArgument,
            "node id " + std::to_string(n.index) + " does not belong to this graph");
    return nodes_[n.index];
}

NodeId Graph::input(std::string name, std::size_t rows, std::size_t cols) {
    Node n{Op::Input, {}, rows, cols};
    n.name = std::move(name);
    return push(std::move(n));
}

NodeId Graph::constant(Matrix value) {
    Node n{Op::Constant, {}, value.rows(), value.cols()};
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::parameter(std::size_t index) {
    require(index < params_->size(), ErrorKind::InvalidArgument,
            "parameter index " + std::to_string(index) + " out of range");
    if (auto it = parameter_nodes_.find(index); it != parameter_nodes_.end()) return NodeId{it->second};
    const Matrix& p = (*params_)[index];
    Node n{Op::Parameter, {}, p.rows(), p.cols()};
    n.param_index = index;
    n.needs_grad = true;
    n.name = params_->name(index);
    NodeId id = push(std::move(n));
    parameter_nodes_[index] = id.index;
    return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const auto &x = at(a), &y = at(b);
    if (x.cols != y.rows) shape_error(Op::MatMul, shape_string(x.rows, x.cols) + " · " + shape_string(y.rows, y.cols));
    return push(Node{Op::MatMul, {a.index, b.index}, x.rows, y.cols});
}

NodeId Graph::sparse_matmul(std::shared_ptr<const SparseRows> lhs, NodeId rhs) {
    require(lhs != nullptr, ErrorKind::InvalidArgument, "sparse_matmul: null sparse operand");
    const auto& w = at(rhs);
    if (lhs->width() != w.rows)
        shape_error(Op::SparseMatMul, "sparse width " + std::to_string(lhs->width()) + " vs " +
                                          shape_string(w.rows, w.cols));
    Node n{Op::SparseMatMul, {rhs.index}, lhs->rows(), w.cols};
    n.sparse = std::move(lhs);
    return push(std::move(n));
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
    const auto &a = at(x), &b = at(bias);
    if (b.rows != 1 || b.cols != a.cols)
        shape_error(Op::AddBias, shape_string(a.rows, a.cols) + " + " + shape_string(b.rows, b.cols));
    return push(Node{Op::AddBias, {x.index, bias.index}, a.rows, a.cols});
}

NodeId Graph::add(NodeId a, NodeId b) {
    const auto &x = at(a), &y = at(b);
    if (x.rows != y.rows || x.cols != y.cols)
        shape_error(Op::Add, shape_string(x.rows, x.cols) + " + " + shape_string(y.rows, y.cols));
    return push(Node{Op::Add, {a.index, b.index}, x.rows, x.cols});
}

NodeId Graph::subtract(NodeId a, NodeId b) {
    const auto &x = at(a), &y = at(b);
    if (x.rows != y.rows || x.cols != y.cols)
        shape_error(Op::Subtract, shape_string(x.rows, x.cols) + " - " + shape_string(y.rows, y.cols));
    return push(Node{Op::Subtract, {a.index, b.index}, x.rows, x.cols});
}

NodeId Graph::scale(NodeId a, double factor) {
    const auto& x = at(a);
    Node n{Op::Scale, {a.index}, x.rows, x.cols};
    n.scalar = factor;
    return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
    const auto& x = at(a);
    return push(Node{Op::Relu, {a.index}, x.rows, x.cols});
}

NodeId Graph::sigmoid(NodeId a) {
    const auto& x = at(a);
    return push(Node{Op::Sigmoid, {a.index}, x.rows, x.cols});
}

NodeId Graph::concat_cols(NodeId a, NodeId b) {
    const auto &x = at(a), &y = at(b);
    if (x.rows != y.rows)
        shape_error(Op::ConcatCols, shape_string(x.rows, x.cols) + " ⊕ " + shape_string(y.rows, y.cols));
    return push(Node{Op::ConcatCols, {a.index, b.index}, x.rows, x.cols + y.cols});
}

NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
    require(!parts.empty(), ErrorKind::InvalidArgument, "concat_rows: no parts");
    Node n{Op::ConcatRows, {}, 0, at(parts.front()).cols};
    for (auto p : parts) {
        const auto& x = at(p);
        if (x.cols != n.cols) shape_error(Op::ConcatRows, "column count " + std::to_string(x.cols) + " vs " + std::to_string(n.cols));
        n.rows += x.rows;
        n.inputs.push_back(p.index);
    }
    return push(std::move(n));
}

NodeId Graph::rowwise_dot(NodeId a, NodeId b) {
    const auto &x = at(a), &y = at(b);
    if (x.rows != y.rows || x.cols != y.cols)
        shape_error(Op::RowwiseDot, shape_string(x.rows, x.cols) + " vs " + shape_string(y.rows, y.cols));
    return push(Node{Op::RowwiseDot, {a.index, b.index}, x.rows, 1});
}

NodeId Graph::mean(NodeId a) {
    const auto& x = at(a);
    require(x.rows * x.cols > 0, ErrorKind::InvalidArgument, "mean of an empty node");
    return push(Node{Op::Mean, {a.index}, 1, 1});
}

NodeId Graph::sum(NodeId a) { at(a); return push(Node{Op::Sum, {a.index}, 1, 1}); }

NodeId Graph::square(NodeId a) {
    const auto& x = at(a);
    return push(Node{Op::Square, {a.index}, x.rows, x.cols});
}

NodeId Graph::frobenius_sq(NodeId a) { at(a); return push(Node{Op::FrobeniusSq, {a.index}, 1, 1}); }

NodeId Graph::rbf_pairwise(NodeId a, NodeId b, double bandwidth) {
    const auto &x = at(a), &y = at(b);
    if (x.cols != y.cols)
        shape_error(Op::RbfPairwise, shape_string(x.rows, x.cols) + " vs " + shape_string(y.rows, y.cols));
    require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorKind::InvalidArgument,
            "rbf_pairwise: bandwidth must be finite and positive");
    Node n{Op::RbfPairwise, {a.index, b.index}, x.rows, y.rows};
    n.scalar = bandwidth;
    return push(std::move(n));
}

NodeId Graph::covariance(NodeId a) {
    const auto& x = at(a);
    require(x.rows >= 1, ErrorKind::InvalidArgument, "covariance of zero samples");
    return push(Node{Op::Covariance, {a.index}, x.cols, x.cols});
}

NodeId Graph::pad(NodeId a, std::size_t rows, std::size_t cols) {
    const auto& x = at(a);
    if (rows < x.rows || cols < x.cols)
        shape_error(Op::Pad, shape_string(x.rows, x.cols) + " cannot pad to " + shape_string(rows, cols));
    return push(Node{Op::Pad, {a.index}, rows, cols});
}

NodeId Graph::bce_with_logits(NodeId logits, NodeId labels) {
    const auto &z = at(logits), &y = at(labels);
    if (z.cols != 1 || y.cols != 1 || z.rows != y.rows)
        shape_error(Op::BceWithLogits, shape_string(z.rows, z.cols) + " vs " + shape_string(y.rows, y.cols));
    require(z.rows >= 1, ErrorKind::InvalidArgument, "bce over an empty batch");
    return push(Node{Op::BceWithLogits, {logits.index, labels.index}, 1, 1});
}

// ---------------------------------------------------------------------------
// forward

void Graph::forward(const Bindings& bindings) {
    for (auto& node : nodes_) {
        switch (node.op) {
            case Op::Input: {
                auto it = bindings.find(node.name);
                require(it != bindings.end(), ErrorKind::State, "unbound input '" + node.name + "'");
                require(it->second.rows() == node.rows && it->second.cols() == node.cols,
                        ErrorKind::InvalidArgument,
                        "input '" + node.name + "' bound to " +
                            shape_string(it->second.rows(), it->second.cols()) + ", declared " +
                            shape_string(node.rows, node.cols));
                node.value = it->second;
                break;
            }
            case Op::Constant: break;
            // Parameters are read in place; see value_of().
            case Op::Parameter: continue;
            default: compute(node); break;
        }
        if (!all_finite(node.value.values()))
            fail(ErrorKind::Numeric, std::string("non-finite value produced by ") + op_name(node.op) +
                                         (node.name.empty() ? "" : " '" + node.name + "'"));
    }
    evaluated_ = true;
    differentiated_ = false;
}

void Graph::compute(Node& node) {
    auto in = [&](std::size_t k) -> const Matrix& { return value_of(node.inputs[k]); };
    Matrix out;
    switch (node.op) {
        case Op::MatMul: out = duration::matmul(in(0), in(1)); break;
        case Op::SparseMatMul: {
            const SparseRows& s = *node.sparse;
            const Matrix& w = in(0);
            out = Matrix(s.rows(), w.cols());
            for (std::size_t r = 0; r < s.rows(); ++r) {
                auto idx = s.indices(r);
                auto val = s.values(r);
                double* o = out.row(r).data();
                for (std::size_t k = 0; k < idx.size(); ++k) {
                    const double* wr = w.row(idx[k]).data();
                    for (std::size_t j = 0; j < w.cols(); ++j) o[j] += val[k] * wr[j];
                }
            }
            break;
        }
        case Op::AddBias: {
            out = in(0);
            const Matrix& b = in(1);
            for (std::size_t r = 0; r < out.rows(); ++r) {
                auto row = out.row(r);
                for (std::size_t j = 0; j < out.cols(); ++j) row[j] += b[j];
            }
            break;
        }
        case Op::Add:
        case Op::Subtract: {
            out = in(0);
            const double sign = node.op == Op::Add ? 1.0 : -1.0;
            auto rhs = in(1).values();
            auto dst = out.values();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sign * rhs[i];
            break;
        }
        case Op::Scale:
            out = in(0);
            for (auto& v : out.values()) v *= node.scalar;
            break;
        case Op::Relu:
            out = in(0);
            for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Op::Sigmoid:
            out = in(0);
            for (auto& v : out.values()) v = logistic(v);
            break;
        case Op::ConcatCols: {
            const Matrix &a = in(0), &b = in(1);
            out = Matrix(node.rows, node.cols);
            for (std::size_t r = 0; r < node.rows; ++r) {
                auto dst = out.row(r);
                std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
                std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + a.cols());
            }
            break;
        }
        case Op::ConcatRows: {
            out = Matrix(node.rows, node.cols);
            std::size_t offset = 0;
            for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                auto src = in(k).values();
                std::copy(src.begin(), src.end(), out.values().begin() + offset);
                offset += src.size();
            }
            break;
        }
        case Op::RowwiseDot: {
            const Matrix &a = in(0), &b = in(1);
            out = Matrix(node.rows, 1);
            for (std::size_t r = 0; r < node.rows; ++r) {
                auto x = a.row(r);
                auto y = b.row(r);
                double acc = 0.0;
                for (std::size_t j = 0; j < x.size(); ++j) acc += x[j] * y[j];
                out[r] = acc;
            }
            break;
        }
        case Op::Mean:
        case Op::Sum: {
            double acc = 0.0;
            for (double v : in(0).values()) acc += v;
            if (node.op == Op::Mean) acc /= static_cast<double>(in(0).size());
            out = Matrix::scalar(acc);
            break;
        }
        case Op::Square:
            out = in(0);
            for (auto& v : out.values()) v *= v;
            break;
        case Op::FrobeniusSq: {
            double acc = 0.0;
            for (double v : in(0).values()) acc += v * v;
            out = Matrix::scalar(acc);
            break;
        }
        case Op::RbfPairwise: out = rbf_kernel(in(0), in(1), node.scalar); break;
        case Op::Covariance: out = sample_covariance(in(0)); break;
        case Op::Pad: {
            const Matrix& a = in(0);
            out = Matrix(node.rows, node.cols);
            for (std::size_t r = 0; r < a.rows(); ++r)
                std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
            break;
        }
        case Op::BceWithLogits: {
            const Matrix &z = in(0), &y = in(1);
            double acc = 0.0;
            for (std::size_t i = 0; i < z.rows(); ++i) {
                const double zi = z[i];
                acc += std::max(zi, 0.0) - zi * y[i] + std::log1p(std::exp(-std::abs(zi)));
            }
            out = Matrix::scalar(acc / static_cast<double>(z.rows()));
            break;
        }
        case Op::Input:
        case Op::Constant:
        case Op::Parameter: break;
    }
    node.value = std::move(out);
}

const Matrix& Graph::value(NodeId n) const {
    require(evaluated_, ErrorKind::State, "value() requested before forward()");
    return (at(n), value_of(n.index));
}

const Matrix& Graph::value_of(std::uint32_t index) const {
    const Node& node = nodes_[index];
    return node.op == Op::Parameter ? (*params_)[node.param_index] : node.value;
}

// ---------------------------------------------------------------------------
// backward

Matrix& Graph::adjoint_slot(std::uint32_t index) {
    Node& n = nodes_[index];
    if (n.adjoint.empty() && n.rows * n.cols > 0) n.adjoint = Matrix(n.rows, n.cols);
    return n.adjoint;
}

Gradients Graph::backward(NodeId loss) {
    require(evaluated_, ErrorKind::State, "backward() requires a prior forward()");
    const Node& root = at(loss);
    require(root.rows == 1 && root.cols == 1, ErrorKind::InvalidArgument,
            "backward() needs a scalar loss, got " + shape_string(root.rows, root.cols));
    for (auto& n : nodes_) n.adjoint = Matrix();
    adjoint_slot(loss.index)[0] = 1.0;

    for (std::int64_t i = loss.index; i >= 0; --i) {
        const Node& node = nodes_[static_cast<std::size_t>(i)];
        if (!node.needs_grad || node.adjoint.empty()) continue;
        propagate(node);
    }

    Gradients grads = zero_gradients(*params_);
    for (const auto& [pindex, nindex] : parameter_nodes_) {
        const Node& n = nodes_[nindex];
        if (!n.adjoint.empty()) grads[pindex] = n.adjoint;
    }
    differentiated_ = true;
    return grads;
}

void Graph::propagate(const Node& node) {
    const Matrix& g = node.adjoint;
    auto in_value = [&](std::size_t k) -> const Matrix& { return value_of(node.inputs[k]); };
    auto wants = [&](std::size_t k) { return nodes_[node.inputs[k]].needs_grad; };
    auto slot = [&](std::size_t k) -> Matrix& { return adjoint_slot(node.inputs[k]); };
    auto add_into = [](Matrix& dst, const Matrix& src, double w = 1.0) {
        auto d = dst.values();
        auto s = src.values();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += w * s[i];
    };

    switch (node.op) {
        case Op::Input:
        case Op::Constant:
        case Op::Parameter: break;
        case Op::MatMul:
            if (wants(0)) add_into(slot(0), matmul_transpose_b(g, in_value(1)));
            if (wants(1)) add_into(slot(1), matmul_transpose_a(in_value(0), g));
            break;
        case Op::SparseMatMul:
            if (wants(0)) {
                const SparseRows& s = *node.sparse;
                Matrix& dw = slot(0);
                for (std::size_t r = 0; r < s.rows(); ++r) {
                    auto idx = s.indices(r);
                    auto val = s.values(r);
                    const double* gr = g.row(r).data();
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                        double* d = dw.row(idx[k]).data();
                        for (std::size_t j = 0; j < g.cols(); ++j) d[j] += val[k] * gr[j];
                    }
                }
            }
            break;
        case Op::AddBias:
            if (wants(0)) add_into(slot(0), g);
            if (wants(1)) {
                Matrix& db = slot(1);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto gr = g.row(r);
                    for (std::size_t j = 0; j < g.cols(); ++j) db[j] += gr[j];
                }
            }
            break;
        case Op::Add:
            if (wants(0)) add_into(slot(0), g);
            if (wants(1)) add_into(slot(1), g);
            break;
        case Op::Subtract:
            if (wants(0)) add_into(slot(0), g);
            if (wants(1)) add_into(slot(1), g, -1.0);
            break;
        case Op::Scale:
            if (wants(0)) add_into(slot(0), g, node.scalar);
            break;
        case Op::Relu:
            if (wants(0)) {
                Matrix& d = slot(0);
                auto x = in_value(0).values();
                for (std::size_t i = 0; i < d.size(); ++i)
                    if (x[i] > 0.0) d[i] += g[i];
            }
            break;
        case Op::Sigmoid:
            if (wants(0)) {
                Matrix& d = slot(0);
                auto y = node.value.values();
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
            }
            break;
        case Op::ConcatCols: {
            const std::size_t left = nodes_[node.inputs[0]].cols;
            for (std::size_t k = 0; k < 2; ++k) {
                if (!wants(k)) continue;
                Matrix& d = slot(k);
                const std::size_t offset = k == 0 ? 0 : left;
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto gr = g.row(r);
                    auto dr = d.row(r);
                    for (std::size_t j = 0; j < dr.size(); ++j) dr[j] += gr[offset + j];
                }
            }
            break;
        }
        case Op::ConcatRows: {
            std::size_t offset = 0;
            for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                const Node& part = nodes_[node.inputs[k]];
                const std::size_t count = part.rows * part.cols;
                if (wants(k)) {
                    auto d = slot(k).values();
                    for (std::size_t i = 0; i < count; ++i) d[i] += g[offset + i];
                }
                offset += count;
            }
            break;
        }
        case Op::RowwiseDot: {
            const Matrix &a = in_value(0), &b = in_value(1);
            for (std::size_t k = 0; k < 2; ++k) {
                if (!wants(k)) continue;
                const Matrix& other = k == 0 ? b : a;
                Matrix& d = slot(k);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto o = other.row(r);
                    auto dr = d.row(r);
                    for (std::size_t j = 0; j < dr.size(); ++j) dr[j] += g[r] * o[j];
                }
            }
            break;
        }
        case Op::Mean:
        case Op::Sum:
            if (wants(0)) {
                Matrix& d = slot(0);
                const double w = node.op == Op::Mean ? g[0] / static_cast<double>(d.size()) : g[0];
                for (auto& v : d.values()) v += w;
            }
            break;
        case Op::Square:
        case Op::FrobeniusSq:
            if (wants(0)) {
                Matrix& d = slot(0);
                auto x = in_value(0).values();
                for (std::size_t i = 0; i < d.size(); ++i)
                    d[i] += 2.0 * x[i] * (node.op == Op::Square ? g[i] : g[0]);
            }
            break;
        case Op::RbfPairwise: {
            // d/dx_k exp(-λ‖x_k − y_l‖²) = −2λ (x_k − y_l) κ_kl
            Matrix* da = wants(0) ? &slot(0) : nullptr;
            Matrix* db = wants(1) ? &slot(1) : nullptr;
            rbf_backward(in_value(0), in_value(1), node.value, g, node.scalar, da, db);
            break;
        }
        case Op::Covariance: {
            if (!wants(0)) break;
            const Matrix& x = in_value(0);
            const std::size_t n = x.rows(), dim = x.cols();
            if (n < 2) break;
            // dX = Xc (G + Gᵀ) / (n − 1); the centering term drops out because
            // the columns of Xc sum to zero.
            Matrix sym(dim, dim);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j) sym(i, j) = g(i, j) + g(j, i);
            Matrix centered = x;
            for (std::size_t j = 0; j < dim; ++j) {
                double m = 0.0;
                for (std::size_t r = 0; r < n; ++r) m += x(r, j);
                m /= static_cast<double>(n);
                for (std::size_t r = 0; r < n; ++r) centered(r, j) -= m;
            }
            add_into(slot(0), duration::matmul(centered, sym), 1.0 / static_cast<double>(n - 1));
            break;
        }
        case Op::Pad:
            if (wants(0)) {
                Matrix& d = slot(0);
                for (std::size_t r = 0; r < d.rows(); ++r)
                    for (std::size_t j = 0; j < d.cols(); ++j) d(r, j) += g(r, j);
            }
            break;
        case Op::BceWithLogits:
            if (wants(0)) {
                const Matrix &z = in_value(0), &y = in_value(1);
                Matrix& d = slot(0);
                const double w = g[0] / static_cast<double>(z.rows());
                for (std::size_t i = 0; i < z.rows(); ++i) d[i] += w * (logistic(z[i]) - y[i]);
            }
            break;
    }
}

const Matrix& Graph::adjoint(NodeId n) const {
    require(differentiated_, ErrorKind::State, "adjoint() requested before backward()");
    return at(n).adjoint;
}

// ---------------------------------------------------------------------------
// finite differences

GradientCheckReport check_gradients(const std::function<double()>& loss_at, ParameterSet& params,
                                    const Gradients& analytic, const GradientCheckOptions& options) {
    require(options.step > 0.0, ErrorKind::InvalidArgument, "finite-difference step must be positive");
    require(analytic.size() == params.size(), ErrorKind::InvalidArgument,
            "analytic gradient count does not match parameters");
    GradientCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& value = params[p];
        require(analytic[p].same_shape(value), ErrorKind::InvalidArgument,
                "analytic gradient shape mismatch for '" + params.name(p) + "'");
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + options.step;
            const double up = loss_at();
            value[i] = saved - options.step;
            const double down = loss_at();
            value[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double exact = analytic[p][i];
            const double scale = std::max(std::abs(exact), std::abs(numeric));
            if (scale <= options.min_magnitude) {
                ++report.skipped;
                continue;
            }
            ++report.checked;
            const double rel = std::abs(exact - numeric) / scale;
            report.max_relative_error = std::max(report.max_relative_error, rel);
            if (rel > options.tolerance) {
                report.failures.push_back(GradientMismatch{params.name(p), i / value.cols(),
                                                           i % value.cols(), exact, numeric, rel});
            }
        }
    }
    return report;
}

GradientCheckReport finite_diff_check(Graph& graph, NodeId loss, ParameterSet& params,
                                      const Bindings& bindings, const GradientCheckOptions& options) {
    graph.forward(bindings);
    Gradients analytic = graph.backward(loss);
    auto loss_at = [&]() {
        graph.forward(bindings);
        return graph.value(loss).item();
    };
    auto report = check_gradients(loss_at, params, analytic, options);
    graph.forward(bindings);
    return report;
}

}  // namespace duration
