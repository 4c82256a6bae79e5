// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace duration {

/// Ordered, named collection of trainable tensors.
class ParameterSet {
public:
    std::size_t add(std::string name, Matrix value);

    std::size_t size() const noexcept { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Matrix& operator[](std::size_t i) { return values_[i]; }
    const Matrix& operator[](std::size_t i) const { return values_[i]; }
    std::optional<std::size_t> index_of(const std::string& name) const;
    std::size_t scalar_count() const noexcept;

    bool operator==(const ParameterSet& other) const = default;

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
};

/// One gradient tensor per parameter, same order and shapes.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParameterSet& params);
void accumulate(Gradients& into, const Gradients& from, double weight = 1.0);

using Bindings = std::map<std::string, Matrix>;

struct NodeId {
    std::uint32_t index = 0;
};

enum class Op : std::uint8_t {
    Input,
    Constant,
    Parameter,
    MatMul,
    SparseMatMul,
    AddBias,
    Add,
    Subtract,
    Scale,
    Relu,
    Sigmoid,
    ConcatCols,
    ConcatRows,
    RowwiseDot,
    Mean,
    Sum,
    Square,
    FrobeniusSq,
    RbfPairwise,
    Covariance,
    Pad,
    BceWithLogits,
};

const char* op_name(Op op) noexcept;

/// Reverse-mode computation graph.
///
/// Nodes are appended in construction order, which is a topological order, so
/// `forward` evaluates front to back and `backward` walks back to front.
/// Shapes are fixed and checked when a node is created; inputs are bound by
/// name at `forward` time. Parameter values are read from the ParameterSet
/// given at construction on every `forward`, so callers may mutate parameters
/// between evaluations (the finite-difference checker relies on this).
class Graph {
public:
    explicit Graph(const ParameterSet& params) : params_(&params) {}

    NodeId input(std::string name, std::size_t rows, std::size_t cols);
    NodeId constant(Matrix value);
    NodeId parameter(std::size_t index);

    NodeId matmul(NodeId a, NodeId b);
    /// rows × width sparse constant times a width × k dense node.
    NodeId sparse_matmul(std::shared_ptr<const SparseRows> lhs, NodeId rhs);
    /// x (n × k) plus a 1 × k bias broadcast over rows.
    NodeId add_bias(NodeId x, NodeId bias);
    NodeId affine(NodeId x, NodeId weight, NodeId bias) { return add_bias(matmul(x, weight), bias); }
    NodeId add(NodeId a, NodeId b);
    NodeId subtract(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId concat_rows(const std::vector<NodeId>& parts);
    NodeId rowwise_dot(NodeId a, NodeId b);
    NodeId mean(NodeId a);
    NodeId sum(NodeId a);
    NodeId square(NodeId a);
    NodeId frobenius_sq(NodeId a);
    /// K(k, l) = exp(-bandwidth * ||a_k - b_l||^2).
    NodeId rbf_pairwise(NodeId a, NodeId b, double bandwidth);
    /// Sample covariance of the rows of `a` (zero matrix for a single row).
    NodeId covariance(NodeId a);
    /// Zero-pads `a` at the bottom/right up to rows × cols.
    NodeId pad(NodeId a, std::size_t rows, std::size_t cols);
    /// Mean binary cross-entropy of logits against constant labels, in the
    /// overflow-free form max(z,0) - z*y + log(1 + exp(-|z|)).
    NodeId bce_with_logits(NodeId logits, NodeId labels);

    std::size_t rows(NodeId n) const { return nodes_.at(n.index).rows; }
    std::size_t cols(NodeId n) const { return nodes_.at(n.index).cols; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

    void forward(const Bindings& bindings = {});
    const Matrix& value(NodeId n) const;

    /// Gradient of the scalar `loss` with respect to every parameter.
    Gradients backward(NodeId loss);
    const Matrix& adjoint(NodeId n) const;

private:
    struct Node {
        Op op;
        std::vector<std::uint32_t> inputs;
        std::size_t rows = 0;
        std::size_t cols = 0;
        double scalar = 0.0;
        std::size_t param_index = 0;
        bool needs_grad = false;
        std::string name;
        std::shared_ptr<const SparseRows> sparse;
        Matrix value;
        Matrix adjoint;
    };

    NodeId push(Node node);
    const Node& at(NodeId n) const;
    void compute(Node& node);
    void propagate(const Node& node);
    Matrix& adjoint_slot(std::uint32_t index);
    const Matrix& value_of(std::uint32_t index) const;

    const ParameterSet* params_;
    std::vector<Node> nodes_;
    std::map<std::size_t, std::uint32_t> parameter_nodes_;
    bool evaluated_ = false;
    bool differentiated_ = false;
};

struct GradientCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    double min_magnitude = 1e-6;  // coordinates below this on both sides are skipped
};

struct GradientMismatch {
    std::string parameter;
    std::size_t row = 0;
    std::size_t col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradientCheckReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double max_relative_error = 0.0;
    std::vector<GradientMismatch> failures;

    bool passed() const noexcept { return failures.empty(); }
};

/// Central differences of `loss_at` over every parameter coordinate, compared
/// against `analytic`. `loss_at` must read the current values of `params`.
GradientCheckReport check_gradients(const std::function<double()>& loss_at, ParameterSet& params,
                                    const Gradients& analytic,
                                    const GradientCheckOptions& options = {});

/// Convenience wrapper: backward on `graph` for the analytic side, re-running
/// forward with perturbed parameters for the numeric side.
GradientCheckReport finite_diff_check(Graph& graph, NodeId loss, ParameterSet& params,
                                      const Bindings& bindings = {},
                                      const GradientCheckOptions& options = {});

}  // namespace duration
