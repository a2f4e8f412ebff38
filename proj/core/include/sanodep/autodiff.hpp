#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sanodep/errors.hpp"

// Reverse-mode automatic differentiation over dense matrices. Every node holds
// a matrix; batches live in the columns. Tapes are single-threaded.
namespace sanodep::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Identity, SiLU, Tanh, Softplus };

class Tape;

class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const;

private:
    friend class Tape;
    Var(Tape* tape, int id, std::uint64_t generation) : tape_(tape), id_(id), generation_(generation) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
    std::uint64_t generation_ = 0;
};

class Tape {
public:
    // Receives the node's adjoint and its own forward value.
    using Backprop = std::function<void(Tape&, const Matrix& adjoint, const Matrix& value)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);
    Var scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

    // Records an operation. `backprop` is dropped when no parent needs a gradient.
    Var push(Matrix value, std::initializer_list<Var> parents, Backprop backprop);
    Var push(Matrix value, const std::vector<Var>& parents, Backprop backprop);

    const Matrix& value(const Var& v) const;
    bool needs_grad(const Var& v) const;

    // Adds g into the adjoint of v. No-op if v does not need a gradient.
    template <class Derived>
    void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
        Node& n = node(v);
        if (!n.needs_grad) return;
        if (n.adjoint.size() == 0) {
            n.adjoint = g;
        } else {
            n.adjoint += g;
        }
    }
    // Adds g into a block of the adjoint of v (allocating zeros first).
    template <class Derived>
    void accumulate_block(const Var& v, Eigen::Index r0, Eigen::Index c0, const Eigen::MatrixBase<Derived>& g) {
        Node& n = node(v);
        if (!n.needs_grad) return;
        if (n.adjoint.size() == 0) n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
        n.adjoint.block(r0, c0, g.rows(), g.cols()) += g;
    }

    void backward(const Var& output, const Matrix& seed);
    void backward(const Var& scalar_output);

    // Gradient of the last backward pass with respect to v (zeros if unreached).
    Matrix grad(const Var& v) const;

    void reset_adjoints();
    void clear();
    std::size_t size() const { return nodes_.size(); }
    std::uint64_t generation() const { return generation_; }

private:
    friend class Var;
    struct Node {
        Matrix value;
        Matrix adjoint;
        Backprop backprop;
        bool needs_grad = false;
    };

    Node& node(const Var& v);
    const Node& node(const Var& v) const;
    void check(const Var& v) const;

    std::vector<Node> nodes_;
    std::uint64_t generation_ = 1;
    bool backward_done_ = false;
};

// Elementwise and structural operations.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var scale_by(const Var& a, const Var& s);   // a * s with s 1x1
Var add_bcast(const Var& x, const Var& v);  // x (n x B) + v (n x 1)
Var mul_bcast(const Var& x, const Var& v);  // x (n x B) .* v (n x 1)
Var bcast_cols(const Var& v, Eigen::Index cols);

Var matmul(const Var& a, const Var& b);
// w.middleCols(col0, x.rows()) * x
Var matmul_cols(const Var& w, Eigen::Index col0, const Var& x);

Var activate(const Var& x, Activation act);
Var exp(const Var& x);
Var log(const Var& x);
Var square(const Var& x);
Var sigmoid(const Var& x);
Var pow_neg1(const Var& x);  // elementwise 1/x

Var vcat(const std::vector<Var>& parts);
Var hcat(const std::vector<Var>& parts);
Var rows(const Var& x, Eigen::Index begin, Eigen::Index count);
Var cols(const Var& x, Eigen::Index begin, Eigen::Index count);

Var sum(const Var& x);       // 1 x 1
Var col_sums(const Var& x);  // 1 x B
Var mean(const Var& x);      // 1 x 1
Var dot(const Var& a, const Matrix& weights);  // sum(a .* weights), 1 x 1

// Column-group means: output column g is the mean of x's columns listed in groups[g].
Var pool_mean(const Var& x, const std::vector<std::vector<int>>& groups);

// Elementwise clip to [lo, hi] (lo, hi broadcast per row); gradient passes
// where the input lies inside the bounds and is zero outside.
Var clip_rows(const Var& x, const Vector& lo, const Vector& hi);

// Dense layer with fused activation.
struct DenseLayer {
    Matrix weights;  // out x in
    Matrix bias;     // out x 1
    Activation activation = Activation::Identity;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

struct BoundDense {
    Var weights;
    Var bias;
    Activation activation = Activation::Identity;
};

Matrix apply_activation(const Matrix& x, Activation act);
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);
Var dense(const BoundDense& layer, const Var& x);

// act(W[:, col0:col0+x.rows()] x + pre + W[:, t_col] * t) where pre is n x B
// (or n x 1, broadcast) and t is 1 x 1. Used for inputs of the form [x, u, t]
// where the u contribution is precomputed once.
Var dense_split(const BoundDense& layer, Eigen::Index col0, const Var& x, const Var& pre,
                Eigen::Index t_col, const Var& t);

// Diagonal Gaussians. Each column is an independent distribution.
struct DiagonalGaussian {
    Matrix mean;
    Matrix std;
};

struct GaussianVar {
    Var mean;
    Var std;
};

double kl_diag_gaussians(const DiagonalGaussian& q, const DiagonalGaussian& p);
Var kl_diag_gaussians(const GaussianVar& q, const GaussianVar& p);  // 1 x B
Var kl_to_standard_normal(const GaussianVar& q);                    // 1 x B
Matrix sample_gaussian_reparam(const DiagonalGaussian& dist, const Matrix& noise);
Var sample_gaussian_reparam(const GaussianVar& dist, const Matrix& noise);
// Per-column sum of log N(x | mean, std^2); 1 x B.
Var gaussian_log_likelihood(const Var& mean, const Var& std, const Matrix& x);

struct GradReport {
    double max_rel_error = 0.0;
    std::map<std::string, double> per_parameter_errors;
    std::size_t entries_checked = 0;
};

using ScalarProgram = std::function<Var(Tape&, const std::vector<Var>& inputs)>;
using NamedInput = std::pair<std::string, Matrix>;

// Compares reverse-mode gradients against central differences of step `step`.
// Relative error per entry is |a - b| / max(|a|, |b|, floor).
GradReport grad_check(const ScalarProgram& program, const std::vector<NamedInput>& inputs,
                      double step = 1e-5, double floor = 1e-6);

}  // namespace sanodep::ad
