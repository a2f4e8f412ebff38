#include "sanodep/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sanodep::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
}

Tape& tape_of(const Var& a) {
    if (!a.valid()) throw StateError("operation on an invalid Var");
    return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
    Tape& t = tape_of(a);
    if (b.tape() != &t) throw StateError("operands recorded on different tapes");
    return t;
}

inline double sigmoid_scalar(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// d act / d pre, given pre-activation and output.
Matrix activation_derivative(const Matrix& pre, const Matrix& out, Activation act) {
    switch (act) {
        case Activation::Identity:
            return Matrix::Ones(pre.rows(), pre.cols());
        case Activation::Tanh:
            return (1.0 - out.array().square()).matrix();
        case Activation::Softplus:
            return pre.unaryExpr([](double x) { return sigmoid_scalar(x); });
        case Activation::SiLU:
            return pre.unaryExpr([](double x) {
                const double s = sigmoid_scalar(x);
                return s * (1.0 + x * (1.0 - s));
            });
    }
    return {};
}

}  // namespace

// ---------------------------------------------------------------- Var / Tape

bool Var::valid() const { return tape_ != nullptr && id_ >= 0 && tape_->generation() == generation_; }

const Matrix& Var::value() const {
    if (!valid()) throw StateError("Var is not attached to a live tape");
    return tape_->value(*this);
}

double Var::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) throw DimensionError("scalar(): Var is not 1x1");
    return v(0, 0);
}

void Tape::check(const Var& v) const {
    if (v.tape_ != this || v.generation_ != generation_ || v.id_ < 0 ||
        static_cast<std::size_t>(v.id_) >= nodes_.size())
        throw StateError("Var does not belong to this tape (cleared or foreign)");
}

Tape::Node& Tape::node(const Var& v) {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id_)];
}

const Tape::Node& Tape::node(const Var& v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id_)];
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
    return Var(this, static_cast<int>(nodes_.size() - 1), generation_);
}

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), Matrix(), nullptr, true});
    return Var(this, static_cast<int>(nodes_.size() - 1), generation_);
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
    bool needs = false;
    for (const Var& p : parents) needs = needs || node(p).needs_grad;
    nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backprop) : nullptr, needs});
    return Var(this, static_cast<int>(nodes_.size() - 1), generation_);
}

Var Tape::push(Matrix value, const std::vector<Var>& parents, Backprop backprop) {
    bool needs = false;
    for (const Var& p : parents) needs = needs || node(p).needs_grad;
    nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backprop) : nullptr, needs});
    return Var(this, static_cast<int>(nodes_.size() - 1), generation_);
}

const Matrix& Tape::value(const Var& v) const { return node(v).value; }

bool Tape::needs_grad(const Var& v) const { return node(v).needs_grad; }

void Tape::backward(const Var& output, const Matrix& seed) {
    if (nodes_.empty()) throw StateError("backward called on an empty tape");
    Node& out = node(output);
    require_same_shape(out.value, seed, "backward seed");
    reset_adjoints();
    if (!out.needs_grad) {
        backward_done_ = true;
        return;
    }
    out.adjoint = seed;
    for (int i = output.id_; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.backprop || n.adjoint.size() == 0) continue;
        // Closures only write adjoints of lower-id nodes and never push, so
        // references into nodes_ stay valid.
        n.backprop(*this, n.adjoint, n.value);
    }
    backward_done_ = true;
}

void Tape::backward(const Var& scalar_output) {
    const Matrix& v = value(scalar_output);
    if (v.size() != 1) throw DimensionError("backward(): output is not scalar; pass a seed");
    backward(scalar_output, Matrix::Ones(1, 1));
}

Matrix Tape::grad(const Var& v) const {
    const Node& n = node(v);
    if (!backward_done_) throw StateError("grad requested before backward");
    if (n.adjoint.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.adjoint;
}

void Tape::reset_adjoints() {
    for (Node& n : nodes_) n.adjoint.resize(0, 0);
    backward_done_ = false;
}

void Tape::clear() {
    nodes_.clear();
    ++generation_;
    backward_done_ = false;
}

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    return t.push(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    return t.push(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(a, g);
        tp.accumulate(b, -g);
    });
}

Var mul(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "mul");
    return t.push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
    });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double s) {
    Tape& t = tape_of(a);
    return t.push(a.value() * s, {a}, [a, s](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, g * s); });
}

Var add_scalar(const Var& a, double s) {
    Tape& t = tape_of(a);
    return t.push((a.value().array() + s).matrix(), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, g); });
}

Var scale_by(const Var& a, const Var& s) {
    Tape& t = tape_of(a, s);
    if (s.value().size() != 1) throw DimensionError("scale_by: scale must be 1x1");
    const double sv = s.value()(0, 0);
    return t.push(a.value() * sv, {a, s}, [a, s](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(s)(0, 0));
        if (tp.needs_grad(s)) tp.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(tp.value(a)).sum()));
    });
}

Var add_bcast(const Var& x, const Var& v) {
    Tape& t = tape_of(x, v);
    if (v.cols() != 1 || v.rows() != x.rows()) throw DimensionError("add_bcast: expected n x 1 vector");
    Matrix out = x.value().colwise() + v.value().col(0);
    return t.push(std::move(out), {x, v}, [x, v](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(x, g);
        if (tp.needs_grad(v)) tp.accumulate(v, g.rowwise().sum());
    });
}

Var mul_bcast(const Var& x, const Var& v) {
    Tape& t = tape_of(x, v);
    if (v.cols() != 1 || v.rows() != x.rows()) throw DimensionError("mul_bcast: expected n x 1 vector");
    Matrix out = x.value().array().colwise() * v.value().col(0).array();
    return t.push(std::move(out), {x, v}, [x, v](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(x)) tp.accumulate(x, (g.array().colwise() * tp.value(v).col(0).array()).matrix());
        if (tp.needs_grad(v)) tp.accumulate(v, g.cwiseProduct(tp.value(x)).rowwise().sum());
    });
}

Var bcast_cols(const Var& v, Eigen::Index cols) {
    Tape& t = tape_of(v);
    if (v.cols() != 1) throw DimensionError("bcast_cols: expected a column vector");
    Matrix out = v.value().replicate(1, cols);
    return t.push(std::move(out), {v}, [v](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(v, g.rowwise().sum()); });
}

Var matmul(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    return t.push(a.value() * b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.needs_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var matmul_cols(const Var& w, Eigen::Index col0, const Var& x) {
    Tape& t = tape_of(w, x);
    if (col0 < 0 || col0 + x.rows() > w.cols()) throw DimensionError("matmul_cols: column slice out of range");
    const Eigen::Index k = x.rows();
    return t.push(w.value().middleCols(col0, k) * x.value(), {w, x}, [w, x, col0, k](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(w)) tp.accumulate_block(w, 0, col0, g * tp.value(x).transpose());
        if (tp.needs_grad(x)) tp.accumulate(x, tp.value(w).middleCols(col0, k).transpose() * g);
    });
}

Matrix apply_activation(const Matrix& x, Activation act) {
    switch (act) {
        case Activation::Identity:
            return x;
        case Activation::Tanh:
            return x.array().tanh().matrix();
        case Activation::Softplus:
            return x.unaryExpr([](double v) { return softplus_scalar(v); });
        case Activation::SiLU:
            return x.unaryExpr([](double v) { return v * sigmoid_scalar(v); });
    }
    return x;
}

Var activate(const Var& x, Activation act) {
    Tape& t = tape_of(x);
    if (act == Activation::Identity) return x;
    return t.push(apply_activation(x.value(), act), {x}, [x, act](Tape& tp, const Matrix& g, const Matrix& out) {
        tp.accumulate(x, g.cwiseProduct(activation_derivative(tp.value(x), out, act)));
    });
}

Var exp(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(x.value().array().exp().matrix(), {x}, [x](Tape& tp, const Matrix& g, const Matrix& out) {
        tp.accumulate(x, g.cwiseProduct(out));
    });
}

Var log(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(x.value().array().log().matrix(), {x}, [x](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(x, g.cwiseQuotient(tp.value(x)));
    });
}

Var square(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(x.value().array().square().matrix(), {x}, [x](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(x, 2.0 * g.cwiseProduct(tp.value(x)));
    });
}

Var sigmoid(const Var& x) {
    Tape& t = tape_of(x);
    Matrix out = x.value().unaryExpr([](double v) { return sigmoid_scalar(v); });
    return t.push(std::move(out), {x}, [x](Tape& tp, const Matrix& g, const Matrix& s) {
        tp.accumulate(x, g.cwiseProduct((s.array() * (1.0 - s.array())).matrix()));
    });
}

// ---------------------------------------------------------------- structural

Var vcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw PreconditionError("vcat: no parts");
    Tape& t = tape_of(parts.front());
    const Eigen::Index c = parts.front().cols();
    Eigen::Index r = 0;
    for (const Var& p : parts) {
        if (p.tape() != &t) throw StateError("vcat: parts on different tapes");
        if (p.cols() != c) throw DimensionError("vcat: column counts differ");
        r += p.rows();
    }
    Matrix out(r, c);
    Eigen::Index off = 0;
    for (const Var& p : parts) {
        out.middleRows(off, p.rows()) = p.value();
        off += p.rows();
    }
    return t.push(std::move(out), parts, [parts](Tape& tp, const Matrix& g, const Matrix&) {
        Eigen::Index o = 0;
        for (const Var& p : parts) {
            const Eigen::Index n = tp.value(p).rows();
            if (tp.needs_grad(p)) tp.accumulate(p, g.middleRows(o, n));
            o += n;
        }
    });
}

Var hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw PreconditionError("hcat: no parts");
    Tape& t = tape_of(parts.front());
    const Eigen::Index r = parts.front().rows();
    Eigen::Index c = 0;
    for (const Var& p : parts) {
        if (p.tape() != &t) throw StateError("hcat: parts on different tapes");
        if (p.rows() != r) throw DimensionError("hcat: row counts differ");
        c += p.cols();
    }
    Matrix out(r, c);
    Eigen::Index off = 0;
    for (const Var& p : parts) {
        out.middleCols(off, p.cols()) = p.value();
        off += p.cols();
    }
    return t.push(std::move(out), parts, [parts](Tape& tp, const Matrix& g, const Matrix&) {
        Eigen::Index o = 0;
        for (const Var& p : parts) {
            const Eigen::Index n = tp.value(p).cols();
            if (tp.needs_grad(p)) tp.accumulate(p, g.middleCols(o, n));
            o += n;
        }
    });
}

Var rows(const Var& x, Eigen::Index begin, Eigen::Index count) {
    Tape& t = tape_of(x);
    if (begin < 0 || count < 0 || begin + count > x.rows()) throw DimensionError("rows: range out of bounds");
    return t.push(x.value().middleRows(begin, count), {x}, [x, begin](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate_block(x, begin, 0, g);
    });
}

Var cols(const Var& x, Eigen::Index begin, Eigen::Index count) {
    Tape& t = tape_of(x);
    if (begin < 0 || count < 0 || begin + count > x.cols()) throw DimensionError("cols: range out of bounds");
    return t.push(x.value().middleCols(begin, count), {x}, [x, begin](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate_block(x, 0, begin, g);
    });
}

Var sum(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(Matrix::Constant(1, 1, x.value().sum()), {x}, [x](Tape& tp, const Matrix& g, const Matrix&) {
        const Matrix& v = tp.value(x);
        tp.accumulate(x, Matrix::Constant(v.rows(), v.cols(), g(0, 0)));
    });
}

Var col_sums(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(x.value().colwise().sum(), {x}, [x](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(x, g.replicate(tp.value(x).rows(), 1));
    });
}

Var mean(const Var& x) {
    const double n = static_cast<double>(x.value().size());
    if (n == 0) throw PreconditionError("mean of an empty matrix");
    return scale(sum(x), 1.0 / n);
}

Var dot(const Var& a, const Matrix& weights) {
    Tape& t = tape_of(a);
    require_same_shape(a.value(), weights, "dot");
    return t.push(Matrix::Constant(1, 1, a.value().cwiseProduct(weights).sum()), {a},
                  [a, weights](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, weights * g(0, 0)); });
}

Var pool_mean(const Var& x, const std::vector<std::vector<int>>& groups) {
    Tape& t = tape_of(x);
    const Matrix& xv = x.value();
    Matrix out(xv.rows(), static_cast<Eigen::Index>(groups.size()));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& grp = groups[gi];
        if (grp.empty()) throw PreconditionError("pool_mean: empty group");
        Vector acc = Vector::Zero(xv.rows());
        for (int c : grp) {
            if (c < 0 || c >= xv.cols()) throw DimensionError("pool_mean: column index out of range");
            acc += xv.col(c);
        }
        out.col(static_cast<Eigen::Index>(gi)) = acc / static_cast<double>(grp.size());
    }
    return t.push(std::move(out), {x}, [x, groups](Tape& tp, const Matrix& g, const Matrix&) {
        const Matrix& v = tp.value(x);
        Matrix dx = Matrix::Zero(v.rows(), v.cols());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const double w = 1.0 / static_cast<double>(groups[gi].size());
            for (int c : groups[gi]) dx.col(c) += w * g.col(static_cast<Eigen::Index>(gi));
        }
        tp.accumulate(x, dx);
    });
}

Var clip_rows(const Var& x, const Vector& lo, const Vector& hi) {
    Tape& t = tape_of(x);
    if (lo.size() != x.rows() || hi.size() != x.rows()) throw DimensionError("clip_rows: bound size mismatch");
    const Matrix& xv = x.value();
    Matrix out = xv;
    Matrix pass = Matrix::Ones(xv.rows(), xv.cols());
    for (Eigen::Index j = 0; j < xv.cols(); ++j) {
        for (Eigen::Index i = 0; i < xv.rows(); ++i) {
            if (xv(i, j) < lo(i)) {
                out(i, j) = lo(i);
                pass(i, j) = 0.0;
            } else if (xv(i, j) > hi(i)) {
                out(i, j) = hi(i);
                pass(i, j) = 0.0;
            }
        }
    }
    return t.push(std::move(out), {x}, [x, pass = std::move(pass)](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(x, g.cwiseProduct(pass));
    });
}

// ---------------------------------------------------------------- dense layers

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    if (x.rows() != layer.in_dim()) throw DimensionError("dense_forward: input dimension mismatch");
    Matrix pre = layer.weights * x;
    pre.colwise() += layer.bias.col(0);
    return apply_activation(pre, layer.activation);
}

namespace {

// d(pre) for a fused layer; SiLU and Softplus need the saved pre-activation,
// Tanh only the output.
Matrix pre_gradient(const Matrix& g, const Matrix& saved_pre, const Matrix& out, Activation act) {
    switch (act) {
        case Activation::Identity:
            return g;
        case Activation::Tanh:
            return g.cwiseProduct((1.0 - out.array().square()).matrix());
        default:
            return g.cwiseProduct(activation_derivative(saved_pre, out, act));
    }
}

Matrix saved_pre(Matrix& pre, Activation act) {
    return act == Activation::SiLU || act == Activation::Softplus ? std::move(pre) : Matrix();
}

}  // namespace

Var dense(const BoundDense& layer, const Var& x) {
    Tape& t = tape_of(x, layer.weights);
    const Matrix& W = layer.weights.value();
    if (x.rows() != W.cols()) throw DimensionError("dense: input dimension mismatch");
    Matrix pre = W * x.value();
    pre.colwise() += layer.bias.value().col(0);
    const Activation act = layer.activation;
    Matrix post = apply_activation(pre, act);
    const BoundDense L = layer;
    return t.push(std::move(post), {x, layer.weights, layer.bias},
                  [L, x, act, pre = saved_pre(pre, act)](Tape& tp, const Matrix& g, const Matrix& out) {
                      const Matrix dpre = pre_gradient(g, pre, out, act);
                      if (tp.needs_grad(L.weights)) tp.accumulate(L.weights, dpre * tp.value(x).transpose());
                      if (tp.needs_grad(L.bias)) tp.accumulate(L.bias, dpre.rowwise().sum());
                      if (tp.needs_grad(x)) tp.accumulate(x, tp.value(L.weights).transpose() * dpre);
                  });
}

Var dense_split(const BoundDense& layer, Eigen::Index col0, const Var& x, const Var& pre_in, Eigen::Index t_col,
                const Var& tv) {
    Tape& t = tape_of(x, layer.weights);
    const Matrix& W = layer.weights.value();
    const Eigen::Index k = x.rows();
    if (col0 < 0 || col0 + k > W.cols() || t_col < 0 || t_col >= W.cols())
        throw DimensionError("dense_split: column slice out of range");
    if (pre_in.rows() != W.rows() || (pre_in.cols() != 1 && pre_in.cols() != x.cols()))
        throw DimensionError("dense_split: precomputed term has wrong shape");
    if (tv.value().size() != 1) throw DimensionError("dense_split: time must be 1x1");
    Matrix pre = W.middleCols(col0, k) * x.value();
    if (pre_in.cols() == 1) {
        pre.colwise() += pre_in.value().col(0) + W.col(t_col) * tv.value()(0, 0);
    } else {
        pre += pre_in.value();
        pre.colwise() += W.col(t_col) * tv.value()(0, 0);
    }
    const Activation act = layer.activation;
    Matrix post = apply_activation(pre, act);
    const Var w = layer.weights;
    return t.push(std::move(post), {x, w, pre_in, tv},
                  [w, x, pre_in, tv, col0, k, t_col, act, pre = saved_pre(pre, act)](Tape& tp, const Matrix& g,
                                                                                        const Matrix& out) {
                      const Matrix dpre = pre_gradient(g, pre, out, act);
                      const Vector row_sum = dpre.rowwise().sum();
                      if (tp.needs_grad(w)) {
                          tp.accumulate_block(w, 0, col0, dpre * tp.value(x).transpose());
                          tp.accumulate_block(w, 0, t_col, row_sum * tp.value(tv)(0, 0));
                      }
                      if (tp.needs_grad(x)) tp.accumulate(x, tp.value(w).middleCols(col0, k).transpose() * dpre);
                      if (tp.needs_grad(pre_in)) {
                          if (tp.value(pre_in).cols() == 1) {
                              tp.accumulate(pre_in, row_sum);
                          } else {
                              tp.accumulate(pre_in, dpre);
                          }
                      }
                      if (tp.needs_grad(tv))
                          tp.accumulate(tv, Matrix::Constant(1, 1, tp.value(w).col(t_col).dot(row_sum)));
                  });
}

// ---------------------------------------------------------------- Gaussians

double kl_diag_gaussians(const DiagonalGaussian& q, const DiagonalGaussian& p) {
    require_same_shape(q.mean, p.mean, "kl_diag_gaussians");
    require_same_shape(q.std, p.std, "kl_diag_gaussians");
    require_same_shape(q.mean, q.std, "kl_diag_gaussians");
    if ((q.std.array() <= 0).any() || (p.std.array() <= 0).any())
        throw PreconditionError("kl_diag_gaussians: non-positive standard deviation");
    const auto r = (q.std.array() / p.std.array());
    const auto d = (q.mean.array() - p.mean.array()) / p.std.array();
    return (0.5 * (r.square() + d.square() - 1.0) - r.log()).sum();
}

Var kl_diag_gaussians(const GaussianVar& q, const GaussianVar& p) {
    // 0.5 * (sq^2/sp^2 + (mq-mp)^2/sp^2 - 1) - log(sq/sp), summed per column.
    Var ratio_sq = square(mul(q.std, pow_neg1(p.std)));
    Var diff = sub(q.mean, p.mean);
    Var d2 = square(mul(diff, pow_neg1(p.std)));
    Var logr = sub(log(q.std), log(p.std));
    Var per = sub(scale(add_scalar(add(ratio_sq, d2), -1.0), 0.5), logr);
    return col_sums(per);
}

Var kl_to_standard_normal(const GaussianVar& q) {
    // 0.5 * (s^2 + m^2 - 1) - log s
    Var per = sub(scale(add_scalar(add(square(q.std), square(q.mean)), -1.0), 0.5), log(q.std));
    return col_sums(per);
}

Matrix sample_gaussian_reparam(const DiagonalGaussian& dist, const Matrix& noise) {
    require_same_shape(dist.mean, dist.std, "sample_gaussian_reparam");
    if ((dist.std.array() <= 0).any()) throw PreconditionError("sample_gaussian_reparam: non-positive std");
    if (dist.mean.cols() == noise.cols()) {
        require_same_shape(dist.mean, noise, "sample_gaussian_reparam");
        return dist.mean + dist.std.cwiseProduct(noise);
    }
    if (dist.mean.cols() != 1 || noise.rows() != dist.mean.rows())
        throw DimensionError("sample_gaussian_reparam: noise shape incompatible");
    Matrix out = noise.array().colwise() * dist.std.col(0).array();
    out.colwise() += dist.mean.col(0);
    return out;
}

Var sample_gaussian_reparam(const GaussianVar& dist, const Matrix& noise) {
    Tape& t = tape_of(dist.mean, dist.std);
    Var eps = t.constant(noise);
    if (dist.mean.cols() == noise.cols()) return add(dist.mean, mul(dist.std, eps));
    if (dist.mean.cols() != 1) throw DimensionError("sample_gaussian_reparam: noise shape incompatible");
    return add_bcast(mul_bcast(eps, dist.std), dist.mean);
}

Var gaussian_log_likelihood(const Var& mean, const Var& std, const Matrix& x) {
    Tape& t = tape_of(mean, std);
    require_same_shape(mean.value(), x, "gaussian_log_likelihood");
    require_same_shape(std.value(), x, "gaussian_log_likelihood");
    const Matrix& m = mean.value();
    const Matrix& s = std.value();
    const Matrix z = (x - m).cwiseQuotient(s);
    constexpr double half_log_2pi = 0.91893853320467274178;
    Matrix out = (-0.5 * z.array().square() - s.array().log() - half_log_2pi).matrix().colwise().sum();
    return t.push(std::move(out), {mean, std}, [mean, std, z](Tape& tp, const Matrix& g, const Matrix&) {
        const Matrix& sv = tp.value(std);
        // d/dm = z/s, d/ds = (z^2 - 1)/s
        if (tp.needs_grad(mean)) {
            Matrix dm = z.cwiseQuotient(sv);
            dm.array().rowwise() *= g.row(0).array();
            tp.accumulate(mean, dm);
        }
        if (tp.needs_grad(std)) {
            Matrix ds = ((z.array().square() - 1.0) / sv.array()).matrix();
            ds.array().rowwise() *= g.row(0).array();
            tp.accumulate(std, ds);
        }
    });
}

Var pow_neg1(const Var& x) {
    Tape& t = tape_of(x);
    return t.push(x.value().cwiseInverse(), {x}, [x](Tape& tp, const Matrix& g, const Matrix& out) {
        tp.accumulate(x, -g.cwiseProduct(out.cwiseProduct(out)));
    });
}

// ---------------------------------------------------------------- grad check

GradReport grad_check(const ScalarProgram& program, const std::vector<NamedInput>& inputs, double step,
                      double floor) {
    if (step <= 0) throw PreconditionError("grad_check: step must be positive");
    GradReport report;
    std::vector<Matrix> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& in : inputs) vars.push_back(tape.variable(in.second));
        Var out = program(tape, vars);
        if (out.value().size() != 1) throw DimensionError("grad_check: program must return a scalar");
        if (!std::isfinite(out.scalar())) throw EvaluationError("grad_check: non-finite program value");
        tape.backward(out);
        for (const Var& v : vars) analytic.push_back(tape.grad(v));
    }
    auto evaluate = [&](const std::vector<Matrix>& point) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& m : point) vars.push_back(tape.constant(m));
        return program(tape, vars).scalar();
    };
    std::vector<Matrix> point;
    for (const auto& in : inputs) point.push_back(in.second);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < point[k].size(); ++i) {
            const double orig = point[k].data()[i];
            point[k].data()[i] = orig + step;
            const double fp = evaluate(point);
            point[k].data()[i] = orig - step;
            const double fm = evaluate(point);
            point[k].data()[i] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double a = analytic[k].data()[i];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
            worst = std::max(worst, rel);
            ++report.entries_checked;
        }
        report.per_parameter_errors[inputs[k].first] = worst;
        report.max_rel_error = std::max(report.max_rel_error, worst);
    }
    return report;
}

}  // namespace sanodep::ad
