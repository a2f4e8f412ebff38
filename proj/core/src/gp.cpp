#include "sanodep/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sanodep/errors.hpp"

namespace sanodep::gp {

double rbf(const VectorXd& a, const VectorXd& b, const Hyperparams& h) {
    const double r2 = ((a - b).array() / h.lengthscales.array()).square().sum();
    return h.signal_variance * std::exp(-0.5 * r2);
}

MatrixXd kernel_matrix(const MatrixXd& X1, const MatrixXd& X2, const Hyperparams& h) {
    if (X1.cols() != h.lengthscales.size() || X2.cols() != h.lengthscales.size())
        throw DimensionError("kernel_matrix: input width does not match lengthscales");
    MatrixXd K(X1.rows(), X2.rows());
    for (Eigen::Index i = 0; i < X1.rows(); ++i)
        for (Eigen::Index j = 0; j < X2.rows(); ++j) K(i, j) = rbf(X1.row(i).transpose(), X2.row(j).transpose(), h);
    return K;
}

namespace {

void check_hyper(const Hyperparams& h) {
    if ((h.lengthscales.array() <= 0).any() || h.signal_variance <= 0 || h.noise_variance <= 0)
        throw PreconditionError("GP hyperparameters must be positive");
}

// Cholesky of K + noise I, doubling jitter until it succeeds.
double factorize(const MatrixXd& K, double noise, const FitOptions& opt, Eigen::LLT<MatrixXd>& llt) {
    const auto n = K.rows();
    MatrixXd A = K;
    A.diagonal().array() += noise;
    llt.compute(A);
    if (llt.info() == Eigen::Success) return 0.0;
    double jitter = opt.jitter_start;
    for (int i = 0; i < opt.max_jitter_doublings; ++i, jitter *= 2.0) {
        MatrixXd B = A;
        B.diagonal().array() += jitter;
        llt.compute(B);
        if (llt.info() == Eigen::Success) return jitter;
    }
    throw EvaluationError("GP kernel matrix not positive definite after maximum jitter (n=" + std::to_string(n) + ")");
}

}  // namespace

GPModel::GPModel(MatrixXd X, VectorXd y, Hyperparams h, const FitOptions& options)
    : X_(std::move(X)), y_(std::move(y)), h_(std::move(h)) {
    if (X_.rows() < 1) throw PreconditionError("GP needs at least one training point");
    if (X_.rows() != y_.size()) throw DimensionError("GP: X and y row counts differ");
    check_hyper(h_);
    jitter_ = factorize(kernel_matrix(X_, X_, h_), h_.noise_variance, options, llt_);
    alpha_ = llt_.solve(y_);
    const MatrixXd& L = llt_.matrixLLT();
    lml_ = -0.5 * y_.dot(alpha_) - L.diagonal().array().log().sum() -
           0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
}

GPModel::Posterior GPModel::posterior(const MatrixXd& Xq) const {
    const MatrixXd Ks = kernel_matrix(Xq, X_, h_);
    Posterior p;
    p.mean = Ks * alpha_;
    const MatrixXd V = llt_.matrixL().solve(Ks.transpose());
    p.variance = (h_.signal_variance - V.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
    return p;
}

double log_marginal_likelihood(const MatrixXd& X, const VectorXd& y, const Hyperparams& h, VectorXd* grad) {
    check_hyper(h);
    const auto n = X.rows();
    const auto D = X.cols();
    const MatrixXd K = kernel_matrix(X, X, h);
    MatrixXd A = K;
    A.diagonal().array() += h.noise_variance;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw EvaluationError("log_marginal_likelihood: Cholesky failed");
    const VectorXd alpha = llt.solve(y);
    const MatrixXd& L = llt.matrixLLT();
    const double lml = -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
        // d lml / d theta = 0.5 tr(W dK/dtheta), W = alpha alpha^T - A^-1.
        const MatrixXd W = alpha * alpha.transpose() - llt.solve(MatrixXd::Identity(n, n));
        grad->resize(D + 2);
        for (Eigen::Index d = 0; d < D; ++d) {
            double g = 0.0;
            const double l2 = h.lengthscales(d) * h.lengthscales(d);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double diff = X(i, d) - X(j, d);
                    g += W(i, j) * K(i, j) * diff * diff / l2;
                }
            (*grad)(d) = 0.5 * g;
        }
        (*grad)(D) = 0.5 * (W.array() * K.array()).sum();
        (*grad)(D + 1) = 0.5 * h.noise_variance * W.trace();
    }
    return lml;
}

Hyperparams default_hyperparams(const MatrixXd& X, const VectorXd& y) {
    Hyperparams h;
    h.lengthscales.resize(X.cols());
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double m = X.col(d).mean();
        const double sd = std::sqrt((X.col(d).array() - m).square().mean());
        h.lengthscales(d) = sd > 1e-8 ? sd : 1.0;
    }
    const double ym = y.mean();
    const double var = (y.array() - ym).square().mean();
    h.signal_variance = var > 1e-8 ? var : 1.0;
    h.noise_variance = 1e-2 * h.signal_variance;
    return h;
}

namespace {

VectorXd pack(const Hyperparams& h) {
    VectorXd th(h.lengthscales.size() + 2);
    th.head(h.lengthscales.size()) = h.lengthscales.array().log();
    th(h.lengthscales.size()) = std::log(h.signal_variance);
    th(h.lengthscales.size() + 1) = std::log(h.noise_variance);
    return th;
}

Hyperparams unpack(const VectorXd& th) {
    const auto D = th.size() - 2;
    Hyperparams h;
    h.lengthscales = th.head(D).array().exp();
    h.signal_variance = std::exp(th(D));
    h.noise_variance = std::exp(th(D + 1));
    return h;
}

// Bounds in log space keep the Gram matrix well conditioned.
void project(VectorXd& th, double log_noise_floor) {
    const auto D = th.size() - 2;
    th.head(D) = th.head(D).cwiseMax(std::log(1e-3)).cwiseMin(std::log(1e3));
    th(D) = std::clamp(th(D), std::log(1e-6), std::log(1e6));
    th(D + 1) = std::clamp(th(D + 1), log_noise_floor, std::log(1e3));
}

double safe_lml(const MatrixXd& X, const VectorXd& y, const VectorXd& th, VectorXd* g) {
    try {
        const double v = log_marginal_likelihood(X, y, unpack(th), g);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const EvaluationError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

GPModel gp_fit(const MatrixXd& X, const VectorXd& y, const Hyperparams& init, Rng& rng, const FitOptions& options) {
    if (X.rows() < 1) throw PreconditionError("gp_fit: need at least one training point");
    if (X.rows() != y.size()) throw DimensionError("gp_fit: X and y row counts differ");
    if (init.lengthscales.size() != X.cols()) throw DimensionError("gp_fit: lengthscale count");
    check_hyper(init);
    const double log_floor = std::log(options.noise_floor);
    VectorXd best = pack(init);
    project(best, log_floor);
    double best_val = safe_lml(X, y, best, nullptr);

    for (int r = 0; r < options.restarts; ++r) {
        VectorXd th = pack(init);
        if (r > 0)
            for (Eigen::Index i = 0; i < th.size(); ++i) th(i) += rng.uniform(-1.5, 1.5);
        project(th, log_floor);
        VectorXd g;
        double val = safe_lml(X, y, th, &g);
        if (!std::isfinite(val)) continue;
        double step = 0.1;
        for (int it = 0; it < options.iterations && step > 1e-8; ++it) {
            const double gn = g.norm();
            if (gn < 1e-9) break;
            // Backtracking: accept only improving steps.
            bool moved = false;
            while (step > 1e-8) {
                VectorXd cand = th + (step / std::max(1.0, gn)) * g;
                project(cand, log_floor);
                VectorXd cg;
                const double cv = safe_lml(X, y, cand, &cg);
                if (cv > val) {
                    th = cand;
                    val = cv;
                    g = cg;
                    step *= 1.5;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        if (val > best_val) {
            best_val = val;
            best = th;
        }
    }
    return GPModel(X, y, unpack(best), options);
}

void IndependentGP::posterior(const MatrixXd& Xq, MatrixXd& means, MatrixXd& variances) const {
    means.resize(Xq.rows(), static_cast<Eigen::Index>(outputs.size()));
    variances.resizeLike(means);
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const auto p = outputs[k].posterior(Xq);
        means.col(static_cast<Eigen::Index>(k)) = p.mean;
        variances.col(static_cast<Eigen::Index>(k)) = p.variance;
    }
}

IndependentGP fit_independent(const MatrixXd& X, const MatrixXd& Y, Rng& rng, const FitOptions& options) {
    IndependentGP out;
    for (Eigen::Index k = 0; k < Y.cols(); ++k) {
        const VectorXd y = Y.col(k);
        out.outputs.push_back(gp_fit(X, y, default_hyperparams(X, y), rng, options));
    }
    return out;
}

}  // namespace sanodep::gp
