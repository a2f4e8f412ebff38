#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sanodep/rng.hpp"

namespace sanodep::gp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ARD-RBF hyperparameters.
struct Hyperparams {
    VectorXd lengthscales;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;
};

struct FitOptions {
    int restarts = 5;
    int iterations = 100;
    double noise_floor = 1e-6;
    double jitter_start = 1e-10;
    int max_jitter_doublings = 60;
};

double rbf(const VectorXd& a, const VectorXd& b, const Hyperparams& h);
// Noise-free kernel matrix k(X1_i, X2_j); rows of X are inputs.
MatrixXd kernel_matrix(const MatrixXd& X1, const MatrixXd& X2, const Hyperparams& h);

// Exact single-output GP with zero prior mean.
class GPModel {
public:
    // Conditions on (X, y) with fixed hyperparameters. Adds jitter when the
    // Gram matrix is not numerically positive definite.
    GPModel(MatrixXd X, VectorXd y, Hyperparams h, const FitOptions& options = {});

    struct Posterior {
        VectorXd mean;
        VectorXd variance;
    };
    Posterior posterior(const MatrixXd& Xq) const;

    double log_marginal_likelihood() const { return lml_; }
    const Hyperparams& hyperparams() const { return h_; }
    double jitter() const { return jitter_; }
    const MatrixXd& inputs() const { return X_; }

private:
    MatrixXd X_;
    VectorXd y_;
    Hyperparams h_;
    Eigen::LLT<MatrixXd> llt_;
    VectorXd alpha_;
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

// Log marginal likelihood and its gradient w.r.t. (log lengthscales, log
// signal variance, log noise variance).
double log_marginal_likelihood(const MatrixXd& X, const VectorXd& y, const Hyperparams& h, VectorXd* grad = nullptr);

// Multi-start gradient ascent on the log marginal likelihood; the first start
// is `init`, the others are random log-scale perturbations of it.
GPModel gp_fit(const MatrixXd& X, const VectorXd& y, const Hyperparams& init, Rng& rng, const FitOptions& options = {});
// Data-driven default initialisation.
Hyperparams default_hyperparams(const MatrixXd& X, const VectorXd& y);

// Independent GPs per output column of Y.
struct IndependentGP {
    std::vector<GPModel> outputs;

    // means and variances: n_query x n_outputs.
    void posterior(const MatrixXd& Xq, MatrixXd& means, MatrixXd& variances) const;
};

IndependentGP fit_independent(const MatrixXd& X, const MatrixXd& Y, Rng& rng, const FitOptions& options = {});

}  // namespace sanodep::gp
