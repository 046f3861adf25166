#pragma once

#include <Eigen/Dense>

#include "kkmoe/errors.hpp"

namespace kkmoe::gp {

/// Hyperparameters of one Gaussian process expert over log-attenuation.
struct ExpertHyperparams {
    double sigma_eps;    // observation noise std
    double sigma_f;      // squared-exponential signal std
    double length_scale; // eV

    bool valid() const {
        return sigma_eps > 0.0 && sigma_f > 0.0 && length_scale > 0.0;
    }
};

/// Kernel element: sigma_f^2 exp(-(wi-wj)^2 / l^2) + wi*wj + 1.
/// No noise term; see training_covariance.
Eigen::MatrixXd covariance(const Eigen::VectorXd& omega_a, const Eigen::VectorXd& omega_b,
                           const ExpertHyperparams& theta);

/// covariance(omega, omega) + sigma_eps^2 I.
Eigen::MatrixXd training_covariance(const Eigen::VectorXd& omega, const ExpertHyperparams& theta);

/// Cholesky with adaptive diagonal jitter, 1e-10..1e-4 of mean diagonal.
/// Throws IllConditionedError if the escalation runs out.
Eigen::LLT<Eigen::MatrixXd> jittered_llt(const Eigen::MatrixXd& cov);

/// Log N(gamma | 0, training_covariance). Empty input contributes 0.
double log_marginal_likelihood(const Eigen::VectorXd& gamma, const Eigen::VectorXd& omega,
                               const ExpertHyperparams& theta);

struct Predictive {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Noise-free latent conditional at omega_star. Empty training data
/// falls back to the zero-mean prior.
Predictive predictive(const Eigen::VectorXd& gamma, const Eigen::VectorXd& omega,
                      const Eigen::VectorXd& omega_star, const ExpertHyperparams& theta);

/// mean + L * noise, L the jittered Cholesky factor of cov.
Eigen::VectorXd sample_realization(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                   const Eigen::VectorXd& noise);

} // namespace kkmoe::gp
