#include "kkmoe/gp.hpp"

#include <cmath>
#include <numbers>

namespace kkmoe::gp {

Eigen::MatrixXd covariance(const Eigen::VectorXd& omega_a, const Eigen::VectorXd& omega_b,
                           const ExpertHyperparams& theta) {
    if (!theta.valid()) throw DomainError("expert hyperparameters must be positive");
    if (omega_a.size() == 0 || omega_b.size() == 0)
        throw DomainError("covariance inputs must be non-empty");
    const double sf2 = theta.sigma_f * theta.sigma_f;
    const double inv_l2 = 1.0 / (theta.length_scale * theta.length_scale);
    Eigen::MatrixXd out(omega_a.size(), omega_b.size());
    for (Eigen::Index i = 0; i < omega_a.size(); ++i) {
        for (Eigen::Index j = 0; j < omega_b.size(); ++j) {
            const double d = omega_a(i) - omega_b(j);
            out(i, j) = sf2 * std::exp(-d * d * inv_l2) + omega_a(i) * omega_b(j) + 1.0;
        }
    }
    return out;
}

Eigen::MatrixXd training_covariance(const Eigen::VectorXd& omega, const ExpertHyperparams& theta) {
    Eigen::MatrixXd cov = covariance(omega, omega, theta);
    cov.diagonal().array() += theta.sigma_eps * theta.sigma_eps;
    return cov;
}

Eigen::LLT<Eigen::MatrixXd> jittered_llt(const Eigen::MatrixXd& cov) {
    const double base = cov.diagonal().mean();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt;
    for (double jitter = 1e-10 * base; jitter <= 1e-4 * base; jitter *= 10.0) {
        Eigen::MatrixXd bumped = cov;
        bumped.diagonal().array() += jitter;
        llt.compute(bumped);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw IllConditionedError("covariance not positive definite after jitter escalation");
}

double log_marginal_likelihood(const Eigen::VectorXd& gamma, const Eigen::VectorXd& omega,
                               const ExpertHyperparams& theta) {
    if (gamma.size() != omega.size()) throw DomainError("gamma/omega length mismatch");
    if (gamma.size() == 0) return 0.0;
    const auto llt = jittered_llt(training_covariance(omega, theta));
    const Eigen::VectorXd alpha = llt.solve(gamma);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double n = static_cast<double>(gamma.size());
    return -0.5 * gamma.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Predictive predictive(const Eigen::VectorXd& gamma, const Eigen::VectorXd& omega,
                      const Eigen::VectorXd& omega_star, const ExpertHyperparams& theta) {
    if (omega_star.size() == 0) throw DomainError("prediction grid is empty");
    if (gamma.size() != omega.size()) throw DomainError("gamma/omega length mismatch");
    if (gamma.size() == 0) {
        return Predictive{Eigen::VectorXd::Zero(omega_star.size()),
                          covariance(omega_star, omega_star, theta)};
    }
    const auto llt = jittered_llt(training_covariance(omega, theta));
    const Eigen::MatrixXd cross = covariance(omega_star, omega, theta);
    Predictive pred;
    pred.mean = cross * llt.solve(gamma);
    pred.cov = covariance(omega_star, omega_star, theta) - cross * llt.solve(cross.transpose());
    return pred;
}

Eigen::VectorXd sample_realization(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                   const Eigen::VectorXd& noise) {
    if (mean.size() != cov.rows() || cov.rows() != cov.cols() || noise.size() != mean.size())
        throw DomainError("realization dimension mismatch");
    const auto llt = jittered_llt(cov);
    return mean + llt.matrixL() * noise;
}

} // namespace kkmoe::gp
