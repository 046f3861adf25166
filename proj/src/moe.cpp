#include "kkmoe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace kkmoe::moe {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.9189385332046727; // log sqrt(2 pi)
} // namespace

LogData LogData::from_spectrum(const AttenuationSpectrum& spectrum) {
    auto [omega, gamma] = spectrum.log_points();
    LogData data;
    data.omega = Eigen::Map<const Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
    data.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    return data;
}

bool GatingParams::valid() const {
    if (weight.empty() || mean.size() != weight.size() || width.size() != weight.size()) return false;
    double sum = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
        if (!(weight[k] >= 0.0) || !(width[k] > 0.0)) return false;
        sum += weight[k];
    }
    return std::abs(sum - 1.0) < 1e-12;
}

PriorSpec PriorSpec::from_ranges(double omega_min, double omega_max, double delta_gamma, int K) {
    if (K < 1) throw ConfigurationError("K must be >= 1");
    const double delta_omega = omega_max - omega_min;
    if (!(delta_omega > 0.0) || !(delta_gamma > 0.0))
        throw DegenerateDataError("non-positive data range");
    PriorSpec prior;
    prior.K = K;
    prior.omega_min = omega_min;
    prior.omega_max = omega_max;
    prior.delta_gamma = delta_gamma;
    prior.delta_omega = delta_omega;
    // 1/K-spaced interior grid on the normalized range, mapped back to eV
    prior.grid_means.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        prior.grid_means[static_cast<std::size_t>(k)] =
            omega_min + (static_cast<double>(k) + 0.5) / static_cast<double>(K) * delta_omega;
    prior.gating_scale = 0.25 / (static_cast<double>(K) + 1.0) * delta_omega;
    prior.sigma_eps_scale = 0.25 * delta_gamma;
    prior.sigma_f_scale = 0.25 * delta_gamma;
    prior.length_scale_scale = 0.50 * delta_omega;
    return prior;
}

PriorSpec PriorSpec::from_data(const AttenuationSpectrum& spectrum, int K) {
    const DataRanges ranges = data_ranges(spectrum);
    auto [omega, gamma] = spectrum.log_points();
    return from_ranges(omega.front(), omega.back(), ranges.delta_gamma, K);
}

double log_normal_pdf(double x, double mean, double stddev) {
    if (!(stddev > 0.0)) return kNegInf;
    const double z = (x - mean) / stddev;
    return -0.5 * z * z - std::log(stddev) - kLogSqrt2Pi;
}

double log_half_normal_pdf(double x, double scale) {
    if (!(x > 0.0) || !(scale > 0.0)) return kNegInf;
    const double z = x / scale;
    return std::numbers::ln2 - 0.5 * z * z - std::log(scale) - kLogSqrt2Pi;
}

double log_dirichlet_pdf(const std::vector<double>& weights, double conc) {
    const std::size_t K = weights.size();
    if (K == 1) return 0.0; // point mass on the 0-simplex
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) return kNegInf;
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
    double out = std::lgamma(conc * static_cast<double>(K)) -
                 static_cast<double>(K) * std::lgamma(conc);
    for (double w : weights) out += (conc - 1.0) * std::log(w);
    return out;
}

std::vector<double> gating_weights(double omega, const GatingParams& gating) {
    const std::size_t K = gating.K();
    std::vector<double> log_kernel(K);
    double max_log = kNegInf;
    for (std::size_t k = 0; k < K; ++k) {
        log_kernel[k] = (gating.weight[k] > 0.0 ? std::log(gating.weight[k]) : kNegInf) +
                        log_normal_pdf(omega, gating.mean[k], gating.width[k]);
        max_log = std::max(max_log, log_kernel[k]);
    }
    std::vector<double> weights(K);
    if (!std::isfinite(max_log)) { // all kernels underflowed
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(K));
        return weights;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        weights[k] = std::exp(log_kernel[k] - max_log);
        sum += weights[k];
    }
    for (double& w : weights) w /= sum;
    return weights;
}

Allocation sample_allocation_prior(const Eigen::VectorXd& omega_grid, const GatingParams& gating,
                                   Rng& rng) {
    Allocation allocation(static_cast<std::size_t>(omega_grid.size()));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < omega_grid.size(); ++i) {
        const auto weights = gating_weights(omega_grid(i), gating);
        double u = unif(rng);
        int pick = static_cast<int>(weights.size()) - 1;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            u -= weights[k];
            if (u <= 0.0) {
                pick = static_cast<int>(k);
                break;
            }
        }
        allocation[static_cast<std::size_t>(i)] = pick;
    }
    return allocation;
}

double log_partition_prior(const Allocation& allocation, const Eigen::VectorXd& omega_grid,
                           const GatingParams& gating) {
    if (allocation.size() != static_cast<std::size_t>(omega_grid.size()))
        throw DomainError("allocation/grid length mismatch");
    double out = 0.0;
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        const auto weights = gating_weights(omega_grid(static_cast<Eigen::Index>(i)), gating);
        const double w = weights[static_cast<std::size_t>(allocation[i])];
        out += w > 0.0 ? std::log(w) : kNegInf;
    }
    return out;
}

double log_prior_gating(const GatingParams& gating, const PriorSpec& prior) {
    if (gating.K() != static_cast<std::size_t>(prior.K))
        throw DomainError("gating size does not match prior K");
    double out = log_dirichlet_pdf(gating.weight, prior.dirichlet_conc);
    for (std::size_t k = 0; k < gating.K(); ++k) {
        out += log_normal_pdf(gating.mean[k], prior.grid_means[k], prior.gating_scale);
        out += log_half_normal_pdf(gating.width[k], prior.gating_scale);
    }
    return out;
}

double log_prior_experts(const std::vector<gp::ExpertHyperparams>& experts, const PriorSpec& prior) {
    double out = 0.0;
    for (const auto& theta : experts) {
        out += log_half_normal_pdf(theta.sigma_eps, prior.sigma_eps_scale);
        out += log_half_normal_pdf(theta.sigma_f, prior.sigma_f_scale);
        out += log_half_normal_pdf(theta.length_scale, prior.length_scale_scale);
    }
    return out;
}

LogData partition_data(const LogData& data, const Allocation& allocation, int expert) {
    if (allocation.size() != static_cast<std::size_t>(data.size()))
        throw DomainError("allocation/data length mismatch");
    std::vector<double> omega, gamma;
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        if (allocation[i] == expert) {
            omega.push_back(data.omega(static_cast<Eigen::Index>(i)));
            gamma.push_back(data.gamma(static_cast<Eigen::Index>(i)));
        }
    }
    LogData out;
    out.omega = Eigen::Map<const Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
    out.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    return out;
}

double joint_log_posterior(const MoEState& state, const LogData& data, const PriorSpec& prior,
                           bool likelihood_enabled) {
    const int K = prior.K;
    if (state.experts.size() != static_cast<std::size_t>(K) || state.gating.K() != static_cast<std::size_t>(K))
        throw DomainError("state does not match prior K");
    double out = log_prior_gating(state.gating, prior) + log_prior_experts(state.experts, prior);
    if (!std::isfinite(out)) return kNegInf;
    out += log_partition_prior(state.allocation, data.omega, state.gating);
    if (!std::isfinite(out)) return kNegInf;
    if (likelihood_enabled) {
        for (int k = 0; k < K; ++k) {
            const LogData part = partition_data(data, state.allocation, k);
            out += gp::log_marginal_likelihood(part.gamma, part.omega,
                                               state.experts[static_cast<std::size_t>(k)]);
        }
    }
    return out;
}

} // namespace kkmoe::moe
