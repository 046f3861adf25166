#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "kkmoe/gp.hpp"
#include "kkmoe/spectrum.hpp"

namespace kkmoe::moe {

using Rng = std::mt19937_64;

/// Log-domain training data: (omega_i, gamma_i) with gamma = log kappa.
struct LogData {
    Eigen::VectorXd omega;
    Eigen::VectorXd gamma;

    static LogData from_spectrum(const AttenuationSpectrum& spectrum);
    Eigen::Index size() const { return omega.size(); }
};

/// Gating kernel parameters, one Gaussian bump per expert.
struct GatingParams {
    std::vector<double> weight; // simplex
    std::vector<double> mean;   // eV
    std::vector<double> width;  // kernel std, eV

    std::size_t K() const { return weight.size(); }
    bool valid() const;
};

/// Per-point expert indices, 0-based. Empty experts are allowed.
using Allocation = std::vector<int>;

struct MoEState {
    Allocation allocation;
    GatingParams gating;
    std::vector<gp::ExpertHyperparams> experts;
    double log_posterior = 0.0;
};

/// Table-of-priors specification, derived from the data ranges.
/// Gating location/width scales live on the measurement omega-range
/// normalized to [0,1] and are mapped back to eV here.
struct PriorSpec {
    int K = 5;
    double omega_min = 0.0;
    double omega_max = 1.0;
    double delta_gamma = 1.0;
    double delta_omega = 1.0;
    std::vector<double> grid_means;  // G_k in eV
    double gating_scale = 0.0;       // (0.25/(K+1)) * delta_omega, for mu and sigma priors
    double dirichlet_conc = 0.5;
    double sigma_eps_scale = 0.0;    // 0.25 * delta_gamma
    double sigma_f_scale = 0.0;      // 0.25 * delta_gamma
    double length_scale_scale = 0.0; // 0.50 * delta_omega

    static PriorSpec from_data(const AttenuationSpectrum& spectrum, int K);
    static PriorSpec from_ranges(double omega_min, double omega_max, double delta_gamma, int K);
};

double log_normal_pdf(double x, double mean, double stddev);
double log_half_normal_pdf(double x, double scale);
double log_dirichlet_pdf(const std::vector<double>& weights, double conc);

/// Normalized kernel weights pi_k(omega), log-domain stabilized.
/// All-zero kernels fall back to uniform 1/K.
std::vector<double> gating_weights(double omega, const GatingParams& gating);

Allocation sample_allocation_prior(const Eigen::VectorXd& omega_grid, const GatingParams& gating,
                                   Rng& rng);

/// sum_i log pi_{c_i}(omega_i).
double log_partition_prior(const Allocation& allocation, const Eigen::VectorXd& omega_grid,
                           const GatingParams& gating);

double log_prior_gating(const GatingParams& gating, const PriorSpec& prior);

double log_prior_experts(const std::vector<gp::ExpertHyperparams>& experts, const PriorSpec& prior);

/// Data for one expert's partition.
LogData partition_data(const LogData& data, const Allocation& allocation, int expert);

/// Unnormalized log pi(C, psi, theta | omega, gamma).
/// likelihood_enabled=false drops the GP likelihood term (prior-only target).
double joint_log_posterior(const MoEState& state, const LogData& data, const PriorSpec& prior,
                           bool likelihood_enabled = true);

} // namespace kkmoe::moe
