#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kkmoe/moe.hpp"

namespace kkmoe::inference {

using moe::Allocation;
using moe::GatingParams;
using moe::LogData;
using moe::MoEState;
using moe::PriorSpec;
using moe::Rng;

struct StepScales {
    double expert_log = 0.35;  // RW step on (log sigma_eps, log sigma_f, log l)
    double gating_mean = 0.0;  // 0 -> derived as 0.5 * prior gating scale
    double gating_log_width = 0.35;
    double gating_weight = 0.6; // RW in unconstrained softmax space
};

struct SamplerConfig {
    int n_chains = 2;
    int n_iterations = 1500;
    int n_burn_in = 500;
    int thinning = 5;
    StepScales steps;
    double allocation_update_fraction = 0.25;
    std::uint64_t rng_seed = 0;
    bool likelihood_enabled = true;

    void validate() const;
};

struct BlockAcceptance {
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
    double rate() const {
        return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    }
};

struct ChainDiagnostics {
    std::uint64_t seed = 0;
    BlockAcceptance experts;
    BlockAcceptance gating_mean;
    BlockAcceptance gating_width;
    BlockAcceptance gating_weight;
    std::vector<double> log_posterior_trace;
};

struct PosteriorEnsemble {
    std::vector<MoEState> samples;
    std::vector<ChainDiagnostics> chains;

    std::string diagnostics_json() const;
};

/// Deterministic per-stream seed derivation (splitmix64 over seed ^ stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Metropolis accept/reject on a log density ratio.
bool mh_accept(double log_ratio, Rng& rng);

/// Gibbs resampling of a random subset of allocation variables from their
/// full conditionals.
MoEState update_allocations(const MoEState& state, const LogData& data, const PriorSpec& prior,
                            const SamplerConfig& config, Rng& rng);

/// Per-expert random-walk Metropolis on log hyperparameters.
MoEState update_experts(const MoEState& state, const LogData& data, const PriorSpec& prior,
                        const SamplerConfig& config, Rng& rng, ChainDiagnostics* diag = nullptr);

/// Random-walk Metropolis on gating means, log widths, and softmax weights.
MoEState update_gating(const MoEState& state, const LogData& data, const PriorSpec& prior,
                       const SamplerConfig& config, Rng& rng, ChainDiagnostics* diag = nullptr);

/// Draw an initial state from the priors; retries until the posterior is
/// finite (bounded attempts).
MoEState initialize_state(const LogData& data, const PriorSpec& prior, const SamplerConfig& config,
                          Rng& rng);

/// Blocked Metropolis-within-Gibbs over independent parallel chains.
PosteriorEnsemble run_sampler(const LogData& data, const PriorSpec& prior,
                              const SamplerConfig& config);

} // namespace kkmoe::inference
