#include "kkmoe/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <json.hpp>

namespace kkmoe::inference {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
} // namespace

void SamplerConfig::validate() const {
    if (n_chains < 1) throw ConfigurationError("need at least one chain");
    if (n_burn_in < 0 || n_iterations <= n_burn_in)
        throw ConfigurationError("n_iterations must exceed n_burn_in");
    if (thinning < 1) throw ConfigurationError("thinning must be >= 1");
    if (!(allocation_update_fraction > 0.0) || allocation_update_fraction > 1.0)
        throw ConfigurationError("allocation_update_fraction must be in (0, 1]");
    if (!(steps.expert_log > 0.0) || !(steps.gating_log_width > 0.0) ||
        !(steps.gating_weight > 0.0) || steps.gating_mean < 0.0)
        throw ConfigurationError("step scales must be positive");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

bool mh_accept(double log_ratio, Rng& rng) {
    if (log_ratio >= 0.0) return true;
    if (!std::isfinite(log_ratio)) return false;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::log(unif(rng)) < log_ratio;
}

namespace {

double safe_log_ml(const LogData& part, const gp::ExpertHyperparams& theta) {
    try {
        return gp::log_marginal_likelihood(part.gamma, part.omega, theta);
    } catch (const IllConditionedError&) {
        return kNegInf;
    }
}

LogData subset_data(const LogData& data, const std::vector<std::size_t>& idx) {
    LogData out;
    out.omega.resize(static_cast<Eigen::Index>(idx.size()));
    out.gamma.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.omega(static_cast<Eigen::Index>(r)) = data.omega(static_cast<Eigen::Index>(idx[r]));
        out.gamma(static_cast<Eigen::Index>(r)) = data.gamma(static_cast<Eigen::Index>(idx[r]));
    }
    return out;
}

std::vector<double> halfnormal_draw3(double s1, double s2, double s3, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return {std::abs(normal(rng)) * s1, std::abs(normal(rng)) * s2, std::abs(normal(rng)) * s3};
}

int sample_categorical_log(const std::vector<double>& log_weights, Rng& rng) {
    const double max_log = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(max_log)) return 0;
    std::vector<double> w(log_weights.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = std::exp(log_weights[k] - max_log);
        sum += w[k];
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) * sum;
    for (std::size_t k = 0; k < w.size(); ++k) {
        u -= w[k];
        if (u <= 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(w.size()) - 1;
}

double gating_mean_step(const SamplerConfig& config, const PriorSpec& prior) {
    return config.steps.gating_mean > 0.0 ? config.steps.gating_mean : 0.5 * prior.gating_scale;
}

} // namespace

MoEState update_allocations(const MoEState& state, const LogData& data, const PriorSpec& prior,
                            const SamplerConfig& config, Rng& rng) {
    const int K = prior.K;
    MoEState out = state;
    if (K == 1) return out;

    const std::size_t n = out.allocation.size();
    std::vector<std::vector<std::size_t>> sets(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < n; ++i)
        sets[static_cast<std::size_t>(out.allocation[i])].push_back(i);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (unif(rng) > config.allocation_update_fraction) continue;
        const int old_k = out.allocation[i];
        const auto weights =
            moe::gating_weights(data.omega(static_cast<Eigen::Index>(i)), out.gating);

        std::vector<double> log_cond(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const auto& theta = out.experts[static_cast<std::size_t>(k)];
            double log_gate = weights[static_cast<std::size_t>(k)] > 0.0
                                  ? std::log(weights[static_cast<std::size_t>(k)])
                                  : kNegInf;
            double delta = 0.0;
            if (config.likelihood_enabled) {
                std::vector<std::size_t> without = sets[static_cast<std::size_t>(k)];
                if (k == old_k) std::erase(without, i);
                std::vector<std::size_t> with = without;
                with.insert(std::upper_bound(with.begin(), with.end(), i), i);
                delta = safe_log_ml(subset_data(data, with), theta) -
                        safe_log_ml(subset_data(data, without), theta);
            }
            log_cond[static_cast<std::size_t>(k)] = log_gate + delta;
        }
        const int new_k = sample_categorical_log(log_cond, rng);
        if (new_k != old_k) {
            std::erase(sets[static_cast<std::size_t>(old_k)], i);
            auto& dst = sets[static_cast<std::size_t>(new_k)];
            dst.insert(std::upper_bound(dst.begin(), dst.end(), i), i);
            out.allocation[i] = new_k;
        }
    }
    return out;
}

MoEState update_experts(const MoEState& state, const LogData& data, const PriorSpec& prior,
                        const SamplerConfig& config, Rng& rng, ChainDiagnostics* diag) {
    MoEState out = state;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < prior.K; ++k) {
        auto& theta = out.experts[static_cast<std::size_t>(k)];
        const LogData part = config.likelihood_enabled
                                 ? moe::partition_data(data, out.allocation, k)
                                 : LogData{};
        gp::ExpertHyperparams proposal{
            theta.sigma_eps * std::exp(config.steps.expert_log * normal(rng)),
            theta.sigma_f * std::exp(config.steps.expert_log * normal(rng)),
            theta.length_scale * std::exp(config.steps.expert_log * normal(rng))};

        auto block_density = [&](const gp::ExpertHyperparams& t) {
            double d = moe::log_half_normal_pdf(t.sigma_eps, prior.sigma_eps_scale) +
                       moe::log_half_normal_pdf(t.sigma_f, prior.sigma_f_scale) +
                       moe::log_half_normal_pdf(t.length_scale, prior.length_scale_scale);
            if (config.likelihood_enabled && std::isfinite(d))
                d += safe_log_ml(part, t);
            // log-space random walk Jacobian
            d += std::log(t.sigma_eps) + std::log(t.sigma_f) + std::log(t.length_scale);
            return d;
        };
        const double log_ratio = block_density(proposal) - block_density(theta);
        if (diag) ++diag->experts.proposed;
        if (mh_accept(log_ratio, rng)) {
            theta = proposal;
            if (diag) ++diag->experts.accepted;
        }
    }
    return out;
}

MoEState update_gating(const MoEState& state, const LogData& data, const PriorSpec& prior,
                       const SamplerConfig& config, Rng& rng, ChainDiagnostics* diag) {
    const int K = prior.K;
    MoEState out = state;
    std::normal_distribution<double> normal(0.0, 1.0);

    auto partition_term = [&](const GatingParams& gating) {
        return moe::log_partition_prior(out.allocation, data.omega, gating);
    };

    // means
    for (int k = 0; k < K; ++k) {
        GatingParams proposal = out.gating;
        proposal.mean[static_cast<std::size_t>(k)] += gating_mean_step(config, prior) * normal(rng);
        const double log_ratio =
            moe::log_normal_pdf(proposal.mean[static_cast<std::size_t>(k)],
                                prior.grid_means[static_cast<std::size_t>(k)], prior.gating_scale) -
            moe::log_normal_pdf(out.gating.mean[static_cast<std::size_t>(k)],
                                prior.grid_means[static_cast<std::size_t>(k)], prior.gating_scale) +
            partition_term(proposal) - partition_term(out.gating);
        if (diag) ++diag->gating_mean.proposed;
        if (mh_accept(log_ratio, rng)) {
            out.gating = proposal;
            if (diag) ++diag->gating_mean.accepted;
        }
    }

    // widths, log-space walk
    for (int k = 0; k < K; ++k) {
        GatingParams proposal = out.gating;
        auto& w = proposal.width[static_cast<std::size_t>(k)];
        w *= std::exp(config.steps.gating_log_width * normal(rng));
        const double log_ratio =
            moe::log_half_normal_pdf(w, prior.gating_scale) -
            moe::log_half_normal_pdf(out.gating.width[static_cast<std::size_t>(k)],
                                     prior.gating_scale) +
            std::log(w) - std::log(out.gating.width[static_cast<std::size_t>(k)]) +
            partition_term(proposal) - partition_term(out.gating);
        if (diag) ++diag->gating_width.proposed;
        if (mh_accept(log_ratio, rng)) {
            out.gating = proposal;
            if (diag) ++diag->gating_width.accepted;
        }
    }

    // weights: random walk in softmax coordinates with the last fixed at 0;
    // |dv/dz| = prod_k v_k enters the ratio
    if (K > 1) {
        std::vector<double> z(static_cast<std::size_t>(K), 0.0);
        const double log_vK = std::log(out.gating.weight[static_cast<std::size_t>(K - 1)]);
        for (int k = 0; k + 1 < K; ++k)
            z[static_cast<std::size_t>(k)] =
                std::log(out.gating.weight[static_cast<std::size_t>(k)]) - log_vK;
        for (int k = 0; k + 1 < K; ++k)
            z[static_cast<std::size_t>(k)] += config.steps.gating_weight * normal(rng);

        GatingParams proposal = out.gating;
        double max_z = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += std::exp(z[static_cast<std::size_t>(k)] - max_z);
        for (int k = 0; k < K; ++k)
            proposal.weight[static_cast<std::size_t>(k)] =
                std::exp(z[static_cast<std::size_t>(k)] - max_z) / sum;

        auto weight_density = [&](const GatingParams& gating) {
            double d = moe::log_dirichlet_pdf(gating.weight, prior.dirichlet_conc);
            for (double v : gating.weight) d += std::log(v);
            return d + partition_term(gating);
        };
        const double log_ratio = weight_density(proposal) - weight_density(out.gating);
        if (diag) ++diag->gating_weight.proposed;
        if (mh_accept(log_ratio, rng)) {
            out.gating = proposal;
            if (diag) ++diag->gating_weight.accepted;
        }
    }
    return out;
}

MoEState initialize_state(const LogData& data, const PriorSpec& prior, const SamplerConfig& config,
                          Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::gamma_distribution<double> gamma(prior.dirichlet_conc, 1.0);
    const int K = prior.K;
    for (int attempt = 0; attempt < 100; ++attempt) {
        MoEState state;
        state.gating.weight.resize(static_cast<std::size_t>(K));
        state.gating.mean.resize(static_cast<std::size_t>(K));
        state.gating.width.resize(static_cast<std::size_t>(K));
        double wsum = 0.0;
        for (int k = 0; k < K; ++k) {
            state.gating.weight[static_cast<std::size_t>(k)] = K == 1 ? 1.0 : gamma(rng);
            wsum += state.gating.weight[static_cast<std::size_t>(k)];
            state.gating.mean[static_cast<std::size_t>(k)] =
                prior.grid_means[static_cast<std::size_t>(k)] + prior.gating_scale * normal(rng);
            state.gating.width[static_cast<std::size_t>(k)] =
                std::abs(normal(rng)) * prior.gating_scale;
        }
        for (int k = 0; k < K; ++k) state.gating.weight[static_cast<std::size_t>(k)] /= wsum;
        state.experts.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const auto draw = halfnormal_draw3(prior.sigma_eps_scale, prior.sigma_f_scale,
                                               prior.length_scale_scale, rng);
            state.experts[static_cast<std::size_t>(k)] = {draw[0], draw[1], draw[2]};
        }
        if (!state.gating.valid()) continue;
        state.allocation = moe::sample_allocation_prior(data.omega, state.gating, rng);
        try {
            state.log_posterior =
                moe::joint_log_posterior(state, data, prior, config.likelihood_enabled);
        } catch (const IllConditionedError&) {
            continue;
        }
        if (std::isfinite(state.log_posterior)) return state;
    }
    throw InitializationError("no finite-posterior starting point found in 100 attempts");
}

namespace {

struct ChainResult {
    std::vector<MoEState> samples;
    ChainDiagnostics diag;
};

ChainResult run_chain(const LogData& data, const PriorSpec& prior, const SamplerConfig& config,
                      std::uint64_t chain_seed) {
    Rng rng(chain_seed);
    ChainResult result;
    result.diag.seed = chain_seed;
    MoEState state = initialize_state(data, prior, config, rng);
    for (int iter = 1; iter <= config.n_iterations; ++iter) {
        state = update_allocations(state, data, prior, config, rng);
        state = update_experts(state, data, prior, config, rng, &result.diag);
        state = update_gating(state, data, prior, config, rng, &result.diag);
        state.log_posterior = moe::joint_log_posterior(state, data, prior, config.likelihood_enabled);
        result.diag.log_posterior_trace.push_back(state.log_posterior);
        if (iter > config.n_burn_in && (iter - config.n_burn_in) % config.thinning == 0)
            result.samples.push_back(state);
    }
    return result;
}

} // namespace

PosteriorEnsemble run_sampler(const LogData& data, const PriorSpec& prior,
                              const SamplerConfig& config) {
    config.validate();
    if (data.size() == 0) throw DomainError("no log-domain data points to fit");

    std::vector<std::future<ChainResult>> futures;
    futures.reserve(static_cast<std::size_t>(config.n_chains));
    for (int c = 0; c < config.n_chains; ++c) {
        const std::uint64_t chain_seed = derive_seed(config.rng_seed, static_cast<std::uint64_t>(c));
        futures.push_back(std::async(std::launch::async, run_chain, std::cref(data),
                                     std::cref(prior), std::cref(config), chain_seed));
    }
    PosteriorEnsemble ensemble;
    for (auto& f : futures) {
        ChainResult r = f.get();
        ensemble.samples.insert(ensemble.samples.end(), r.samples.begin(), r.samples.end());
        ensemble.chains.push_back(std::move(r.diag));
    }
    return ensemble;
}

std::string PosteriorEnsemble::diagnostics_json() const {
    nlohmann::json doc;
    doc["n_samples"] = samples.size();
    doc["chains"] = nlohmann::json::array();
    for (const auto& chain : chains) {
        nlohmann::json c;
        c["seed"] = chain.seed;
        c["acceptance"] = {{"experts", chain.experts.rate()},
                           {"gating_mean", chain.gating_mean.rate()},
                           {"gating_width", chain.gating_width.rate()},
                           {"gating_weight", chain.gating_weight.rate()}};
        c["log_posterior_trace"] = chain.log_posterior_trace;
        doc["chains"].push_back(std::move(c));
    }
    return doc.dump(2);
}

} // namespace kkmoe::inference
