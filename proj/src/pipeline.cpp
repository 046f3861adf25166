#include "kkmoe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "kkmoe/gp.hpp"

namespace kkmoe::pipeline {

PredictionGrid build_prediction_grid(const AttenuationSpectrum& spectrum, double extension_low,
                                     double extension_high, std::size_t n_points) {
    if (extension_low < 0.0 || extension_high < 0.0)
        throw ConfigurationError("extension fractions must be nonnegative");
    if (n_points < 16) throw ConfigurationError("prediction grid needs at least 16 nodes");
    const double meas_lo = spectrum.grid().front();
    const double meas_hi = spectrum.grid().back();
    const double lo = meas_lo * (1.0 - extension_low);
    const double hi = meas_hi * (1.0 + extension_high);
    if (!(lo > 0.0)) throw DomainError("extended grid lower edge must stay positive");

    PredictionGrid grid;
    grid.extension_low = extension_low;
    grid.extension_high = extension_high;
    grid.omega.resize(n_points);
    grid.interior.resize(n_points);
    const double h = (hi - lo) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double w = (i + 1 == n_points) ? hi : lo + h * static_cast<double>(i);
        grid.omega[i] = w;
        grid.interior[i] = (w >= meas_lo - 1e-12 * h) && (w <= meas_hi + 1e-12 * h);
    }
    return grid;
}

std::vector<double> moe_realization(const moe::MoEState& state, const moe::LogData& data,
                                    const PredictionGrid& grid, moe::Rng& rng) {
    const std::size_t K = state.experts.size();
    const Eigen::VectorXd omega_star = grid.omega_vector();
    const Eigen::Index n = omega_star.size();
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::MatrixXd draws(static_cast<Eigen::Index>(K), n);
    for (std::size_t k = 0; k < K; ++k) {
        const moe::LogData part = moe::partition_data(data, state.allocation, static_cast<int>(k));
        const gp::Predictive pred = gp::predictive(part.gamma, part.omega, omega_star,
                                                   state.experts[k]);
        Eigen::VectorXd eps(n);
        for (Eigen::Index i = 0; i < n; ++i) eps(i) = normal(rng);
        draws.row(static_cast<Eigen::Index>(k)) =
            gp::sample_realization(pred.mean, pred.cov, eps).transpose();
    }

    std::vector<double> kappa(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto weights = moe::gating_weights(omega_star(i), state.gating);
        double gamma_star = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            gamma_star += weights[k] * draws(static_cast<Eigen::Index>(k), i);
        kappa[static_cast<std::size_t>(i)] = std::exp(gamma_star);
    }
    return kappa;
}

AnchorPoint sample_anchor(const AnchorDistribution& dist, const PredictionGrid& grid,
                          moe::Rng& rng) {
    dist.validate();
    if (dist.fixed || (dist.omega_std == 0.0 && dist.eta_std == 0.0))
        return AnchorPoint{dist.omega_mean, dist.eta_mean};
    std::normal_distribution<double> normal(0.0, 1.0);
    const double lo = grid.omega.front();
    const double hi = grid.omega.back();
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double wa = dist.omega_mean + dist.omega_std * normal(rng);
        const double ea = dist.eta_mean + dist.eta_std * normal(rng);
        if (wa > lo && wa < hi && ea > 0.0) return AnchorPoint{wa, ea};
    }
    throw ConfigurationError("anchor distribution mass lies outside the prediction grid");
}

EnsembleSummary summarize(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DomainError("cannot summarize an empty batch");
    const std::size_t n_nodes = rows.front().size();
    const std::size_t n = rows.size();
    EnsembleSummary out;
    out.n_realizations = n;
    out.mean.resize(n_nodes);
    out.lower.resize(n_nodes);
    out.upper.resize(n_nodes);

    auto percentile = [](std::vector<double>& sorted, double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };

    std::vector<double> column(n);
    for (std::size_t j = 0; j < n_nodes; ++j) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            column[r] = rows[r][j];
            sum += column[r];
        }
        std::sort(column.begin(), column.end());
        out.mean[j] = sum / static_cast<double>(n);
        out.lower[j] = percentile(column, 0.025);
        out.upper[j] = percentile(column, 0.975);
    }
    return out;
}

Algorithm1Result run_algorithm1(const inference::PosteriorEnsemble& ensemble,
                                const moe::LogData& data, const PredictionGrid& grid,
                                const AnchorDistribution& anchor_dist,
                                std::size_t n_realizations, std::uint64_t rng_seed) {
    if (ensemble.samples.empty()) throw DomainError("posterior ensemble is empty");
    if (n_realizations == 0) throw ConfigurationError("need at least one realization");

    struct Slot {
        bool ok = false;
        std::size_t state_index = 0;
        std::vector<double> kappa;
        std::vector<double> eta;
        double snap = 0.0;
    };
    std::vector<Slot> slots(n_realizations);

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const std::uint64_t seed = inference::derive_seed(rng_seed, r);
            moe::Rng rng(seed);
            std::uniform_int_distribution<std::size_t> pick(0, ensemble.samples.size() - 1);
            Slot& slot = slots[r];
            slot.state_index = pick(rng);
            try {
                const auto& state = ensemble.samples[slot.state_index];
                slot.kappa = moe_realization(state, data, grid, rng);
                const AnchorPoint anchor = sample_anchor(anchor_dist, grid, rng);
                kk::PVGrid pv(grid.omega, slot.kappa);
                kk::KKResult result = kk::sskk_eta(pv, anchor, grid.omega);
                slot.eta = std::move(result.eta);
                slot.snap = result.anchor_snap_distance;
                slot.ok = true;
            } catch (const IllConditionedError&) {
                slot.ok = false;
            }
        }
    };

    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min(hw, n_realizations);
    std::vector<std::thread> threads;
    const std::size_t chunk = (n_realizations + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(begin + chunk, n_realizations);
        if (begin < end) threads.emplace_back(worker, begin, end);
    }
    for (auto& th : threads) th.join();

    Algorithm1Result out;
    double snap_sum = 0.0;
    for (std::size_t r = 0; r < n_realizations; ++r) {
        Slot& slot = slots[r];
        if (!slot.ok) {
            ++out.failed_realizations;
            continue;
        }
        out.kappa.rows.push_back(std::move(slot.kappa));
        out.kappa.state_index.push_back(slot.state_index);
        out.kappa.row_seeds.push_back(inference::derive_seed(rng_seed, r));
        out.eta.rows.push_back(std::move(slot.eta));
        out.eta.state_index.push_back(slot.state_index);
        out.eta.row_seeds.push_back(out.kappa.row_seeds.back());
        snap_sum += slot.snap;
        out.max_anchor_snap = std::max(out.max_anchor_snap, slot.snap);
    }
    if (static_cast<double>(out.failed_realizations) >
        0.01 * static_cast<double>(n_realizations))
        throw PipelineError(std::to_string(out.failed_realizations) + " of " +
                            std::to_string(n_realizations) + " realizations failed");
    if (!out.kappa.rows.empty())
        out.mean_anchor_snap = snap_sum / static_cast<double>(out.kappa.rows.size());
    out.kappa_summary = summarize(out.kappa.rows);
    out.eta_summary = summarize(out.eta.rows);
    return out;
}

} // namespace kkmoe::pipeline
