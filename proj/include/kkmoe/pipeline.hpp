#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kkmoe/kk.hpp"
#include "kkmoe/moe.hpp"
#include "kkmoe/sampler.hpp"
#include "kkmoe/spectrum.hpp"

namespace kkmoe::pipeline {

/// Uniform grid covering the measurement range plus optional extensions.
struct PredictionGrid {
    std::vector<double> omega;
    std::vector<bool> interior; // node inside [measurement min, max]
    double extension_low = 0.0;
    double extension_high = 0.0;

    Eigen::VectorXd omega_vector() const {
        return Eigen::Map<const Eigen::VectorXd>(omega.data(),
                                                 static_cast<Eigen::Index>(omega.size()));
    }
};

PredictionGrid build_prediction_grid(const AttenuationSpectrum& spectrum, double extension_low,
                                     double extension_high, std::size_t n_points);

/// One gating-weighted draw of kappa on the prediction grid.
std::vector<double> moe_realization(const moe::MoEState& state, const moe::LogData& data,
                                    const PredictionGrid& grid, moe::Rng& rng);

AnchorPoint sample_anchor(const AnchorDistribution& dist, const PredictionGrid& grid,
                          moe::Rng& rng);

struct RealizationBatch {
    std::vector<std::vector<double>> rows; // one kappa* (or eta*) curve per row
    std::vector<std::size_t> state_index;
    std::vector<std::uint64_t> row_seeds;
};

struct EnsembleSummary {
    std::vector<double> mean;
    std::vector<double> lower; // 2.5%
    std::vector<double> upper; // 97.5%
    std::size_t n_realizations = 0;
};

/// Pointwise mean and 2.5/97.5 empirical percentiles (interpolated order
/// statistics).
EnsembleSummary summarize(const std::vector<std::vector<double>>& rows);

struct Algorithm1Result {
    RealizationBatch kappa;
    RealizationBatch eta;
    EnsembleSummary kappa_summary;
    EnsembleSummary eta_summary;
    std::size_t failed_realizations = 0;
    double mean_anchor_snap = 0.0;
    double max_anchor_snap = 0.0;
};

/// Draw posterior states, kappa* realizations, and anchors; push each
/// through the singly-subtractive transform; summarize pointwise.
Algorithm1Result run_algorithm1(const inference::PosteriorEnsemble& ensemble,
                                const moe::LogData& data, const PredictionGrid& grid,
                                const AnchorDistribution& anchor_dist,
                                std::size_t n_realizations, std::uint64_t rng_seed);

} // namespace kkmoe::pipeline
