#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "kkmoe/errors.hpp"
#include "kkmoe/spectrum.hpp"

namespace kkmoe::synth {

/// One Lorentz resonance: eps contribution wp2 / (w0^2 - w^2 - i Gamma w).
struct LorentzResonance {
    double plasma_sq; // wp^2, eV^2
    double center;    // w0, eV
    double damping;   // Gamma, eV
};

struct LorentzModel {
    std::vector<LorentzResonance> resonances;
    double eps_inf = 1.0;

    void validate() const;
};

/// Complex refractive index (eta, kappa) from the dielectric function,
/// principal branch with kappa >= 0.
std::pair<double, double> lorentz_n(const LorentzModel& model, double omega);

/// kappa_i = exp(log kappa_true(w_i) + xi_i), xi ~ N(0, noise_std_log^2).
AttenuationSpectrum generate_spectrum(const LorentzModel& model, const FrequencyGrid& grid,
                                      double noise_std_log, std::uint64_t seed);

/// Symmetric-exclusion trapezoid PV reference on a dense grid; independent
/// of the Maclaurin scheme it validates.
double brute_force_pv(const std::vector<double>& omega, const std::vector<double>& values,
                      double pole_omega);

} // namespace kkmoe::synth
