#include "kkmoe/lorentz.hpp"

#include <cmath>
#include <complex>

namespace kkmoe::synth {

void LorentzModel::validate() const {
    if (!(eps_inf >= 1.0)) throw DomainError("eps_inf must be >= 1");
    for (const auto& r : resonances) {
        if (!(r.plasma_sq > 0.0) || !(r.center > 0.0) || !(r.damping > 0.0))
            throw DomainError("Lorentz resonance parameters must be positive");
    }
}

std::pair<double, double> lorentz_n(const LorentzModel& model, double omega) {
    if (!(omega > 0.0)) throw DomainError("omega must be positive");
    std::complex<double> eps(model.eps_inf, 0.0);
    for (const auto& r : model.resonances) {
        eps += r.plasma_sq /
               std::complex<double>(r.center * r.center - omega * omega, -r.damping * omega);
    }
    std::complex<double> n = std::sqrt(eps);
    if (n.imag() < 0.0) n = -n; // absorbing branch
    return {n.real(), n.imag()};
}

AttenuationSpectrum generate_spectrum(const LorentzModel& model, const FrequencyGrid& grid,
                                      double noise_std_log, std::uint64_t seed) {
    if (noise_std_log < 0.0) throw DomainError("noise std must be nonnegative");
    model.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> kappa(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [eta, k] = lorentz_n(model, grid[i]);
        (void)eta;
        const double xi = noise_std_log > 0.0 ? noise_std_log * normal(rng) : 0.0;
        kappa[i] = std::exp(std::log(k) + xi);
    }
    return AttenuationSpectrum(grid, std::move(kappa));
}

double brute_force_pv(const std::vector<double>& omega, const std::vector<double>& values,
                      double pole_omega) {
    if (omega.size() < 16 || omega.size() != values.size())
        throw DomainError("dense PV grid too small or mismatched");
    const double h = omega[1] - omega[0];
    const double pos = (pole_omega - omega.front()) / h;
    const long p = std::lround(pos);
    if (p < 0 || p >= static_cast<long>(omega.size()) ||
        std::abs(omega[static_cast<std::size_t>(p)] - pole_omega) > 1e-9 * h)
        throw AlignmentError("brute-force PV pole must sit on a dense-grid node");

    // trapezoid away from the pole, plus the symmetric window [p-h, p+h]
    // integrated as int_0^h s(t) dt with s(t) = f(p+t) + f(p-t)
    double sum = 0.0;
    for (long j = 0; j + 1 < static_cast<long>(omega.size()); ++j) {
        if (j == p - 1 || j == p) continue;
        sum += 0.5 * h * (values[static_cast<std::size_t>(j)] + values[static_cast<std::size_t>(j + 1)]);
    }
    auto sym = [&](long k) -> double {
        const long lo = p - k, hi = p + k;
        const double left = (lo >= 0) ? values[static_cast<std::size_t>(lo)] : 0.0;
        const double right = (hi < static_cast<long>(omega.size()))
                                 ? values[static_cast<std::size_t>(hi)]
                                 : 0.0;
        return left + right;
    };
    if (p > 1 && p + 2 < static_cast<long>(omega.size())) {
        const double s1 = sym(1);
        const double s0 = 2.0 * s1 - sym(2); // extrapolated regular part at the pole
        sum += 0.5 * h * (s0 + s1);
    }
    return sum;
}

} // namespace kkmoe::synth
