#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kkmoe/errors.hpp"

namespace kkmoe {

/// hc in eV*nm, used for all wavelength <-> photon energy conversions.
inline constexpr double kPlanckEvNm = 1239.84193;

enum class SourceUnits { EvKappa, NmKappa, NmAbsorbance };

SourceUnits parse_source_units(const std::string& name);
std::string to_string(SourceUnits units);

/// Strictly increasing photon-energy grid (eV).
class FrequencyGrid {
public:
    explicit FrequencyGrid(std::vector<double> values,
                           std::optional<double> uniform_spacing = std::nullopt);

    const std::vector<double>& values() const { return values_; }
    std::optional<double> uniform_spacing() const { return uniform_spacing_; }
    std::size_t size() const { return values_.size(); }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
    std::optional<double> uniform_spacing_;
};

/// Measured (omega, kappa) pairs with cached log-attenuation.
/// Entries with kappa <= 0 are kept but excluded from log-domain fitting.
class AttenuationSpectrum {
public:
    AttenuationSpectrum(FrequencyGrid grid, std::vector<double> kappa,
                        SourceUnits source_units = SourceUnits::EvKappa);

    const FrequencyGrid& grid() const { return grid_; }
    const std::vector<double>& kappa() const { return kappa_; }
    SourceUnits source_units() const { return source_units_; }
    std::size_t size() const { return kappa_.size(); }

    /// log kappa where kappa > 0; unset (and flagged) elsewhere.
    const std::vector<std::optional<double>>& log_kappa() const { return log_kappa_; }
    std::size_t n_log_valid() const { return n_log_valid_; }

    /// (omega_i, log kappa_i) restricted to the log-domain-valid entries.
    std::pair<std::vector<double>, std::vector<double>> log_points() const;

private:
    FrequencyGrid grid_;
    std::vector<double> kappa_;
    std::vector<std::optional<double>> log_kappa_;
    std::size_t n_log_valid_ = 0;
    SourceUnits source_units_;
};

struct DataRanges {
    double delta_gamma; // max log kappa - min log kappa
    double delta_omega; // max omega - min omega
};

struct AnchorPoint {
    double omega; // eV
    double eta;   // dimensionless
};

struct AnchorDistribution {
    double omega_mean = 0.0;
    double omega_std = 0.0;
    double eta_mean = 0.0;
    double eta_std = 0.0;
    bool fixed = false;

    void validate() const;
};

double convert_wavelength_to_energy(double lambda_nm);
double convert_energy_to_wavelength(double energy_ev);

/// Beer-Lambert: alpha = ln(10) A / d, kappa = alpha lambda / (4 pi).
double absorbance_to_kappa(double absorbance, double thickness_cm, double lambda_nm);

/// Two numeric columns; '#' comments and an optional non-numeric header allowed.
/// Output is sorted ascending in eV regardless of file or unit order.
AttenuationSpectrum load_spectrum(const std::string& path, SourceUnits units,
                                  double thickness_cm = 0.0);

void save_spectrum(const std::string& path, const AttenuationSpectrum& spectrum);

/// Linear interpolation of kappa onto a uniform n-point grid over [min, max] omega.
AttenuationSpectrum resample_uniform(const AttenuationSpectrum& spectrum, std::size_t n_points);

DataRanges data_ranges(const AttenuationSpectrum& spectrum);

/// Least-squares quartic over the baseline windows, subtracted everywhere;
/// results below floor_kappa are clipped up to it.
AttenuationSpectrum remove_background(const AttenuationSpectrum& spectrum,
                                      const std::vector<std::pair<double, double>>& baseline_windows,
                                      double floor_kappa = 1e-8);

} // namespace kkmoe
