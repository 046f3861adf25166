#include "kkmoe/spectrum.hpp"

#include "kkmoe/csv.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace kkmoe {

SourceUnits parse_source_units(const std::string& name) {
    if (name == "ev_kappa") return SourceUnits::EvKappa;
    if (name == "nm_kappa") return SourceUnits::NmKappa;
    if (name == "nm_absorbance") return SourceUnits::NmAbsorbance;
    throw ConfigurationError("unknown source units: " + name);
}

std::string to_string(SourceUnits units) {
    switch (units) {
        case SourceUnits::EvKappa: return "ev_kappa";
        case SourceUnits::NmKappa: return "nm_kappa";
        case SourceUnits::NmAbsorbance: return "nm_absorbance";
    }
    return "?";
}

FrequencyGrid::FrequencyGrid(std::vector<double> values, std::optional<double> uniform_spacing)
    : values_(std::move(values)), uniform_spacing_(uniform_spacing) {
    if (values_.empty()) throw DomainError("frequency grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0))
            throw DomainError("photon energy must be positive, got " + std::to_string(values_[i]));
        if (i > 0 && !(values_[i] > values_[i - 1]))
            throw DomainError("frequency grid must be strictly increasing");
    }
    if (uniform_spacing_) {
        const double h = *uniform_spacing_;
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (std::abs((values_[i] - values_[i - 1]) - h) >= 1e-9 * h)
                throw DomainError("grid spacing deviates from declared uniform spacing");
        }
    }
}

AttenuationSpectrum::AttenuationSpectrum(FrequencyGrid grid, std::vector<double> kappa,
                                         SourceUnits source_units)
    : grid_(std::move(grid)), kappa_(std::move(kappa)), source_units_(source_units) {
    if (kappa_.size() != grid_.size())
        throw DomainError("kappa and grid length mismatch");
    if (kappa_.size() < 4)
        throw DomainError("spectrum needs at least 4 points");
    log_kappa_.resize(kappa_.size());
    for (std::size_t i = 0; i < kappa_.size(); ++i) {
        if (kappa_[i] > 0.0) {
            log_kappa_[i] = std::log(kappa_[i]);
            ++n_log_valid_;
        }
    }
}

std::pair<std::vector<double>, std::vector<double>> AttenuationSpectrum::log_points() const {
    std::vector<double> omega, gamma;
    omega.reserve(n_log_valid_);
    gamma.reserve(n_log_valid_);
    for (std::size_t i = 0; i < kappa_.size(); ++i) {
        if (log_kappa_[i]) {
            omega.push_back(grid_[i]);
            gamma.push_back(*log_kappa_[i]);
        }
    }
    return {std::move(omega), std::move(gamma)};
}

void AnchorDistribution::validate() const {
    if (omega_std < 0.0 || eta_std < 0.0)
        throw ConfigurationError("anchor stds must be nonnegative");
    if (fixed && (omega_std != 0.0 || eta_std != 0.0))
        throw ConfigurationError("fixed anchor requires zero stds");
    if (!(omega_mean > 0.0)) throw ConfigurationError("anchor omega must be positive");
    if (!(eta_mean > 0.0)) throw ConfigurationError("anchor eta must be positive");
}

double convert_wavelength_to_energy(double lambda_nm) {
    if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");
    return kPlanckEvNm / lambda_nm;
}

double convert_energy_to_wavelength(double energy_ev) {
    if (!(energy_ev > 0.0)) throw DomainError("photon energy must be positive");
    return kPlanckEvNm / energy_ev;
}

double absorbance_to_kappa(double absorbance, double thickness_cm, double lambda_nm) {
    if (!(thickness_cm > 0.0)) throw DomainError("sample thickness must be positive");
    if (absorbance < 0.0) throw DomainError("absorbance must be nonnegative");
    if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");
    const double alpha = std::numbers::ln10 * absorbance / thickness_cm; // 1/cm
    const double lambda_cm = lambda_nm * 1e-7;
    return alpha * lambda_cm / (4.0 * std::numbers::pi);
}

namespace {

bool parse_double(std::string_view token, double& out) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t comma = line.find(',', start);
        std::string_view field = (comma == std::string_view::npos)
                                     ? line.substr(start)
                                     : line.substr(start, comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        if (!field.empty()) fields.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

} // namespace

AttenuationSpectrum load_spectrum(const std::string& path, SourceUnits units, double thickness_cm) {
    std::ifstream in(path);
    if (!in) throw MalformedInputError("cannot open " + path);

    std::vector<std::pair<double, double>> rows; // (abscissa in file units, ordinate)
    std::string line;
    std::size_t line_no = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++line_no;
        // whitespace- or comma-separated; '#' starts a comment
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string spaced = line;
        std::replace(spaced.begin(), spaced.end(), '\t', ' ');
        std::string_view view(spaced);
        std::vector<std::string_view> fields;
        if (spaced.find(',') != std::string::npos) {
            fields = split_fields(view);
        } else {
            std::size_t pos = 0;
            while (pos < view.size()) {
                while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\r')) ++pos;
                std::size_t end = pos;
                while (end < view.size() && view[end] != ' ' && view[end] != '\r') ++end;
                if (end > pos) fields.push_back(view.substr(pos, end - pos));
                pos = end;
            }
        }
        if (fields.empty()) continue;
        double x, y;
        if (fields.size() != 2 || !parse_double(fields[0], x) || !parse_double(fields[1], y)) {
            if (header_allowed) { // one non-numeric header row is tolerated
                header_allowed = false;
                continue;
            }
            throw MalformedInputError(path + ":" + std::to_string(line_no) +
                                      ": expected two numeric columns");
        }
        header_allowed = false;
        rows.emplace_back(x, y);
    }
    if (rows.size() < 4)
        throw MalformedInputError(path + ": need at least 4 data rows, got " +
                                  std::to_string(rows.size()));

    std::vector<std::pair<double, double>> converted; // (eV, kappa)
    converted.reserve(rows.size());
    for (const auto& [x, y] : rows) {
        switch (units) {
            case SourceUnits::EvKappa:
                if (!(x > 0.0)) throw DomainError(path + ": non-positive photon energy");
                converted.emplace_back(x, y);
                break;
            case SourceUnits::NmKappa:
                converted.emplace_back(convert_wavelength_to_energy(x), y);
                break;
            case SourceUnits::NmAbsorbance:
                converted.emplace_back(convert_wavelength_to_energy(x),
                                       absorbance_to_kappa(y, thickness_cm, x));
                break;
        }
    }
    std::sort(converted.begin(), converted.end());
    for (std::size_t i = 1; i < converted.size(); ++i) {
        if (converted[i].first == converted[i - 1].first)
            throw MalformedInputError(path + ": duplicate abscissa " +
                                      std::to_string(converted[i].first));
    }
    std::vector<double> omega(converted.size()), kappa(converted.size());
    for (std::size_t i = 0; i < converted.size(); ++i) {
        omega[i] = converted[i].first;
        kappa[i] = converted[i].second;
    }
    return AttenuationSpectrum(FrequencyGrid(std::move(omega)), std::move(kappa), units);
}

void save_spectrum(const std::string& path, const AttenuationSpectrum& spectrum) {
    write_csv(path, {"omega_ev", "kappa"}, {spectrum.grid().values(), spectrum.kappa()});
}

AttenuationSpectrum resample_uniform(const AttenuationSpectrum& spectrum, std::size_t n_points) {
    if (n_points < 4) throw DomainError("resample needs at least 4 points");
    const auto& omega = spectrum.grid().values();
    const auto& kappa = spectrum.kappa();
    const double lo = omega.front();
    const double hi = omega.back();
    const double h = (hi - lo) / static_cast<double>(n_points - 1);

    std::vector<double> new_omega(n_points), new_kappa(n_points);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n_points; ++i) {
        double w = (i + 1 == n_points) ? hi : lo + h * static_cast<double>(i);
        while (seg + 2 < omega.size() && omega[seg + 1] < w) ++seg;
        const double t = (w - omega[seg]) / (omega[seg + 1] - omega[seg]);
        new_omega[i] = w;
        new_kappa[i] = kappa[seg] + t * (kappa[seg + 1] - kappa[seg]);
    }
    return AttenuationSpectrum(FrequencyGrid(std::move(new_omega), h), std::move(new_kappa),
                               spectrum.source_units());
}

DataRanges data_ranges(const AttenuationSpectrum& spectrum) {
    if (spectrum.n_log_valid() < 2)
        throw DegenerateDataError("need at least 2 positive kappa entries");
    auto [omega, gamma] = spectrum.log_points();
    auto [gmin, gmax] = std::minmax_element(gamma.begin(), gamma.end());
    const double dg = *gmax - *gmin;
    const double dw = omega.back() - omega.front();
    if (!(dg > 0.0))
        throw DegenerateDataError("constant kappa: log-attenuation range is zero");
    if (!(dw > 0.0))
        throw DegenerateDataError("zero frequency range");
    return DataRanges{dg, dw};
}

AttenuationSpectrum remove_background(const AttenuationSpectrum& spectrum,
                                      const std::vector<std::pair<double, double>>& baseline_windows,
                                      double floor_kappa) {
    if (!(floor_kappa > 0.0)) throw ConfigurationError("background floor must be positive");
    const auto& omega = spectrum.grid().values();
    const auto& kappa = spectrum.kappa();

    std::vector<std::size_t> fit_idx;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        for (const auto& [a, b] : baseline_windows) {
            if (omega[i] >= a && omega[i] <= b) {
                fit_idx.push_back(i);
                break;
            }
        }
    }
    if (fit_idx.size() < 5)
        throw UnderdeterminedFitError("baseline windows cover " + std::to_string(fit_idx.size()) +
                                      " points, need >= 5 for a quartic fit");

    // Center and scale omega for a well-conditioned Vandermonde system.
    const double mid = 0.5 * (omega.front() + omega.back());
    const double half = 0.5 * (omega.back() - omega.front());
    Eigen::MatrixXd vand(fit_idx.size(), 5);
    Eigen::VectorXd rhs(fit_idx.size());
    for (std::size_t r = 0; r < fit_idx.size(); ++r) {
        const double u = (omega[fit_idx[r]] - mid) / half;
        double p = 1.0;
        for (int c = 0; c < 5; ++c) {
            vand(static_cast<Eigen::Index>(r), c) = p;
            p *= u;
        }
        rhs(static_cast<Eigen::Index>(r)) = kappa[fit_idx[r]];
    }
    Eigen::VectorXd coeff = vand.colPivHouseholderQr().solve(rhs);

    std::vector<double> out(kappa.size());
    for (std::size_t i = 0; i < kappa.size(); ++i) {
        const double u = (omega[i] - mid) / half;
        double baseline = 0.0, p = 1.0;
        for (int c = 0; c < 5; ++c) {
            baseline += coeff(c) * p;
            p *= u;
        }
        out[i] = std::max(kappa[i] - baseline, floor_kappa);
    }
    return AttenuationSpectrum(spectrum.grid(), std::move(out), spectrum.source_units());
}

} // namespace kkmoe
