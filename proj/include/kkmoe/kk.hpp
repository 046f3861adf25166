#pragma once

#include <optional>
#include <vector>

#include "kkmoe/errors.hpp"
#include "kkmoe/spectrum.hpp"

namespace kkmoe::kk {

/// Uniform grid with integrand values at the nodes. Principal-value poles
/// must sit on nodes.
class PVGrid {
public:
    PVGrid(std::vector<double> omega, std::vector<double> values);

    const std::vector<double>& omega() const { return omega_; }
    const std::vector<double>& values() const { return values_; }
    double spacing() const { return h_; }
    std::size_t size() const { return omega_.size(); }

    /// Index of the node matching omega_value, else AlignmentError.
    std::size_t node_index(double omega_value) const;
    /// Index of the node closest to omega_value.
    std::size_t nearest_node(double omega_value) const;

private:
    std::vector<double> omega_;
    std::vector<double> values_;
    double h_;
};

enum class KKMethod { Standard, SinglySubtractive };

struct KKResult {
    std::vector<double> omega;
    std::vector<double> eta;
    KKMethod method = KKMethod::Standard;
    std::optional<AnchorPoint> anchor;    // snapped, if sskk
    double anchor_snap_distance = 0.0;    // |requested - snapped| in eV
};

/// Maclaurin alternating-node principal-value quadrature: 2h * sum of the
/// integrand over nodes of opposite parity to the pole node.
double pv_quadrature(const PVGrid& grid, double pole_omega);

/// eta(w) = 1 + (2/pi) PV int w' kappa(w') / (w'^2 - w^2) dw'.
KKResult kk_eta(const PVGrid& kappa_grid, const std::vector<double>& omega_eval);

/// kappa(w) = -(2w/pi) PV int (eta(w') - 1) / (w'^2 - w^2) dw'.
std::vector<double> kk_kappa(const PVGrid& eta_minus_one_grid, const std::vector<double>& omega_eval);

/// Singly-subtractive transform anchored at (omega_a, eta_a). The anchor is
/// snapped to the nearest node; evaluation nodes within 2h of the anchor are
/// filled by linear interpolation across the gap.
KKResult sskk_eta(const PVGrid& kappa_grid, const AnchorPoint& anchor,
                  const std::vector<double>& omega_eval);

} // namespace kkmoe::kk
