#include "kkmoe/kk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kkmoe::kk {

PVGrid::PVGrid(std::vector<double> omega, std::vector<double> values)
    : omega_(std::move(omega)), values_(std::move(values)) {
    if (omega_.size() < 8) throw DomainError("PV grid needs at least 8 nodes");
    if (values_.size() != omega_.size()) throw DomainError("PV grid value/node mismatch");
    h_ = omega_[1] - omega_[0];
    if (!(h_ > 0.0)) throw DomainError("PV grid must be increasing");
    for (std::size_t i = 1; i < omega_.size(); ++i) {
        if (std::abs((omega_[i] - omega_[i - 1]) - h_) > 1e-9 * h_)
            throw DomainError("PV grid must be uniform");
    }
}

std::size_t PVGrid::nearest_node(double omega_value) const {
    const double pos = (omega_value - omega_.front()) / h_;
    const long idx = std::lround(pos);
    return static_cast<std::size_t>(std::clamp(idx, 0L, static_cast<long>(omega_.size()) - 1));
}

std::size_t PVGrid::node_index(double omega_value) const {
    const std::size_t idx = nearest_node(omega_value);
    if (std::abs(omega_[idx] - omega_value) > 1e-9 * h_)
        throw AlignmentError("pole at " + std::to_string(omega_value) +
                             " does not coincide with a grid node");
    return idx;
}

double pv_quadrature(const PVGrid& grid, double pole_omega) {
    const std::size_t pole = grid.node_index(pole_omega);
    const auto& values = grid.values();
    double sum = 0.0;
    // opposite parity to the pole node; the singular node is skipped symmetrically
    for (std::size_t j = (pole % 2 == 0) ? 1 : 0; j < values.size(); j += 2)
        sum += values[j];
    return 2.0 * grid.spacing() * sum;
}

namespace {

// Alternating-node sum for f_j / (w_j^2 - w_m^2), with f given at nodes.
double kk_pv_at_node(const std::vector<double>& omega, const std::vector<double>& numer,
                     std::size_t m, double h) {
    const double wm2 = omega[m] * omega[m];
    double sum = 0.0;
    for (std::size_t j = (m % 2 == 0) ? 1 : 0; j < omega.size(); j += 2)
        sum += numer[j] / (omega[j] * omega[j] - wm2);
    return 2.0 * h * sum;
}

} // namespace

KKResult kk_eta(const PVGrid& kappa_grid, const std::vector<double>& omega_eval) {
    const auto& omega = kappa_grid.omega();
    const auto& kappa = kappa_grid.values();
    std::vector<double> numer(omega.size());
    for (std::size_t j = 0; j < omega.size(); ++j) numer[j] = omega[j] * kappa[j];

    KKResult result;
    result.method = KKMethod::Standard;
    result.omega = omega_eval;
    result.eta.resize(omega_eval.size());
    for (std::size_t e = 0; e < omega_eval.size(); ++e) {
        const std::size_t m = kappa_grid.node_index(omega_eval[e]);
        result.eta[e] = 1.0 + (2.0 / std::numbers::pi) *
                                  kk_pv_at_node(omega, numer, m, kappa_grid.spacing());
    }
    return result;
}

std::vector<double> kk_kappa(const PVGrid& eta_minus_one_grid, const std::vector<double>& omega_eval) {
    const auto& omega = eta_minus_one_grid.omega();
    const auto& values = eta_minus_one_grid.values();
    std::vector<double> out(omega_eval.size());
    for (std::size_t e = 0; e < omega_eval.size(); ++e) {
        const std::size_t m = eta_minus_one_grid.node_index(omega_eval[e]);
        out[e] = -(2.0 * omega[m] / std::numbers::pi) *
                 kk_pv_at_node(omega, values, m, eta_minus_one_grid.spacing());
    }
    return out;
}

KKResult sskk_eta(const PVGrid& kappa_grid, const AnchorPoint& anchor,
                  const std::vector<double>& omega_eval) {
    const auto& omega = kappa_grid.omega();
    const auto& kappa = kappa_grid.values();
    const double h = kappa_grid.spacing();
    if (anchor.omega <= omega.front() || anchor.omega >= omega.back())
        throw DomainError("anchor frequency lies outside the PV grid");

    const std::size_t a = kappa_grid.nearest_node(anchor.omega);
    const double wa = omega[a];
    const double wa2 = wa * wa;

    // eta at one node; the anchor node and parity-excluded nodes are skipped
    auto eta_at = [&](std::size_t m) {
        if (m == a) return anchor.eta;
        const double wm2 = omega[m] * omega[m];
        double sum = 0.0;
        for (std::size_t j = (m % 2 == 0) ? 1 : 0; j < omega.size(); j += 2) {
            if (j == a) continue;
            const double wj2 = omega[j] * omega[j];
            sum += omega[j] * kappa[j] / ((wj2 - wm2) * (wj2 - wa2));
        }
        return anchor.eta + (2.0 * (wm2 - wa2) / std::numbers::pi) * 2.0 * h * sum;
    };

    KKResult result;
    result.method = KKMethod::SinglySubtractive;
    result.anchor = AnchorPoint{wa, anchor.eta};
    result.anchor_snap_distance = std::abs(anchor.omega - wa);
    result.omega = omega_eval;
    result.eta.resize(omega_eval.size());
    for (std::size_t e = 0; e < omega_eval.size(); ++e) {
        const std::size_t m = kappa_grid.node_index(omega_eval[e]);
        const long offset = static_cast<long>(m) - static_cast<long>(a);
        if (offset != 0 && std::labs(offset) <= 2) {
            // near the double pole: interpolate between the anchor value and
            // the first node outside the 2h exclusion zone
            const long dir = offset > 0 ? 1 : -1;
            long support = static_cast<long>(a) + 3 * dir;
            support = std::clamp(support, 0L, static_cast<long>(omega.size()) - 1);
            if (std::labs(support - static_cast<long>(a)) < 3) {
                result.eta[e] = anchor.eta; // anchor too close to the boundary to bracket
                continue;
            }
            const double eta_support = eta_at(static_cast<std::size_t>(support));
            const double t = static_cast<double>(std::labs(offset)) / 3.0;
            result.eta[e] = anchor.eta + t * (eta_support - anchor.eta);
        } else {
            result.eta[e] = eta_at(m);
        }
    }
    return result;
}

} // namespace kkmoe::kk
