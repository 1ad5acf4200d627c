#pragma once

#include <span>
#include <vector>

namespace uavnet {

/// Risk sensitivity knobs with mu = -2*beta pinned.
struct RiskConfig {
    double mu = 0.0;    // <= 0
    double beta = 0.0;  // >= 0

    static RiskConfig from_mu(double mu);
    static RiskConfig from_beta(double beta);
};

/// (1/mu)·log(mean_n exp(mu·S[n])) for mu < 0, computed with a max-shift;
/// the analytic limit mean_n S[n] for mu = 0.
double exp_utility(std::span<const double> per_slot_sums, double mu);

/// Softmax weights w[n] = exp(mu·S[n]) / Σ_j exp(mu·S[j]) (uniform at mu = 0);
/// these are the per-slot sensitivities dG/dS[n] of exp_utility.
std::vector<double> exp_utility_weights(std::span<const double> per_slot_sums, double mu);

/// Σ_k ( mean_n R_k[n] − beta·var_n R_k[n] ), population variance.
/// `rates` is (user, slot) row-major with n_users rows.
double utility_F(std::span<const double> rates, std::size_t n_users, std::size_t n_slots,
                 double beta);

/// |exp_utility − (mean + (mu/2)·var)| of the sequence; requires mu < 0.
double taylor_residual(std::span<const double> per_slot_sums, double mu);

/// (Σx)² / (K·Σx²); throws on empty or all-zero input ("fairness undefined").
double jain_index(std::span<const double> values);

double population_mean(std::span<const double> values);
double population_variance(std::span<const double> values);

/// Population variance of the per-slot sum rate.
double sum_rate_variance(std::span<const double> per_slot_sums);

}  // namespace uavnet
