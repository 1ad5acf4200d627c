#include "uavnet/risk_utility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavnet {

RiskConfig RiskConfig::from_mu(double mu) {
    if (mu > 0.0) throw std::invalid_argument("risk mu must be <= 0");
    return {mu, -0.5 * mu};
}

RiskConfig RiskConfig::from_beta(double beta) {
    if (beta < 0.0) throw std::invalid_argument("risk beta must be >= 0");
    return {-2.0 * beta, beta};
}

double population_mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of empty sequence");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
    double m = population_mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size());
}

double exp_utility(std::span<const double> per_slot_sums, double mu) {
    if (per_slot_sums.empty()) throw std::invalid_argument("exp_utility of empty sequence");
    if (mu > 0.0) throw std::invalid_argument("exp_utility requires mu <= 0");
    if (mu == 0.0) return population_mean(per_slot_sums);

    // max of mu*S, attained at the smallest slot sum for mu < 0
    double shift = mu * *std::min_element(per_slot_sums.begin(), per_slot_sums.end());
    double acc = 0.0;
    for (double s : per_slot_sums) acc += std::exp(mu * s - shift);
    return (shift + std::log(acc / static_cast<double>(per_slot_sums.size()))) / mu;
}

std::vector<double> exp_utility_weights(std::span<const double> per_slot_sums, double mu) {
    const std::size_t n = per_slot_sums.size();
    if (n == 0) throw std::invalid_argument("weights of empty sequence");
    std::vector<double> w(n);
    if (mu == 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
        return w;
    }
    double shift = mu * *std::min_element(per_slot_sums.begin(), per_slot_sums.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(mu * per_slot_sums[i] - shift);
        acc += w[i];
    }
    for (double& x : w) x /= acc;
    return w;
}

double utility_F(std::span<const double> rates, std::size_t n_users, std::size_t n_slots,
                 double beta) {
    if (n_users == 0 || n_slots == 0 || rates.size() != n_users * n_slots)
        throw std::invalid_argument("utility_F: empty or mismatched rate table");
    double total = 0.0;
    for (std::size_t k = 0; k < n_users; ++k) {
        auto row = rates.subspan(k * n_slots, n_slots);
        total += population_mean(row) - beta * population_variance(row);
    }
    return total;
}

double taylor_residual(std::span<const double> per_slot_sums, double mu) {
    if (!(mu < 0.0)) throw std::invalid_argument("taylor_residual requires mu < 0");
    double expansion = population_mean(per_slot_sums) +
                       0.5 * mu * population_variance(per_slot_sums);
    return std::abs(exp_utility(per_slot_sums, mu) - expansion);
}

double jain_index(std::span<const double> values) {
    double sum = 0.0, sum_sq = 0.0;
    for (double v : values) {
        sum += v;
        sum_sq += v * v;
    }
    if (values.empty() || sum_sq == 0.0)
        throw std::invalid_argument("fairness undefined for all-zero input");
    return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

double sum_rate_variance(std::span<const double> per_slot_sums) {
    return population_variance(per_slot_sums);
}

}  // namespace uavnet
