#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "swx/simlab.hpp"

namespace swx {

enum class JtotMode { fixed, expected, binomial };

// ---------------------------------------------------------------------------
// PowerInputs: pooled-section setup with distributed-lag effects and AR(1)
// noise. beta[l] is the lag-l coefficient for l = 0..m0.
// ---------------------------------------------------------------------------
struct PowerInputs {
    double mu = 0.0;
    double tau_tot = 0.0;
    std::vector<double> beta;
    double rho = 0.0;
    double sigma_u = 1.0;
    double q = 0.5;
    int L = 1;
    int r = 1;
    int m = 0;
    int m0 = 0;
    int M_blocks = 1;
    double alpha = 0.05;
    JtotMode jtot_mode = JtotMode::expected;
    double J_tot = 0.0;  // used when jtot_mode == fixed
};

// Throws std::domain_error naming the violated condition.
void validate(const PowerInputs& in);
PowerInputs power_inputs_from_json(const nlohmann::json& j);

double pooled_prob(int r, double q);
double constancy_prob(int r, double q);
double ar1_marginal_variance(double sigma_u, double rho);
double ar1_mean_variance(int n, double rho, double sigma_eps_sq);

struct TotalPower {
    double power = 0.0;
    double p = 0.0;
    double pi_r = 0.0;
    int n = 0;
    int J = 0;
    double J_tot = 0.0;
    double sigma_bar_sq = 0.0;
    double mu_tot = 0.0;
    double sigma_tot_sq = 0.0;
};

// Normal approximation at a given number of usable sections.
TotalPower power_total(const PowerInputs& in, double J_tot);
// J_tot from the inputs' mode: fixed, J * pi_r(q), or a Binomial(J, pi_r)
// average in which J_tot = 0 contributes zero power.
TotalPower power_total(const PowerInputs& in);

// (1/n) sum_{l=m+1}^{m0} min(L, l - m) beta_l with n = rL - m.
double delta_tail(int m, int m0, int L, int r, std::span<const double> beta);

struct CarryMoments {
    double e_y1_sq = 0.0;
    double e_y0_sq = 0.0;
    double e_y1_y0 = 0.0;
    double mean_diff = 0.0;
    double mean_diff_se = 0.0;
    int samples = 0;
};

struct CarryPower {
    double power = 0.0;
    double delta = 0.0;
    int n = 0;
    int J_e = 0;
    double v_up = 0.0;
    double sigma_delta_sq = 0.0;
    double mu_m = 0.0;
    double sigma_m_sq = 0.0;
};

CarryPower power_carryover(double q, double alpha, const CarryMoments& moments, double delta,
                           int J);
// delta from delta_tail and J = M_blocks / r.
CarryPower power_carryover(const PowerInputs& in, const CarryMoments& moments);

// Counterfactual even-section focal means with the last block of the
// preceding odd section forced to 1 and to 0, sharing noise and all other
// block draws. Averages over every pair of the pooled design and n_sims
// replications.
CarryMoments estimate_carry_moments(const DgpSpec& dgp, const PooledSetup& setup, int n_sims,
                                    std::uint64_t seed);

nlohmann::ordered_json to_json(const TotalPower& p);
nlohmann::ordered_json to_json(const CarryPower& p);
nlohmann::ordered_json to_json(const CarryMoments& m);

}  // namespace swx
