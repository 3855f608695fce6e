#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "swx/design.hpp"
#include "swx/report.hpp"
#include "swx/sections.hpp"

namespace swx {

enum class NoiseFamily { gaussian, t1 };
enum class TimeEffect { none, log_t };

std::string to_string(NoiseFamily n);
NoiseFamily parse_noise(const std::string& text);

// ---------------------------------------------------------------------------
// DgpSpec: outcome model
//
//   Y_t = mu + a_t + sum_p delta^(p) w_{t+1-p} + noise_t
//
// p = 1 is contemporaneous, p > 1 carryover, p <= 0 anticipation. With
// gate_noise the noise is eps_t * a_t * 1{w_{max(1,t-m):t} constant}; without
// it the noise is eps_t. eps follows AR(1) with coefficient ar_rho and
// innovation scale noise_scale, started from its stationary law.
// ---------------------------------------------------------------------------
struct DgpSpec {
    double mu = 0.0;
    TimeEffect time_effect = TimeEffect::log_t;
    std::map<int, double> lag_coeffs;
    NoiseFamily noise = NoiseFamily::gaussian;
    double noise_scale = 1.0;
    double ar_rho = 0.0;
    bool gate_noise = true;
    int m_indicator = 2;
};

// delta^(1..3) = delta, gate window m.
DgpSpec total_effect_dgp(double delta, NoiseFamily noise, int m = 2);
// delta^(4..6) = delta.
DgpSpec carryover_dgp(double delta, NoiseFamily noise, int m = 2);
// delta^(-2..0) = delta.
DgpSpec anticipation_dgp(double delta, NoiseFamily noise, int m = 2);
// delta^(1) = delta with a one-period gate, so no carryover at any horizon.
DgpSpec sequential_dgp(double delta, NoiseFamily noise);
// mu + sum_{l=0}^{m0} beta_l w_{t-l} + eps_t with Gaussian AR(1) eps.
DgpSpec distributed_lag_dgp(double mu, std::span<const double> beta, double rho,
                            double sigma_u);

double time_effect_at(const DgpSpec& dgp, Period t);

std::vector<double> draw_noise(const DgpSpec& dgp, int T, RngStream& stream);
double outcome_at(const DgpSpec& dgp, const AssignmentPath& path, std::span<const double> eps,
                  Period t);
std::vector<double> outcomes_from_noise(const DgpSpec& dgp, const AssignmentPath& path,
                                        std::span<const double> eps);
std::vector<double> simulate_outcomes(const DgpSpec& dgp, const AssignmentPath& path,
                                      RngStream& stream);

// ---------------------------------------------------------------------------
// Comparators
// ---------------------------------------------------------------------------

// Fisher test under a sharp null: full paths from the design, outcomes held
// fixed, sections and focal sets recomputed per draw. A draw without focal
// units scores 0.
TestReport frt_sharp_test(std::span<const double> y, const AssignmentPath& observed,
                          const SwitchbackDesign& design, int m, const McOptions& opts = {});

struct AsymptoticResult {
    bool reject = false;
    double estimate = 0.0;
    double variance = 0.0;
    double statistic = 0.0;
    bool degenerate = false;
};

// HT estimate over constant-section focal means, V_up studentizer, one-sided
// normal critical value.
AsymptoticResult ht_asymptotic_test(std::span<const double> y, const AssignmentPath& observed,
                                    const SwitchbackDesign& design, int m, double alpha);

// ---------------------------------------------------------------------------
// Power simulations on equal-length block designs pooled r at a time
// ---------------------------------------------------------------------------
struct PooledSetup {
    int L = 1;
    int r = 1;
    int m = 0;
    int M_blocks = 1;
    double q = 0.5;
};

struct EmpiricalPower {
    double rate = 0.0;
    double se = 0.0;
    int reps = 0;
};

// One-sided studentized total-effect CRT, rejection at p <= alpha.
EmpiricalPower empirical_power_total(const DgpSpec& dgp, const PooledSetup& setup, int reps,
                                     std::size_t draws, double alpha, std::uint64_t seed);
// One-sided studentized carryover CRT on the pooled family.
EmpiricalPower empirical_power_carryover(const DgpSpec& dgp, const PooledSetup& setup, int reps,
                                         std::size_t draws, double alpha, std::uint64_t seed);

}  // namespace swx
