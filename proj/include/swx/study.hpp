#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace swx {

enum class Method { crt_total, frt_sharp, ht_asymptotic, crt_carryover, pirt, sequential_m };

std::string to_string(Method m);
Method parse_method(const std::string& text);

// ---------------------------------------------------------------------------
// StudyConfig: Monte Carlo grid. Scenarios: total, carryover, anticipation,
// sequential. Each replication draws one path from the optimal design with
// horizon T and the configured m, simulates outcomes once and applies every
// method to them.
// ---------------------------------------------------------------------------
struct StudyConfig {
    std::vector<std::string> scenarios{"total"};
    std::vector<int> T_grid{60, 120};
    int m = 2;
    std::vector<double> delta_grid{0.0, 1.0, 2.0, 3.0};
    std::vector<std::string> noise_grid{"gaussian", "t1"};
    std::vector<Method> methods{Method::crt_total};
    int replications = 1000;
    std::size_t draws = 500;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int holdout = -1;  // -1 selects 2m + 1
    int m_max = 4;
};

// Throws std::invalid_argument naming the offending field.
void validate(const StudyConfig& c);
StudyConfig study_config_from_json(const nlohmann::json& j);

struct StudyRow {
    std::string scenario;
    int T = 0;
    double delta = 0.0;
    std::string noise;
    Method method = Method::crt_total;
    double rate = 0.0;
    double se = 0.0;
    int completed = 0;
    int failures = 0;
    std::string error;  // first failure message, if any
};

// Rejection rate per (scenario, T, delta, noise, method). For sequential_m a
// rejection means m_hat >= 1. Cell failures are recorded on the row.
std::vector<StudyRow> run_study(const StudyConfig& config);

// Long format: scenario,T,delta,noise,method,rate,se.
std::string study_csv(const std::vector<StudyRow>& rows);

// One SVG per (scenario, noise): rejection rate against T, a line per
// (method, delta). Returns the written paths.
std::vector<std::string> write_study_svgs(const std::vector<StudyRow>& rows, double alpha,
                                          const std::string& dir);

}  // namespace swx
