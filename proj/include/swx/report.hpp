#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace swx {

inline constexpr const char* kVersion = "0.1.0";

enum class Sidedness { upper, two_sided };

std::string to_string(Sidedness s);
Sidedness parse_sidedness(const std::string& text);

// ---------------------------------------------------------------------------
// TestReport: uniform output of every randomization test.
// p_value = (count + 1) / (draws + 1); degenerate reports carry p = 1.
// ---------------------------------------------------------------------------
struct TestReport {
    std::string test_name;
    double statistic_obs = 0.0;
    double p_value = 1.0;
    std::size_t draws = 0;
    std::size_t exceed_count = 0;
    Sidedness sidedness = Sidedness::upper;
    std::size_t focal_count = 0;
    bool degenerate = false;
    std::string degenerate_reason;
    std::uint64_t seed = 0;
};

// Monte Carlo settings shared by tests that only need a draw count, a side
// and a seed.
struct McOptions {
    std::size_t draws = 500;
    Sidedness sidedness = Sidedness::upper;
    std::uint64_t seed = 0;
};

double mc_p_value(std::size_t count, std::size_t draws);

// Upper: t >= obs. Two-sided: |t| >= |obs|. Infinite values compare as usual.
bool exceeds(double t, double obs, Sidedness s) noexcept;

TestReport degenerate_report(std::string name, std::string reason, std::size_t draws,
                             Sidedness s, std::uint64_t seed);

nlohmann::ordered_json report_to_json(const TestReport& r);

}  // namespace swx
