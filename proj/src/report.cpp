#include "swx/report.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace swx {

std::string to_string(Sidedness s) { return s == Sidedness::upper ? "upper" : "two-sided"; }

Sidedness parse_sidedness(const std::string& text) {
    if (text == "upper") return Sidedness::upper;
    if (text == "two-sided" || text == "two_sided" || text == "two") return Sidedness::two_sided;
    throw std::invalid_argument("unknown sidedness '" + text + "' (use upper or two-sided)");
}

double mc_p_value(std::size_t count, std::size_t draws) {
    return static_cast<double>(count + 1) / static_cast<double>(draws + 1);
}

bool exceeds(double t, double obs, Sidedness s) noexcept {
    if (s == Sidedness::two_sided) return std::fabs(t) >= std::fabs(obs);
    return t >= obs;
}

TestReport degenerate_report(std::string name, std::string reason, std::size_t draws,
                             Sidedness s, std::uint64_t seed) {
    TestReport r;
    r.test_name = std::move(name);
    r.statistic_obs = 0.0;
    r.p_value = 1.0;
    r.draws = draws;
    r.sidedness = s;
    r.degenerate = true;
    r.degenerate_reason = std::move(reason);
    r.seed = seed;
    return r;
}

namespace {

nlohmann::ordered_json finite_or_string(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

}  // namespace

nlohmann::ordered_json report_to_json(const TestReport& r) {
    nlohmann::ordered_json j;
    j["test"] = r.test_name;
    j["statistic"] = finite_or_string(r.statistic_obs);
    j["p_value"] = r.p_value;
    j["draws"] = r.draws;
    j["exceed_count"] = r.exceed_count;
    j["sidedness"] = to_string(r.sidedness);
    j["focal_count"] = r.focal_count;
    j["degenerate"] = r.degenerate;
    if (r.degenerate) j["degenerate_reason"] = r.degenerate_reason;
    j["seed"] = r.seed;
    j["version"] = kVersion;
    return j;
}

}  // namespace swx
