#include "swx/design.hpp"

#include <algorithm>
#include <sstream>

namespace swx {

std::vector<std::string> design_violations(const SwitchbackDesign& design) {
    std::vector<std::string> out;
    if (design.horizon <= 0) {
        out.push_back("T must be positive (got " + std::to_string(design.horizon) + ")");
    }
    const auto& st = design.switch_times;
    if (st.empty()) {
        out.emplace_back("switch_times must not be empty");
    } else if (st.front() != 1) {
        out.push_back("switch_times[0] must be 1 (got " + std::to_string(st.front()) + ")");
    }
    for (std::size_t i = 1; i < st.size(); ++i) {
        if (st[i] <= st[i - 1]) {
            out.push_back("switch_times not strictly increasing at index " + std::to_string(i) +
                          " (" + std::to_string(st[i - 1]) + " then " + std::to_string(st[i]) +
                          ")");
        }
    }
    for (std::size_t i = 0; i < st.size(); ++i) {
        if (design.horizon > 0 && st[i] > design.horizon) {
            out.push_back("switch_times[" + std::to_string(i) + "]=" + std::to_string(st[i]) +
                          " exceeds T=" + std::to_string(design.horizon));
        }
    }
    if (design.block_probs.size() != st.size()) {
        out.push_back("block_probs has " + std::to_string(design.block_probs.size()) +
                      " entries but there are " + std::to_string(st.size()) + " blocks");
    }
    for (std::size_t i = 0; i < design.block_probs.size(); ++i) {
        const double q = design.block_probs[i];
        if (!(q > 0.0 && q < 1.0)) {
            std::ostringstream msg;
            msg << "block_probs[" << i << "]=" << q << " is not in the open interval (0, 1)";
            out.push_back(msg.str());
        }
    }
    return out;
}

void validate(const SwitchbackDesign& design) {
    const auto problems = design_violations(design);
    if (problems.empty()) return;
    std::string msg = "invalid switchback design:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw DesignError(msg);
}

int block_of(const SwitchbackDesign& design, Period t) {
    if (t < 1 || t > design.horizon) {
        throw std::out_of_range("block_of: period " + std::to_string(t) + " outside [1, " +
                                std::to_string(design.horizon) + "]");
    }
    const auto it = std::upper_bound(design.switch_times.begin(), design.switch_times.end(), t);
    return static_cast<int>(it - design.switch_times.begin()) - 1;
}

AssignmentPath sample_assignment(const SwitchbackDesign& design, RngStream& stream) {
    AssignmentPath path(std::vector<std::uint8_t>(static_cast<std::size_t>(design.horizon), 0));
    for (int k = 0; k < design.num_blocks(); ++k) {
        const std::uint8_t label = draw_bernoulli(stream, design.block_prob(k)) ? 1 : 0;
        std::fill(path.w.begin() + design.block_start(k) - 1,
                  path.w.begin() + design.block_end(k), label);
    }
    return path;
}

std::optional<Period> first_block_violation(const SwitchbackDesign& design,
                                            const AssignmentPath& path) {
    for (int k = 0; k < design.num_blocks(); ++k) {
        const auto head = path.at(design.block_start(k));
        for (Period t = design.block_start(k) + 1; t <= design.block_end(k); ++t) {
            if (path.at(t) != head) return t;
        }
    }
    return std::nullopt;
}

SwitchbackDesign optimal_regular_design(int n, int m) {
    if (n < 3) throw std::domain_error("optimal_regular_design: n must be >= 3");
    if (m < 1) throw std::domain_error("optimal_regular_design: m must be >= 1");
    SwitchbackDesign d;
    d.horizon = n * m;
    d.switch_times.push_back(1);
    for (int k = 2; k <= n - 2; ++k) d.switch_times.push_back(k * m + 1);
    d.block_probs.assign(d.switch_times.size(), 0.5);
    return d;
}

SwitchbackDesign uniform_block_design(int num_blocks, int block_length, double q) {
    if (num_blocks < 1 || block_length < 1) {
        throw std::domain_error("uniform_block_design: need at least one block of length >= 1");
    }
    SwitchbackDesign d;
    d.horizon = num_blocks * block_length;
    for (int k = 0; k < num_blocks; ++k) d.switch_times.push_back(k * block_length + 1);
    d.block_probs.assign(static_cast<std::size_t>(num_blocks), q);
    return d;
}

nlohmann::ordered_json design_to_json(const SwitchbackDesign& design) {
    nlohmann::ordered_json j;
    j["T"] = design.horizon;
    j["switch_times"] = design.switch_times;
    j["block_probs"] = design.block_probs;
    return j;
}

SwitchbackDesign design_from_json(const nlohmann::json& j) {
    SwitchbackDesign d;
    try {
        d.horizon = j.at("T").get<int>();
        d.switch_times = j.at("switch_times").get<std::vector<int>>();
        d.block_probs = j.at("block_probs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DesignError(std::string("design JSON: ") + e.what());
    }
    return d;
}

std::string serialize_design(const SwitchbackDesign& design) {
    return design_to_json(design).dump();
}

SwitchbackDesign parse_design(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DesignError(std::string("design JSON: ") + e.what());
    }
    return design_from_json(j);
}

}  // namespace swx
