#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "swx/numerics.hpp"

namespace swx {

// Periods are 1-indexed throughout: t in {1, ..., T}.
using Period = int;

class DesignError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// SwitchbackDesign: regular switchback: switch times t_0 = 1 < ... < t_K,
// block k covers [t_k, t_{k+1} - 1] with t_{K+1} = T + 1, and block k is
// treated independently with probability block_probs[k].
// ---------------------------------------------------------------------------
struct SwitchbackDesign {
    int horizon = 0;
    std::vector<Period> switch_times;
    std::vector<double> block_probs;

    int num_blocks() const noexcept { return static_cast<int>(switch_times.size()); }
    Period block_start(int k) const { return switch_times.at(static_cast<std::size_t>(k)); }
    Period block_end(int k) const {
        return k + 1 < num_blocks() ? switch_times[static_cast<std::size_t>(k) + 1] - 1
                                    : horizon;
    }
    int block_length(int k) const { return block_end(k) - block_start(k) + 1; }
    double block_prob(int k) const { return block_probs.at(static_cast<std::size_t>(k)); }

    bool operator==(const SwitchbackDesign&) const = default;
};

// ---------------------------------------------------------------------------
// AssignmentPath: binary treatment sequence; w[t - 1] is the label at t.
// ---------------------------------------------------------------------------
struct AssignmentPath {
    std::vector<std::uint8_t> w;

    AssignmentPath() = default;
    explicit AssignmentPath(std::vector<std::uint8_t> values) : w(std::move(values)) {}

    int size() const noexcept { return static_cast<int>(w.size()); }
    std::uint8_t at(Period t) const { return w.at(static_cast<std::size_t>(t - 1)); }
    void set(Period t, std::uint8_t v) { w.at(static_cast<std::size_t>(t - 1)) = v; }

    bool operator==(const AssignmentPath&) const = default;
};

// Every violated invariant, one message each; empty when the design is valid.
std::vector<std::string> design_violations(const SwitchbackDesign& design);
// Throws DesignError listing all violations.
void validate(const SwitchbackDesign& design);

// Block k with t in B_k (0-based block index).
int block_of(const SwitchbackDesign& design, Period t);

// Independent Bernoulli(q_k) per block, broadcast over the block. Probabilities
// of exactly 0 or 1 are honoured, which pins the block label.
AssignmentPath sample_assignment(const SwitchbackDesign& design, RngStream& stream);

// First period whose label differs from the start of its block, if any.
std::optional<Period> first_block_violation(const SwitchbackDesign& design,
                                            const AssignmentPath& path);

// Switch points {1, 2m+1, 3m+1, ..., (n-2)m+1} over T = n*m with all q = 1/2.
SwitchbackDesign optimal_regular_design(int n, int m);

// Equal-length blocks of size block_length with a common probability.
SwitchbackDesign uniform_block_design(int num_blocks, int block_length, double q);

// Canonical JSON: {"T":..., "switch_times":[...], "block_probs":[...]}.
nlohmann::ordered_json design_to_json(const SwitchbackDesign& design);
SwitchbackDesign design_from_json(const nlohmann::json& j);
std::string serialize_design(const SwitchbackDesign& design);
SwitchbackDesign parse_design(const std::string& text);

}  // namespace swx
