#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swx/design.hpp"
#include "swx/report.hpp"

namespace swx {

// Holdout length L: resampled paths agree with the observed path on [1, L].
struct PrefixScheme {
    int holdout = 0;
};

// Default holdout 2m + 1.
PrefixScheme default_prefix_scheme(int m);

// Length of the longest common prefix of two equal-length paths.
int common_prefix_length(const AssignmentPath& a, const AssignmentPath& b);

// {1, ..., l} with l the common prefix length (possibly empty).
std::vector<Period> imputable_times(const AssignmentPath& a, const AssignmentPath& b);

// Centered signed-score statistic on I = imputable times within [1, T-1]:
// (1/|I|) sum_{t in I} (2 w_{t+1} - 1)(y_t - ybar_I). Returns +inf when I is
// empty. Outcomes outside I are never read.
double t_na(std::span<const double> y, const AssignmentPath& w, const AssignmentPath& w_prime);

// Blocks fully inside [1, L] and any block straddling L keep the observed
// label; blocks starting after L are drawn from the design.
AssignmentPath sample_prefix_preserving(const SwitchbackDesign& design,
                                        const AssignmentPath& observed, PrefixScheme scheme,
                                        RngStream& stream);

using PirtOptions = McOptions;

// p = (1 + #{b : A_b >= B_b}) / (M + 1) with A_b = t_na(y, W*_b, W_obs) and
// B_b = t_na(y, W_obs, W*_b).
TestReport pirt_test(std::span<const double> y, const AssignmentPath& observed,
                     const SwitchbackDesign& design, PrefixScheme scheme,
                     const PirtOptions& opts = {});

}  // namespace swx
