#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "swx/design.hpp"
#include "swx/numerics.hpp"

namespace swx {

// A section is the union of consecutive design blocks first_block..last_block,
// covering periods [start, end].
struct Section {
    Period start = 0;
    Period end = 0;
    int first_block = 0;
    int last_block = 0;

    int length() const noexcept { return end - start + 1; }
    int num_blocks() const noexcept { return last_block - first_block + 1; }
    bool operator==(const Section&) const = default;
};

// Predetermined, disjoint, increasing sections covering [1, T]. Built from the
// design and a horizon only, never from a realized path or outcomes.
struct SectionFamily {
    std::vector<Section> sections;
    int m = 0;

    std::size_t size() const noexcept { return sections.size(); }
    const Section& operator[](std::size_t j) const { return sections[j]; }
};

// Focal periods of one selected section: the contiguous run [first, last].
struct FocalGroup {
    std::size_t section = 0;  // index into the family
    Period first = 0;
    Period last = 0;

    int size() const noexcept { return last - first + 1; }
    bool operator==(const FocalGroup&) const = default;
};

struct FocalSet {
    std::vector<FocalGroup> groups;

    bool empty() const noexcept { return groups.empty(); }
    std::size_t count() const noexcept;
    std::vector<Period> times() const;
    bool operator==(const FocalSet&) const = default;
};

// Greedy pooling: accumulate consecutive blocks until the pooled length
// reaches m + 1, close the section and continue. Trailing blocks that cannot
// reach m + 1 merge into the last closed section. Throws DesignError when
// T < m + 1.
SectionFamily greedy_pool(const SwitchbackDesign& design, int m);

// Fixed pooling of r consecutive blocks per section; r must divide the block
// count. `m` is recorded on the family and must satisfy length > m.
SectionFamily pooled_family(const SwitchbackDesign& design, int r, int m);

bool is_constant(const Section& section, const AssignmentPath& path);

// Indices (into the family) of sections whose periods share one label.
std::vector<std::size_t> constant_sections(const SectionFamily& family,
                                           const AssignmentPath& path);

// Union over selected sections of {t : start + m <= t <= end}.
FocalSet focal_units(const SectionFamily& family, std::span<const std::size_t> selected,
                     int m);

// P(common label = 1 | blocks first..last all equal)
//   = prod q_k / (prod q_k + prod (1 - q_k)),
// evaluated in log space.
double section_conditional_prob(const SwitchbackDesign& design, const Section& section);

std::vector<double> section_probs(const SwitchbackDesign& design, const SectionFamily& family,
                                  std::span<const std::size_t> selected);

// Independent Bernoulli(probs[j]) labels, drawn in order.
std::vector<std::uint8_t> draw_section_labels(std::span<const double> probs, RngStream& stream);

// Draw Z_j ~ Bernoulli(p_j) per selected section and broadcast; every other
// period keeps the observed label.
AssignmentPath resample_conditional(const SectionFamily& family,
                                    std::span<const std::size_t> selected,
                                    std::span<const double> probs,
                                    const AssignmentPath& observed, RngStream& stream);

// Mean outcome over each focal group. Reads y only at focal periods.
std::vector<double> focal_means(std::span<const double> y, const FocalSet& focal);

}  // namespace swx
