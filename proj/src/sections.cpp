#include "swx/sections.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swx {

std::size_t FocalSet::count() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups) n += static_cast<std::size_t>(g.size());
    return n;
}

std::vector<Period> FocalSet::times() const {
    std::vector<Period> out;
    out.reserve(count());
    for (const auto& g : groups) {
        for (Period t = g.first; t <= g.last; ++t) out.push_back(t);
    }
    return out;
}

SectionFamily greedy_pool(const SwitchbackDesign& design, int m) {
    if (m < 0) throw std::domain_error("greedy_pool: m must be non-negative");
    if (design.horizon < m + 1) {
        throw DesignError("greedy_pool: no admissible section (T=" +
                          std::to_string(design.horizon) + " < m+1=" + std::to_string(m + 1) +
                          ")");
    }
    SectionFamily family;
    family.m = m;
    int open_first = 0;
    for (int k = 0; k < design.num_blocks(); ++k) {
        const int pooled = design.block_end(k) - design.block_start(open_first) + 1;
        if (pooled >= m + 1) {
            family.sections.push_back(
                {design.block_start(open_first), design.block_end(k), open_first, k});
            open_first = k + 1;
        }
    }
    if (open_first < design.num_blocks()) {
        // Remainder: too short to stand alone, so it extends the last section.
        auto& last = family.sections.back();
        last.end = design.horizon;
        last.last_block = design.num_blocks() - 1;
    }
    return family;
}

SectionFamily pooled_family(const SwitchbackDesign& design, int r, int m) {
    if (r < 1 || design.num_blocks() % r != 0) {
        throw DesignError("pooled_family: pooling size r=" + std::to_string(r) +
                          " must divide the block count " + std::to_string(design.num_blocks()));
    }
    SectionFamily family;
    family.m = m;
    for (int k = 0; k < design.num_blocks(); k += r) {
        Section s{design.block_start(k), design.block_end(k + r - 1), k, k + r - 1};
        if (s.length() <= m) {
            throw DesignError("pooled_family: section [" + std::to_string(s.start) + "," +
                              std::to_string(s.end) + "] is not longer than m=" +
                              std::to_string(m));
        }
        family.sections.push_back(s);
    }
    return family;
}

bool is_constant(const Section& section, const AssignmentPath& path) {
    const auto head = path.at(section.start);
    for (Period t = section.start + 1; t <= section.end; ++t) {
        if (path.at(t) != head) return false;
    }
    return true;
}

std::vector<std::size_t> constant_sections(const SectionFamily& family,
                                           const AssignmentPath& path) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < family.size(); ++j) {
        if (is_constant(family[j], path)) out.push_back(j);
    }
    return out;
}

FocalSet focal_units(const SectionFamily& family, std::span<const std::size_t> selected, int m) {
    FocalSet focal;
    for (const auto j : selected) {
        const auto& s = family[j];
        if (s.start + m <= s.end) focal.groups.push_back({j, s.start + m, s.end});
    }
    return focal;
}

double section_conditional_prob(const SwitchbackDesign& design, const Section& section) {
    double log_treated = 0.0;
    double log_control = 0.0;
    for (int k = section.first_block; k <= section.last_block; ++k) {
        const double q = design.block_prob(k);
        log_treated += std::log(q);
        log_control += std::log1p(-q);
    }
    return 1.0 / (1.0 + std::exp(log_control - log_treated));
}

std::vector<double> section_probs(const SwitchbackDesign& design, const SectionFamily& family,
                                  std::span<const std::size_t> selected) {
    std::vector<double> out;
    out.reserve(selected.size());
    for (const auto j : selected) out.push_back(section_conditional_prob(design, family[j]));
    return out;
}

std::vector<std::uint8_t> draw_section_labels(std::span<const double> probs, RngStream& stream) {
    std::vector<std::uint8_t> z(probs.size());
    for (std::size_t j = 0; j < probs.size(); ++j) z[j] = draw_bernoulli(stream, probs[j]) ? 1 : 0;
    return z;
}

AssignmentPath resample_conditional(const SectionFamily& family,
                                    std::span<const std::size_t> selected,
                                    std::span<const double> probs,
                                    const AssignmentPath& observed, RngStream& stream) {
    AssignmentPath out = observed;
    const auto labels = draw_section_labels(probs, stream);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto& s = family[selected[i]];
        std::fill(out.w.begin() + s.start - 1, out.w.begin() + s.end, labels[i]);
    }
    return out;
}

std::vector<double> focal_means(std::span<const double> y, const FocalSet& focal) {
    std::vector<double> means;
    means.reserve(focal.groups.size());
    for (const auto& g : focal.groups) {
        if (g.size() <= 0) throw std::logic_error("focal_means: empty focal slice");
        double sum = 0.0;
        for (Period t = g.first; t <= g.last; ++t) sum += y[static_cast<std::size_t>(t - 1)];
        means.push_back(sum / g.size());
    }
    return means;
}

}  // namespace swx
