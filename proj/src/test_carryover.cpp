#include "swx/test_carryover.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "swx/numerics.hpp"

namespace swx {

std::size_t CarryoverLayout::focal_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : pairs) n += static_cast<std::size_t>(p.focal_last - p.focal_first + 1);
    return n;
}

CarryoverLayout build_carryover_layout(std::span<const double> y, const AssignmentPath& observed,
                                       const SwitchbackDesign& design,
                                       const SectionFamily& family, int m) {
    if (m < 0) throw std::domain_error("carryover layout: m must be non-negative");
    CarryoverLayout layout;
    layout.m = m;
    for (std::size_t i = 0; 2 * i + 1 < family.size(); ++i) {
        const auto& odd = family[2 * i];
        const auto& even = family[2 * i + 1];
        if (even.start + m > even.end) continue;
        CarryoverPair p;
        p.odd = 2 * i;
        p.even = 2 * i + 1;
        p.focal_first = even.start + m;
        p.focal_last = even.end;
        p.label_block = odd.last_block;
        p.label_prob = design.block_prob(odd.last_block);
        double sum = 0.0;
        for (Period t = p.focal_first; t <= p.focal_last; ++t) {
            sum += y[static_cast<std::size_t>(t - 1)];
        }
        layout.pairs.push_back(p);
        layout.labels.push_back(observed.at(odd.end));
        layout.probs.push_back(p.label_prob);
        layout.focal_means.push_back(sum / (p.focal_last - p.focal_first + 1));
    }
    return layout;
}

double t_m_statistic(const CarryoverLayout& layout) {
    if (layout.pairs.empty()) throw std::invalid_argument("t_m_statistic: no section pairs");
    return ht_diff_statistic(layout.focal_means, layout.labels, layout.probs);
}

AssignmentPath resample_carryover(const SwitchbackDesign& design, const SectionFamily& family,
                                  const CarryoverLayout& layout, const AssignmentPath& observed,
                                  RngStream& stream) {
    std::vector<bool> frozen(static_cast<std::size_t>(design.num_blocks()), false);
    for (const auto& p : layout.pairs) {
        for (int k = family[p.even].first_block; k <= family[p.even].last_block; ++k) {
            frozen[static_cast<std::size_t>(k)] = true;
        }
    }
    AssignmentPath out = observed;
    for (int k = 0; k < design.num_blocks(); ++k) {
        if (frozen[static_cast<std::size_t>(k)]) continue;
        const std::uint8_t v = draw_bernoulli(stream, design.block_prob(k)) ? 1 : 0;
        std::fill(out.w.begin() + design.block_start(k) - 1, out.w.begin() + design.block_end(k),
                  v);
    }
    return out;
}

TestReport crt_carryover_test(std::span<const double> y, const AssignmentPath& observed,
                              const SwitchbackDesign& design, int m, const CrtOptions& opts) {
    return crt_carryover_test(y, observed, design, greedy_pool(design, m), m, opts);
}

TestReport crt_carryover_test(std::span<const double> y, const AssignmentPath& observed,
                              const SwitchbackDesign& design, const SectionFamily& family, int m,
                              const CrtOptions& opts) {
    if (static_cast<int>(y.size()) != design.horizon || observed.size() != design.horizon) {
        throw std::invalid_argument("crt_carryover_test: outcome/path length does not match T=" +
                                    std::to_string(design.horizon));
    }
    const std::string name = "crt_carryover";
    const auto layout = build_carryover_layout(y, observed, design, family, m);
    if (layout.pairs.empty()) {
        return degenerate_report(name, "no even section has a focal window", opts.draws,
                                 opts.sidedness, opts.seed);
    }
    const double t_obs =
        total_statistic(opts.statistic, layout.focal_means, layout.labels, layout.probs);

    // Focal outcomes stay fixed; only the odd-section end labels move.
    std::vector<double> t_draw(opts.draws);
    parallel_for(opts.draws, [&](std::size_t b) {
        RngStream stream(opts.seed, b);
        const auto z = draw_section_labels(layout.probs, stream);
        t_draw[b] = total_statistic(opts.statistic, layout.focal_means, z, layout.probs);
    });

    TestReport r;
    r.test_name = name;
    r.statistic_obs = t_obs;
    r.draws = opts.draws;
    r.sidedness = opts.sidedness;
    r.focal_count = layout.focal_count();
    r.seed = opts.seed;
    for (const double t : t_draw) r.exceed_count += exceeds(t, t_obs, opts.sidedness) ? 1 : 0;
    r.p_value = mc_p_value(r.exceed_count, r.draws);
    return r;
}

SequentialResult sequential_m(std::span<const double> y, const AssignmentPath& observed,
                              const SwitchbackDesign& design, double alpha, int m_max,
                              const CrtOptions& opts) {
    if (m_max < 0 || m_max >= design.horizon) {
        throw std::domain_error("sequential_m: m_max must lie in [0, T)");
    }
    SequentialResult res;
    for (int m = 0; m < m_max; ++m) {
        CrtOptions level = opts;
        level.seed = mix_seed(opts.seed, static_cast<std::uint64_t>(m));
        const auto rep = crt_carryover_test(y, observed, design, m, level);
        SequentialLevel entry{m, rep.p_value, rep.p_value <= alpha, rep.degenerate};
        res.trace.push_back(entry);
        if (!entry.rejected) break;
        res.m_hat = m + 1;
    }
    return res;
}

nlohmann::ordered_json sequential_to_json(const SequentialResult& r, double alpha,
                                          const CrtOptions& opts) {
    nlohmann::ordered_json j;
    j["test"] = "sequential_m";
    j["m_hat"] = r.m_hat;
    j["alpha"] = alpha;
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& l : r.trace) {
        nlohmann::ordered_json e;
        e["m"] = l.m;
        e["p_value"] = l.p_value;
        e["rejected"] = l.rejected;
        if (l.degenerate) e["degenerate"] = true;
        trace.push_back(e);
    }
    j["trace"] = trace;
    j["draws"] = opts.draws;
    j["seed"] = opts.seed;
    j["version"] = kVersion;
    return j;
}

}  // namespace swx
