#include "swx/simlab.hpp"

#include <cmath>
#include <stdexcept>

#include "swx/numerics.hpp"
#include "swx/test_carryover.hpp"
#include "swx/test_total.hpp"

namespace swx {

std::string to_string(NoiseFamily n) { return n == NoiseFamily::gaussian ? "gaussian" : "t1"; }

NoiseFamily parse_noise(const std::string& text) {
    if (text == "gaussian" || text == "normal") return NoiseFamily::gaussian;
    if (text == "t1" || text == "cauchy") return NoiseFamily::t1;
    throw std::invalid_argument("unknown noise family '" + text + "' (use gaussian or t1)");
}

namespace {

DgpSpec gated_dgp(std::initializer_list<int> lags, double delta, NoiseFamily noise, int m) {
    DgpSpec d;
    for (const int p : lags) d.lag_coeffs[p] = delta;
    d.noise = noise;
    d.m_indicator = m;
    return d;
}

}  // namespace

DgpSpec total_effect_dgp(double delta, NoiseFamily noise, int m) {
    return gated_dgp({1, 2, 3}, delta, noise, m);
}

DgpSpec carryover_dgp(double delta, NoiseFamily noise, int m) {
    return gated_dgp({4, 5, 6}, delta, noise, m);
}

DgpSpec anticipation_dgp(double delta, NoiseFamily noise, int m) {
    return gated_dgp({-2, -1, 0}, delta, noise, m);
}

DgpSpec sequential_dgp(double delta, NoiseFamily noise) { return gated_dgp({1}, delta, noise, 0); }

DgpSpec distributed_lag_dgp(double mu, std::span<const double> beta, double rho,
                            double sigma_u) {
    if (!(std::fabs(rho) < 1.0)) throw std::domain_error("distributed_lag_dgp: need |rho| < 1");
    DgpSpec d;
    d.mu = mu;
    d.time_effect = TimeEffect::none;
    for (std::size_t l = 0; l < beta.size(); ++l) {
        if (beta[l] != 0.0) d.lag_coeffs[static_cast<int>(l) + 1] = beta[l];
    }
    d.noise = NoiseFamily::gaussian;
    d.noise_scale = sigma_u;
    d.ar_rho = rho;
    d.gate_noise = false;
    d.m_indicator = 0;
    return d;
}

double time_effect_at(const DgpSpec& dgp, Period t) {
    return dgp.time_effect == TimeEffect::log_t ? std::log(static_cast<double>(t)) : 0.0;
}

std::vector<double> draw_noise(const DgpSpec& dgp, int T, RngStream& stream) {
    std::vector<double> eps(static_cast<std::size_t>(T));
    const double rho = dgp.ar_rho;
    for (int t = 0; t < T; ++t) {
        const double u = dgp.noise_scale *
                         (dgp.noise == NoiseFamily::gaussian ? draw_gaussian(stream) : draw_t1(stream));
        if (rho == 0.0) {
            eps[static_cast<std::size_t>(t)] = u;
        } else if (t == 0) {
            eps[0] = u / std::sqrt(1.0 - rho * rho);
        } else {
            eps[static_cast<std::size_t>(t)] = rho * eps[static_cast<std::size_t>(t) - 1] + u;
        }
    }
    return eps;
}

double outcome_at(const DgpSpec& dgp, const AssignmentPath& path, std::span<const double> eps,
                  Period t) {
    const int T = path.size();
    const double a = time_effect_at(dgp, t);
    double y = dgp.mu + a;
    for (const auto& [p, coef] : dgp.lag_coeffs) {
        const Period s = t + 1 - p;
        if (s >= 1 && s <= T && path.at(s)) y += coef;
    }
    const double e = eps[static_cast<std::size_t>(t - 1)];
    if (!dgp.gate_noise) return y + e;
    const auto head = path.at(t);
    for (Period s = std::max(1, t - dgp.m_indicator); s < t; ++s) {
        if (path.at(s) != head) return y;
    }
    return y + e * a;
}

std::vector<double> outcomes_from_noise(const DgpSpec& dgp, const AssignmentPath& path,
                                        std::span<const double> eps) {
    if (eps.size() != path.w.size()) {
        throw std::invalid_argument("outcomes_from_noise: noise length does not match the path");
    }
    std::vector<double> y(path.w.size());
    for (Period t = 1; t <= path.size(); ++t) y[static_cast<std::size_t>(t - 1)] = outcome_at(dgp, path, eps, t);
    return y;
}

std::vector<double> simulate_outcomes(const DgpSpec& dgp, const AssignmentPath& path,
                                      RngStream& stream) {
    const auto eps = draw_noise(dgp, path.size(), stream);
    return outcomes_from_noise(dgp, path, eps);
}

// ---------------------------------------------------------------------------
// Comparators
// ---------------------------------------------------------------------------

TestReport frt_sharp_test(std::span<const double> y, const AssignmentPath& observed,
                          const SwitchbackDesign& design, int m, const McOptions& opts) {
    const std::string name = "frt_sharp";
    const auto family = greedy_pool(design, m);
    const auto score = [&](const AssignmentPath& w, std::size_t* focal_count) -> double {
        const auto selected = constant_sections(family, w);
        const auto focal = focal_units(family, selected, m);
        if (focal_count) *focal_count = focal.count();
        if (focal.empty()) return 0.0;
        std::vector<double> probs;
        probs.reserve(focal.groups.size());
        for (const auto& g : focal.groups) {
            probs.push_back(section_conditional_prob(design, family[g.section]));
        }
        return ht_diff_statistic(y, w, focal, probs);
    };

    std::size_t focal_obs = 0;
    const double t_obs = score(observed, &focal_obs);
    if (focal_obs == 0) {
        return degenerate_report(name, "no focal units are available", opts.draws, opts.sidedness,
                                 opts.seed);
    }
    std::vector<double> t_draw(opts.draws);
    parallel_for(opts.draws, [&](std::size_t b) {
        RngStream stream(opts.seed, b);
        t_draw[b] = score(sample_assignment(design, stream), nullptr);
    });
    TestReport r;
    r.test_name = name;
    r.statistic_obs = t_obs;
    r.draws = opts.draws;
    r.sidedness = opts.sidedness;
    r.focal_count = focal_obs;
    r.seed = opts.seed;
    for (const double t : t_draw) r.exceed_count += exceeds(t, t_obs, opts.sidedness) ? 1 : 0;
    r.p_value = mc_p_value(r.exceed_count, r.draws);
    return r;
}

AsymptoticResult ht_asymptotic_test(std::span<const double> y, const AssignmentPath& observed,
                                    const SwitchbackDesign& design, int m, double alpha) {
    const auto family = greedy_pool(design, m);
    const auto selected = constant_sections(family, observed);
    const auto focal = focal_units(family, selected, m);
    AsymptoticResult res;
    if (focal.empty()) {
        res.degenerate = true;
        return res;
    }
    std::vector<double> probs;
    std::vector<std::uint8_t> labels;
    for (const auto& g : focal.groups) {
        probs.push_back(section_conditional_prob(design, family[g.section]));
        labels.push_back(observed.at(g.first));
    }
    const auto means = focal_means(y, focal);
    res.estimate = ht_diff_statistic(means, labels, probs);
    res.variance = ht_upper_variance(means, labels, probs);
    if (!(res.variance > 0.0)) {
        res.degenerate = true;
        return res;
    }
    res.statistic = res.estimate / std::sqrt(res.variance);
    res.reject = res.statistic >= std_normal_quantile(1.0 - alpha);
    return res;
}

// ---------------------------------------------------------------------------
// Power simulations
// ---------------------------------------------------------------------------

namespace {

EmpiricalPower summarize(const std::vector<std::uint8_t>& hits) {
    EmpiricalPower p;
    p.reps = static_cast<int>(hits.size());
    double k = 0.0;
    for (const auto h : hits) k += h;
    p.rate = p.reps > 0 ? k / p.reps : 0.0;
    p.se = p.reps > 0 ? std::sqrt(p.rate * (1.0 - p.rate) / p.reps) : 0.0;
    return p;
}

}  // namespace

EmpiricalPower empirical_power_total(const DgpSpec& dgp, const PooledSetup& setup, int reps,
                                     std::size_t draws, double alpha, std::uint64_t seed) {
    const auto design = uniform_block_design(setup.M_blocks, setup.L, setup.q);
    const auto family = pooled_family(design, setup.r, setup.m);
    std::vector<std::uint8_t> hits(static_cast<std::size_t>(reps), 0);
    parallel_for(hits.size(), [&](std::size_t i) {
        RngStream stream(seed, i);
        const auto path = sample_assignment(design, stream);
        const auto y = simulate_outcomes(dgp, path, stream);
        CrtOptions opts;
        opts.draws = draws;
        opts.seed = mix_seed(seed, i);
        opts.statistic = TotalStatistic::studentized;
        const auto rep = crt_total_test(y, path, design, family, opts);
        hits[i] = (!rep.degenerate && rep.p_value <= alpha) ? 1 : 0;
    });
    return summarize(hits);
}

EmpiricalPower empirical_power_carryover(const DgpSpec& dgp, const PooledSetup& setup, int reps,
                                         std::size_t draws, double alpha, std::uint64_t seed) {
    const auto design = uniform_block_design(setup.M_blocks, setup.L, setup.q);
    const auto family = pooled_family(design, setup.r, setup.m);
    std::vector<std::uint8_t> hits(static_cast<std::size_t>(reps), 0);
    parallel_for(hits.size(), [&](std::size_t i) {
        RngStream stream(seed, i);
        const auto path = sample_assignment(design, stream);
        const auto y = simulate_outcomes(dgp, path, stream);
        CrtOptions opts;
        opts.draws = draws;
        opts.seed = mix_seed(seed, i);
        opts.statistic = TotalStatistic::studentized;
        const auto rep = crt_carryover_test(y, path, design, family, setup.m, opts);
        hits[i] = (!rep.degenerate && rep.p_value <= alpha) ? 1 : 0;
    });
    return summarize(hits);
}

}  // namespace swx
