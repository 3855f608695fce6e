#include "swx/power.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "swx/numerics.hpp"

namespace swx {

void validate(const PowerInputs& in) {
    if (!(in.q > 0.0 && in.q < 1.0)) throw std::domain_error("power inputs: q must lie in (0, 1)");
    if (!(std::fabs(in.rho) < 1.0)) throw std::domain_error("power inputs: need |rho| < 1");
    if (!(in.sigma_u > 0.0)) throw std::domain_error("power inputs: sigma_u must be positive");
    if (in.L < 1 || in.r < 1 || in.M_blocks < 1) {
        throw std::domain_error("power inputs: L, r and M_blocks must be positive");
    }
    if (in.M_blocks % in.r != 0) {
        throw std::domain_error("power inputs: r=" + std::to_string(in.r) +
                                " does not divide M_blocks=" + std::to_string(in.M_blocks));
    }
    if (in.m < 0 || in.r * in.L <= in.m) {
        throw std::domain_error("power inputs: need rL > m (rL=" + std::to_string(in.r * in.L) +
                                ", m=" + std::to_string(in.m) + ")");
    }
    if (!(in.alpha > 0.0 && in.alpha < 1.0)) {
        throw std::domain_error("power inputs: alpha must lie in (0, 1)");
    }
}

PowerInputs power_inputs_from_json(const nlohmann::json& j) {
    PowerInputs in;
    const auto read = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument(std::string("power inputs: field '") + key +
                                        "' has the wrong type");
        }
    };
    read("mu", in.mu);
    read("beta", in.beta);
    read("rho", in.rho);
    read("sigma_u", in.sigma_u);
    read("q", in.q);
    read("L", in.L);
    read("r", in.r);
    read("m", in.m);
    read("m0", in.m0);
    read("M_blocks", in.M_blocks);
    read("alpha", in.alpha);
    if (j.contains("tau_tot")) {
        read("tau_tot", in.tau_tot);
    } else {
        in.tau_tot = 0.0;
        for (const double b : in.beta) in.tau_tot += b;
    }
    if (j.contains("sigma_eps")) {
        double se = 0.0;
        read("sigma_eps", se);
        in.sigma_u = se * std::sqrt(1.0 - in.rho * in.rho);
    }
    if (j.contains("J_tot")) {
        read("J_tot", in.J_tot);
        in.jtot_mode = JtotMode::fixed;
    }
    if (j.contains("J_tot_mode")) {
        std::string mode;
        read("J_tot_mode", mode);
        if (mode == "fixed") {
            in.jtot_mode = JtotMode::fixed;
        } else if (mode == "expected") {
            in.jtot_mode = JtotMode::expected;
        } else if (mode == "binomial") {
            in.jtot_mode = JtotMode::binomial;
        } else {
            throw std::invalid_argument("power inputs: field 'J_tot_mode' must be fixed, "
                                        "expected or binomial");
        }
    }
    return in;
}

double pooled_prob(int r, double q) {
    if (r < 1 || !(q > 0.0 && q < 1.0)) throw std::domain_error("pooled_prob: need r >= 1, q in (0,1)");
    return 1.0 / (1.0 + std::pow((1.0 - q) / q, r));
}

double constancy_prob(int r, double q) {
    if (r < 1 || !(q > 0.0 && q < 1.0)) {
        throw std::domain_error("constancy_prob: need r >= 1, q in (0,1)");
    }
    return std::pow(q, r) + std::pow(1.0 - q, r);
}

double ar1_marginal_variance(double sigma_u, double rho) {
    return sigma_u * sigma_u / (1.0 - rho * rho);
}

double ar1_mean_variance(int n, double rho, double sigma_eps_sq) {
    if (n < 1 || !(std::fabs(rho) < 1.0) || !(sigma_eps_sq > 0.0)) {
        throw std::domain_error("ar1_mean_variance: need n >= 1, |rho| < 1, sigma^2 > 0");
    }
    double acc = n;
    double rh = 1.0;
    for (int h = 1; h < n; ++h) {
        rh *= rho;
        acc += 2.0 * (n - h) * rh;
    }
    return sigma_eps_sq * acc / (static_cast<double>(n) * n);
}

// ---------------------------------------------------------------------------
// Total-effect power
// ---------------------------------------------------------------------------

TotalPower power_total(const PowerInputs& in, double J_tot) {
    validate(in);
    if (in.m < in.m0) {
        throw std::domain_error("power total: regime requires m >= m0 (m=" +
                                std::to_string(in.m) + ", m0=" + std::to_string(in.m0) + ")");
    }
    if (!(J_tot >= 1.0)) throw std::domain_error("power total: J_tot must be at least 1");
    TotalPower out;
    out.p = pooled_prob(in.r, in.q);
    out.pi_r = constancy_prob(in.r, in.q);
    out.n = in.r * in.L - in.m;
    out.J = in.M_blocks / in.r;
    out.J_tot = J_tot;
    out.sigma_bar_sq =
        ar1_mean_variance(out.n, in.rho, ar1_marginal_variance(in.sigma_u, in.rho));
    const double p = out.p;
    const double mu = in.mu;
    const double tau = in.tau_tot;
    const double s2 = out.sigma_bar_sq;
    const double denom = s2 / (p * (1.0 - p)) + (mu + tau) * (mu + tau) / p + mu * mu / (1.0 - p);
    const double num_s = s2 + (mu + (1.0 - p) * tau) * (mu + (1.0 - p) * tau);
    const double den_s = s2 + p * mu * mu + (1.0 - p) * (mu + tau) * (mu + tau);
    if (!(denom > 0.0) || !(den_s > 0.0)) {
        throw std::logic_error("power total: nonpositive variance term");
    }
    out.mu_tot = tau * std::sqrt(J_tot) / std::sqrt(denom);
    out.sigma_tot_sq = num_s / den_s;
    const double z = std_normal_quantile(1.0 - in.alpha);
    out.power = 1.0 - std_normal_cdf((z - out.mu_tot) / std::sqrt(out.sigma_tot_sq));
    return out;
}

TotalPower power_total(const PowerInputs& in) {
    validate(in);
    const int J = in.M_blocks / in.r;
    const double pi = constancy_prob(in.r, in.q);
    switch (in.jtot_mode) {
        case JtotMode::fixed:
            return power_total(in, in.J_tot);
        case JtotMode::expected:
            return power_total(in, J * pi);
        case JtotMode::binomial: {
            TotalPower out = power_total(in, J);
            double acc = 0.0;
            for (int k = 1; k <= J; ++k) {
                double pmf;
                if (pi >= 1.0) {
                    pmf = k == J ? 1.0 : 0.0;
                } else {
                    pmf = std::exp(std::lgamma(J + 1.0) - std::lgamma(k + 1.0) -
                                   std::lgamma(J - k + 1.0) + k * std::log(pi) +
                                   (J - k) * std::log1p(-pi));
                }
                if (pmf > 0.0) acc += pmf * power_total(in, k).power;
            }
            out.J_tot = J * pi;
            out.power = acc;
            return out;
        }
    }
    throw std::logic_error("power total: unknown J_tot mode");
}

// ---------------------------------------------------------------------------
// Carryover power
// ---------------------------------------------------------------------------

double delta_tail(int m, int m0, int L, int r, std::span<const double> beta) {
    if (!(m < m0 && m0 <= r * L)) {
        throw std::domain_error("delta_tail: regime requires m < m0 <= rL (m=" +
                                std::to_string(m) + ", m0=" + std::to_string(m0) +
                                ", rL=" + std::to_string(r * L) + ")");
    }
    if (m < 0) throw std::domain_error("delta_tail: m must be non-negative");
    const int n = r * L - m;
    double acc = 0.0;
    for (int l = m + 1; l <= m0; ++l) {
        const double b = static_cast<std::size_t>(l) < beta.size() ? beta[static_cast<std::size_t>(l)] : 0.0;
        acc += std::min(L, l - m) * b;
    }
    return acc / n;
}

CarryPower power_carryover(double q, double alpha, const CarryMoments& mom, double delta, int J) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("power carryover: q must lie in (0, 1)");
    CarryPower out;
    out.J_e = J / 2;
    if (out.J_e < 1) throw std::domain_error("power carryover: need at least one section pair");
    out.delta = delta;
    out.v_up = mom.e_y1_sq / q + mom.e_y0_sq / (1.0 - q);
    if (!(out.v_up > 0.0)) throw std::domain_error("power carryover: v_up must be positive");
    out.sigma_delta_sq = (1.0 / q - 1.0) * mom.e_y1_sq + (1.0 / (1.0 - q) - 1.0) * mom.e_y0_sq +
                         2.0 * mom.e_y1_y0;
    out.mu_m = delta * std::sqrt(static_cast<double>(out.J_e)) / std::sqrt(out.v_up);
    out.sigma_m_sq = out.sigma_delta_sq / out.v_up;
    const double z = std_normal_quantile(1.0 - alpha);
    out.power = 1.0 - std_normal_cdf((z - out.mu_m) / std::sqrt(out.sigma_m_sq));
    return out;
}

CarryPower power_carryover(const PowerInputs& in, const CarryMoments& mom) {
    validate(in);
    const double d = delta_tail(in.m, in.m0, in.L, in.r, in.beta);
    auto out = power_carryover(in.q, in.alpha, mom, d, in.M_blocks / in.r);
    out.n = in.r * in.L - in.m;
    return out;
}

CarryMoments estimate_carry_moments(const DgpSpec& dgp, const PooledSetup& setup, int n_sims,
                                    std::uint64_t seed) {
    if (n_sims < 1) throw std::domain_error("estimate_carry_moments: n_sims must be >= 1");
    const auto design = uniform_block_design(setup.M_blocks, setup.L, setup.q);
    const auto family = pooled_family(design, setup.r, setup.m);
    const int pairs = static_cast<int>(family.size() / 2);
    if (pairs < 1) throw std::domain_error("estimate_carry_moments: need at least one pair");

    struct Acc {
        double y1 = 0, y0 = 0, y10 = 0, d = 0, d2 = 0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(n_sims));
    parallel_for(acc.size(), [&](std::size_t i) {
        RngStream stream(seed, i);
        auto path = sample_assignment(design, stream);
        const auto eps = draw_noise(dgp, design.horizon, stream);
        Acc a;
        for (int k = 0; k < pairs; ++k) {
            const auto& odd = family[2 * static_cast<std::size_t>(k)];
            const auto& even = family[2 * static_cast<std::size_t>(k) + 1];
            const int blk = odd.last_block;
            double ybar[2] = {0.0, 0.0};
            for (int v = 0; v < 2; ++v) {
                std::fill(path.w.begin() + design.block_start(blk) - 1,
                          path.w.begin() + design.block_end(blk), static_cast<std::uint8_t>(v));
                for (Period t = even.start + setup.m; t <= even.end; ++t) {
                    ybar[v] += outcome_at(dgp, path, eps, t);
                }
                ybar[v] /= (even.end - even.start - setup.m + 1);
            }
            a.y1 += ybar[1] * ybar[1];
            a.y0 += ybar[0] * ybar[0];
            a.y10 += ybar[1] * ybar[0];
            a.d += ybar[1] - ybar[0];
            a.d2 += (ybar[1] - ybar[0]) * (ybar[1] - ybar[0]);
        }
        acc[i] = a;
    });
    Acc total;
    for (const auto& a : acc) {
        total.y1 += a.y1;
        total.y0 += a.y0;
        total.y10 += a.y10;
        total.d += a.d;
        total.d2 += a.d2;
    }
    const double N = static_cast<double>(n_sims) * pairs;
    CarryMoments out;
    out.samples = static_cast<int>(N);
    out.e_y1_sq = total.y1 / N;
    out.e_y0_sq = total.y0 / N;
    out.e_y1_y0 = total.y10 / N;
    out.mean_diff = total.d / N;
    const double var = std::max(0.0, total.d2 / N - out.mean_diff * out.mean_diff);
    out.mean_diff_se = std::sqrt(var / N);
    return out;
}

nlohmann::ordered_json to_json(const TotalPower& p) {
    nlohmann::ordered_json j;
    j["power"] = p.power;
    j["p"] = p.p;
    j["pi_r"] = p.pi_r;
    j["n"] = p.n;
    j["J"] = p.J;
    j["J_tot"] = p.J_tot;
    j["sigma_bar_sq"] = p.sigma_bar_sq;
    j["mu_tot"] = p.mu_tot;
    j["sigma_tot"] = std::sqrt(p.sigma_tot_sq);
    return j;
}

nlohmann::ordered_json to_json(const CarryPower& p) {
    nlohmann::ordered_json j;
    j["power"] = p.power;
    j["delta_m"] = p.delta;
    j["n"] = p.n;
    j["J_e"] = p.J_e;
    j["v_up"] = p.v_up;
    j["sigma_delta_sq"] = p.sigma_delta_sq;
    j["mu_m"] = p.mu_m;
    j["sigma_m"] = std::sqrt(p.sigma_m_sq);
    return j;
}

nlohmann::ordered_json to_json(const CarryMoments& m) {
    nlohmann::ordered_json j;
    j["E_y1_sq"] = m.e_y1_sq;
    j["E_y0_sq"] = m.e_y0_sq;
    j["E_y1_y0"] = m.e_y1_y0;
    j["mean_diff"] = m.mean_diff;
    j["mean_diff_se"] = m.mean_diff_se;
    j["samples"] = m.samples;
    return j;
}

}  // namespace swx
