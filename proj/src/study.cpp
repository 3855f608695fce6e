#include "swx/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "swx/design.hpp"
#include "swx/numerics.hpp"
#include "swx/simlab.hpp"
#include "swx/test_anticipation.hpp"
#include "swx/test_carryover.hpp"
#include "swx/test_total.hpp"

namespace swx {

namespace {

const std::map<std::string, Method>& method_names() {
    static const std::map<std::string, Method> names{
        {"crt_total", Method::crt_total},         {"frt_sharp", Method::frt_sharp},
        {"ht_asymptotic", Method::ht_asymptotic}, {"crt_carryover", Method::crt_carryover},
        {"pirt", Method::pirt},                   {"sequential_m", Method::sequential_m}};
    return names;
}

bool known_scenario(const std::string& s) {
    return s == "total" || s == "carryover" || s == "anticipation" || s == "sequential";
}

DgpSpec scenario_dgp(const std::string& scenario, double delta, NoiseFamily noise, int m) {
    if (scenario == "total") return total_effect_dgp(delta, noise, m);
    if (scenario == "carryover") return carryover_dgp(delta, noise, m);
    if (scenario == "anticipation") return anticipation_dgp(delta, noise, m);
    return sequential_dgp(delta, noise);
}

// FNV-1a over the cell key, so a cell's seed does not depend on grid order.
std::uint64_t cell_key(const std::string& scenario, int T, double delta, const std::string& noise) {
    std::ostringstream os;
    os.precision(17);
    os << scenario << '|' << T << '|' << delta << '|' << noise;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fixed(double x, int digits) {
    if (!std::isfinite(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string format_delta(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
}

}  // namespace

std::string to_string(Method m) {
    for (const auto& [name, v] : method_names()) {
        if (v == m) return name;
    }
    return "unknown";
}

Method parse_method(const std::string& text) {
    const auto it = method_names().find(text);
    if (it == method_names().end()) throw std::invalid_argument("unknown method '" + text + "'");
    return it->second;
}

void validate(const StudyConfig& c) {
    if (c.replications < 1) throw std::invalid_argument("study config: 'replications' must be >= 1");
    if (c.draws < 1) throw std::invalid_argument("study config: 'draws' must be >= 1");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
        throw std::invalid_argument("study config: 'alpha' must lie in (0, 1)");
    }
    if (c.m < 1) throw std::invalid_argument("study config: 'm' must be >= 1");
    if (c.scenarios.empty()) throw std::invalid_argument("study config: 'scenarios' is empty");
    for (const auto& s : c.scenarios) {
        if (!known_scenario(s)) throw std::invalid_argument("study config: 'scenarios' has unknown entry '" + s + "'");
    }
    if (c.T_grid.empty()) throw std::invalid_argument("study config: 'T_grid' is empty");
    for (const int T : c.T_grid) {
        if (T < 1) throw std::invalid_argument("study config: 'T_grid' entries must be positive");
    }
    if (c.delta_grid.empty()) throw std::invalid_argument("study config: 'delta_grid' is empty");
    if (c.noise_grid.empty()) throw std::invalid_argument("study config: 'noise_grid' is empty");
    for (const auto& n : c.noise_grid) {
        try {
            parse_noise(n);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("study config: 'noise_grid' has unknown entry '" + n + "'");
        }
    }
    if (c.methods.empty()) throw std::invalid_argument("study config: 'methods' is empty");
    if (c.m_max < 1) throw std::invalid_argument("study config: 'm_max' must be >= 1");
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    if (!j.is_object()) throw std::invalid_argument("study config: expected a JSON object");
    const auto read = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument(std::string("study config: field '") + key +
                                        "' has the wrong type");
        }
    };
    static const std::vector<std::string> known{
        "scenarios", "T_grid", "m", "delta_grid", "noise_grid", "methods", "replications",
        "draws", "alpha", "seed", "holdout", "m_max", "design"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("study config: unknown field '" + key + "'");
        }
    }
    if (j.contains("design") && j.at("design") != "optimal") {
        throw std::invalid_argument("study config: field 'design' supports only \"optimal\"");
    }
    read("scenarios", c.scenarios);
    read("T_grid", c.T_grid);
    read("m", c.m);
    read("delta_grid", c.delta_grid);
    read("noise_grid", c.noise_grid);
    if (j.contains("methods")) {
        std::vector<std::string> names;
        read("methods", names);
        c.methods.clear();
        for (const auto& n : names) {
            try {
                c.methods.push_back(parse_method(n));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("study config: field 'methods' has unknown entry '" +
                                            n + "'");
            }
        }
    }
    read("replications", c.replications);
    read("draws", c.draws);
    read("alpha", c.alpha);
    read("seed", c.seed);
    read("holdout", c.holdout);
    read("m_max", c.m_max);
    validate(c);
    return c;
}

// ---------------------------------------------------------------------------
// Study loop
// ---------------------------------------------------------------------------

std::vector<StudyRow> run_study(const StudyConfig& config) {
    validate(config);
    std::vector<StudyRow> rows;
    const int m = config.m;
    const int holdout = config.holdout >= 0 ? config.holdout : 2 * m + 1;
    const std::size_t K = config.methods.size();

    for (const auto& scenario : config.scenarios) {
        for (const int T : config.T_grid) {
            for (const double delta : config.delta_grid) {
                for (const auto& noise_name : config.noise_grid) {
                    const auto noise = parse_noise(noise_name);
                    const std::uint64_t cell_seed =
                        mix_seed(config.seed, cell_key(scenario, T, delta, noise_name));

                    std::vector<StudyRow> cell(K);
                    for (std::size_t k = 0; k < K; ++k) {
                        cell[k].scenario = scenario;
                        cell[k].T = T;
                        cell[k].delta = delta;
                        cell[k].noise = noise_name;
                        cell[k].method = config.methods[k];
                    }

                    SwitchbackDesign design;
                    std::string design_error;
                    try {
                        if (T % m != 0) {
                            throw std::domain_error("T=" + std::to_string(T) +
                                                    " is not a multiple of m=" +
                                                    std::to_string(m));
                        }
                        design = optimal_regular_design(T / m, m);
                    } catch (const std::exception& e) {
                        design_error = e.what();
                    }
                    if (!design_error.empty()) {
                        for (auto& row : cell) {
                            row.failures = config.replications;
                            row.error = design_error;
                            row.rate = std::nan("");
                            row.se = std::nan("");
                        }
                        rows.insert(rows.end(), cell.begin(), cell.end());
                        continue;
                    }
                    const auto dgp = scenario_dgp(scenario, delta, noise, m);

                    // outcome[r * K + k]: 1 reject, 0 accept, -1 failure.
                    const auto R = static_cast<std::size_t>(config.replications);
                    std::vector<int> outcome(R * K, 0);
                    std::vector<std::string> errors(R * K);
                    parallel_for(R, [&](std::size_t r) {
                        RngStream stream(cell_seed, r);
                        const auto path = sample_assignment(design, stream);
                        const auto y = simulate_outcomes(dgp, path, stream);
                        const std::uint64_t rep_seed = mix_seed(cell_seed, r);
                        for (std::size_t k = 0; k < K; ++k) {
                            const std::uint64_t seed = mix_seed(rep_seed, k + 1);
                            try {
                                bool reject = false;
                                switch (config.methods[k]) {
                                    case Method::crt_total: {
                                        CrtOptions o;
                                        o.draws = config.draws;
                                        o.seed = seed;
                                        const auto rep = crt_total_test(y, path, design, m, o);
                                        reject = !rep.degenerate && rep.p_value <= config.alpha;
                                        break;
                                    }
                                    case Method::frt_sharp: {
                                        const auto rep = frt_sharp_test(
                                            y, path, design, m,
                                            McOptions{config.draws, Sidedness::upper, seed});
                                        reject = !rep.degenerate && rep.p_value <= config.alpha;
                                        break;
                                    }
                                    case Method::ht_asymptotic:
                                        reject =
                                            ht_asymptotic_test(y, path, design, m, config.alpha)
                                                .reject;
                                        break;
                                    case Method::crt_carryover: {
                                        CrtOptions o;
                                        o.draws = config.draws;
                                        o.seed = seed;
                                        const auto rep = crt_carryover_test(y, path, design, m, o);
                                        reject = !rep.degenerate && rep.p_value <= config.alpha;
                                        break;
                                    }
                                    case Method::pirt: {
                                        const auto rep = pirt_test(
                                            y, path, design, PrefixScheme{holdout},
                                            McOptions{config.draws, Sidedness::upper, seed});
                                        reject = !rep.degenerate && rep.p_value <= config.alpha;
                                        break;
                                    }
                                    case Method::sequential_m: {
                                        CrtOptions o;
                                        o.draws = config.draws;
                                        o.seed = seed;
                                        const auto res = sequential_m(y, path, design, config.alpha,
                                                                      config.m_max, o);
                                        reject = res.m_hat >= 1;
                                        break;
                                    }
                                }
                                outcome[r * K + k] = reject ? 1 : 0;
                            } catch (const std::exception& e) {
                                outcome[r * K + k] = -1;
                                errors[r * K + k] = e.what();
                            }
                        }
                    });

                    for (std::size_t k = 0; k < K; ++k) {
                        auto& row = cell[k];
                        int hits = 0;
                        for (std::size_t r = 0; r < R; ++r) {
                            const int o = outcome[r * K + k];
                            if (o < 0) {
                                if (row.error.empty()) row.error = errors[r * K + k];
                                ++row.failures;
                            } else {
                                ++row.completed;
                                hits += o;
                            }
                        }
                        if (row.completed > 0) {
                            row.rate = static_cast<double>(hits) / row.completed;
                            row.se = std::sqrt(row.rate * (1.0 - row.rate) / row.completed);
                        } else {
                            row.rate = std::nan("");
                            row.se = std::nan("");
                        }
                    }
                    rows.insert(rows.end(), cell.begin(), cell.end());
                }
            }
        }
    }
    return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
    std::ostringstream os;
    os << "scenario,T,delta,noise,method,rate,se\n";
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.T << ',' << format_delta(r.delta) << ',' << r.noise << ','
           << to_string(r.method) << ',' << fixed(r.rate, 6) << ',' << fixed(r.se, 6) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// SVG panels
// ---------------------------------------------------------------------------

std::vector<std::string> write_study_svgs(const std::vector<StudyRow>& rows, double alpha,
                                          const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::map<std::pair<std::string, std::string>, std::vector<const StudyRow*>> panels;
    for (const auto& r : rows) panels[{r.scenario, r.noise}].push_back(&r);

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr double W = 640, H = 400, left = 60, right = 200, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;

    std::vector<std::string> written;
    for (const auto& [key, members] : panels) {
        int tmin = members.front()->T, tmax = tmin;
        std::map<std::string, std::vector<std::pair<int, double>>> lines;
        for (const auto* r : members) {
            tmin = std::min(tmin, r->T);
            tmax = std::max(tmax, r->T);
            if (std::isfinite(r->rate)) {
                lines[to_string(r->method) + " d=" + format_delta(r->delta)].push_back({r->T, r->rate});
            }
        }
        const auto sx = [&](double T) {
            return tmax == tmin ? left + pw / 2 : left + pw * (T - tmin) / (tmax - tmin);
        };
        const auto sy = [&](double v) { return top + ph * (1.0 - v); };

        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
            << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << key.first
            << " scenario, " << key.second << " noise</text>\n";
        svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\""
            << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double v = i / 4.0;
            svg << "<text x=\"" << left - 8 << "\" y=\"" << sy(v) + 4
                << "\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
        }
        std::vector<int> ts;
        for (const auto* r : members) ts.push_back(r->T);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (const int T : ts) {
            svg << "<text x=\"" << sx(T) << "\" y=\"" << top + ph + 16
                << "\" text-anchor=\"middle\">" << T << "</text>\n";
        }
        svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10
            << "\" text-anchor=\"middle\">T</text>\n";
        svg << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << sy(alpha)
            << "\" y2=\"" << sy(alpha) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
        std::size_t c = 0;
        for (auto& [label, pts] : lines) {
            std::sort(pts.begin(), pts.end());
            const char* color = palette[c % 8];
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [T, v] : pts) svg << sx(T) << ',' << sy(v) << ' ';
            svg << "\"/>\n";
            for (const auto& [T, v] : pts) {
                svg << "<circle cx=\"" << sx(T) << "\" cy=\"" << sy(v) << "\" r=\"2.5\" fill=\""
                    << color << "\"/>\n";
            }
            const double ly = top + 14.0 * static_cast<double>(c);
            svg << "<text x=\"" << left + pw + 10 << "\" y=\"" << ly + 4 << "\" fill=\"" << color
                << "\">" << label << "</text>\n";
            ++c;
        }
        svg << "</svg>\n";

        const auto path = (fs::path(dir) / (key.first + "_" + key.second + ".svg")).string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << svg.str();
        written.push_back(path);
    }
    return written;
}

}  // namespace swx
