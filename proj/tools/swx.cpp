// swx: randomization tests, simulations and power calculations for
// switchback experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swx/design.hpp"
#include "swx/power.hpp"
#include "swx/report.hpp"
#include "swx/sections.hpp"
#include "swx/simlab.hpp"
#include "swx/study.hpp"
#include "swx/test_anticipation.hpp"
#include "swx/test_carryover.hpp"
#include "swx/test_total.hpp"
#include "swx/test_weaknull.hpp"

namespace {

using swx::AssignmentPath;
using swx::SwitchbackDesign;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitDegenerate = 2;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void emit(const nlohmann::ordered_json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw InputError("cannot write " + out);
    f << text;
}

// ---------------------------------------------------------------------------
// Experiment log: CSV with header t,w,y and rows t = 1..T.
// ---------------------------------------------------------------------------
struct ExperimentLog {
    AssignmentPath path;
    std::vector<double> y;
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

ExperimentLog read_log(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "t,w,y") {
        throw InputError(file + ": header must be 't,w,y'");
    }
    ExperimentLog log;
    int row = 0;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        ++row;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != 3) {
            throw InputError(file + ": row " + std::to_string(row) + " must have 3 fields");
        }
        try {
            std::size_t pos = 0;
            const int t = std::stoi(cells[0], &pos);
            if (pos != cells[0].size() || t != row) throw std::invalid_argument("t");
            if (cells[1] != "0" && cells[1] != "1") throw std::invalid_argument("w");
            const double y = std::stod(cells[2], &pos);
            if (pos != cells[2].size()) throw std::invalid_argument("y");
            log.path.w.push_back(cells[1] == "1" ? 1 : 0);
            log.y.push_back(y);
        } catch (const std::invalid_argument& e) {
            const std::string what = e.what();
            const std::string field = what == "w" ? "w must be 0 or 1"
                                      : what == "y" ? "y is not a number"
                                                    : "t must equal the row number (contiguous from 1)";
            throw InputError(file + ": row " + std::to_string(row) + ": " + field);
        } catch (const std::out_of_range&) {
            throw InputError(file + ": row " + std::to_string(row) + ": value out of range");
        }
    }
    if (log.y.empty()) throw InputError(file + ": no data rows");
    return log;
}

SwitchbackDesign read_design(const std::string& file, const ExperimentLog& log) {
    SwitchbackDesign d;
    try {
        d = swx::parse_design(read_file(file));
        swx::validate(d);
    } catch (const swx::DesignError& e) {
        throw InputError(file + ": " + e.what());
    }
    if (d.horizon != log.path.size()) {
        throw InputError("design T=" + std::to_string(d.horizon) + " but the data has " +
                         std::to_string(log.path.size()) + " rows");
    }
    if (const auto bad = swx::first_block_violation(d, log.path)) {
        throw InputError("assignment is not constant within design block " +
                         std::to_string(swx::block_of(d, *bad)) + " (row " +
                         std::to_string(*bad) + ")");
    }
    return d;
}

// ---------------------------------------------------------------------------
// Sweep syntax: name=a..b
// ---------------------------------------------------------------------------
std::vector<int> parse_sweep(const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dots = spec.find("..");
    if (eq == std::string::npos || dots == std::string::npos || spec.substr(0, eq) != "r") {
        throw InputError("--sweep expects r=a..b");
    }
    const int a = std::stoi(spec.substr(eq + 1, dots - eq - 1));
    const int b = std::stoi(spec.substr(dots + 2));
    if (a < 1 || b < a) throw InputError("--sweep range must satisfy 1 <= a <= b");
    std::vector<int> out;
    for (int r = a; r <= b; ++r) out.push_back(r);
    return out;
}

swx::CarryMoments moments_from_json(const nlohmann::json& j) {
    if (!j.contains("moments")) {
        throw InputError("carryover power needs a 'moments' object or --estimate-moments");
    }
    const auto& mj = j.at("moments");
    swx::CarryMoments m;
    try {
        m.e_y1_sq = mj.at("E_y1_sq").get<double>();
        m.e_y0_sq = mj.at("E_y0_sq").get<double>();
        m.e_y1_y0 = mj.at("E_y1_y0").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("moments: ") + e.what());
    }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomization tests for switchback experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(swx::kVersion));

    // --- test ---------------------------------------------------------------
    auto* test = app.add_subcommand("test", "Run a randomization test on an experiment log");
    test->require_subcommand(1);
    std::string data, design_file, out, sided = "upper";
    int m = 2, pool = 0, holdout = -1, session_length = 0, m_max = 4;
    double alpha = 0.05;
    std::size_t draws = 500;
    std::uint64_t seed = 1;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--data", data, "CSV with header t,w,y")->required();
        sub->add_option("--design", design_file, "design JSON")->required();
        sub->add_option("--draws", draws, "Monte Carlo draws M");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--alpha", alpha, "level used for the reject flag");
        sub->add_option("--sided", sided, "upper or two-sided");
        sub->add_option("--out", out, "write JSON here instead of stdout");
    };
    auto* t_total = test->add_subcommand("total", "CRT for no total effect");
    add_common(t_total);
    t_total->add_option("--m", m, "carryover horizon");
    t_total->add_option("--pool", pool, "pool r consecutive blocks per section");
    auto* t_carry = test->add_subcommand("carryover", "CRT for m-carryover");
    add_common(t_carry);
    t_carry->add_option("--m", m, "carryover horizon under test");
    t_carry->add_option("--pool", pool, "pool r consecutive blocks per section");
    auto* t_seq = test->add_subcommand("sequential", "sequential estimate of the horizon");
    add_common(t_seq);
    t_seq->add_option("--m-max", m_max, "largest horizon tested is m_max - 1");
    auto* t_ant = test->add_subcommand("anticipation", "PIRT for non-anticipation");
    add_common(t_ant);
    t_ant->add_option("--m", m, "horizon used for the default holdout 2m+1");
    t_ant->add_option("--holdout", holdout, "holdout length L");
    auto* t_weak = test->add_subcommand("weaknull", "studentized CRTs for session weak nulls");
    add_common(t_weak);
    t_weak->add_option("--m", m, "burn-in per session");
    t_weak->add_option("--session-length", session_length, "session length L")->required();

    // --- simulate -----------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study");
    std::string config_file, svg_dir;
    bool no_svg = false;
    sim->add_option("config", config_file, "study config JSON")->required();
    sim->add_option("--out", out, "CSV output path (stdout if omitted)");
    sim->add_option("--svg-dir", svg_dir, "directory for SVG panels");
    sim->add_flag("--no-svg", no_svg, "skip SVG output");

    // --- power --------------------------------------------------------------
    auto* pow = app.add_subcommand("power", "Analytic power approximations");
    pow->require_subcommand(1);
    std::string inputs_file, sweep;
    bool estimate = false;
    int sims = 2000;
    auto* p_total = pow->add_subcommand("total", "total-effect test power");
    auto* p_carry = pow->add_subcommand("carryover", "carryover test power");
    for (auto* sub : {p_total, p_carry}) {
        sub->add_option("inputs", inputs_file, "power inputs JSON")->required();
        sub->add_option("--sweep", sweep, "grid such as r=1..4");
        sub->add_option("--out", out, "write JSON here instead of stdout");
    }
    p_carry->add_flag("--estimate-moments", estimate, "estimate moments by simulation first");
    p_carry->add_option("--sims", sims, "simulations for the moment estimate");
    p_carry->add_option("--seed", seed, "seed for the moment estimate");

    // --- design -------------------------------------------------------------
    auto* des = app.add_subcommand("design", "Design utilities");
    des->require_subcommand(1);
    auto* d_opt = des->add_subcommand("optimal", "optimal regular design");
    int n_blocks = 0;
    d_opt->add_option("--n", n_blocks, "n (T = n m)")->required();
    d_opt->add_option("--m", m, "carryover horizon")->required();
    d_opt->add_option("--out", out, "write JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (test->parsed()) {
            const auto side = swx::parse_sidedness(sided);
            const auto log = read_log(data);
            const auto design = read_design(design_file, log);
            nlohmann::ordered_json j;
            bool degenerate = false;
            if (t_total->parsed() || t_carry->parsed()) {
                swx::CrtOptions o;
                o.draws = draws;
                o.seed = seed;
                o.sidedness = side;
                const auto family =
                    pool > 0 ? swx::pooled_family(design, pool, m) : swx::greedy_pool(design, m);
                const auto rep = t_total->parsed()
                                     ? swx::crt_total_test(log.y, log.path, design, family, o)
                                     : swx::crt_carryover_test(log.y, log.path, design, family, m, o);
                j = swx::report_to_json(rep);
                j["m"] = m;
                j["reject"] = !rep.degenerate && rep.p_value <= alpha;
                degenerate = rep.degenerate;
            } else if (t_seq->parsed()) {
                swx::CrtOptions o;
                o.draws = draws;
                o.seed = seed;
                o.sidedness = side;
                const auto res = swx::sequential_m(log.y, log.path, design, alpha, m_max, o);
                j = swx::sequential_to_json(res, alpha, o);
            } else if (t_ant->parsed()) {
                const swx::PrefixScheme scheme{holdout >= 0 ? holdout : 2 * m + 1};
                const auto rep = swx::pirt_test(log.y, log.path, design, scheme,
                                                swx::McOptions{draws, side, seed});
                j = swx::report_to_json(rep);
                j["holdout"] = scheme.holdout;
                j["reject"] = !rep.degenerate && rep.p_value <= alpha;
                degenerate = rep.degenerate;
            } else {
                swx::SessionFrame frame;
                try {
                    frame = swx::build_session_frame(log.y, log.path, design, session_length, m);
                } catch (const std::invalid_argument& e) {
                    throw InputError(e.what());
                }
                const swx::McOptions o{draws, side, seed};
                const auto focal = swx::crt_weaknull(frame, o);
                const auto positions = swx::position_tests(frame, o);
                const auto joint = swx::joint_f_test(frame, o);
                const auto reg = swx::crt_regression(frame, o);
                j = swx::weaknull_to_json(focal, positions, joint);
                j["regression"] = {{"estimate", reg.observed.estimate},
                                   {"variance", reg.observed.variance},
                                   {"statistic", reg.observed.statistic},
                                   {"p_value", reg.test.p_value},
                                   {"degenerate", reg.test.degenerate}};
                degenerate = focal.test.degenerate;
            }
            emit(j, out);
            return degenerate ? kExitDegenerate : kExitOk;
        }

        if (sim->parsed()) {
            const auto config = swx::study_config_from_json(read_json(config_file));
            const auto rows = swx::run_study(config);
            const auto csv = swx::study_csv(rows);
            if (out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream f(out);
                if (!f) throw InputError("cannot write " + out);
                f << csv;
            }
            for (const auto& r : rows) {
                if (r.failures > 0) {
                    std::cerr << "cell " << r.scenario << " T=" << r.T << " delta=" << r.delta
                              << " " << r.noise << " " << swx::to_string(r.method) << ": "
                              << r.failures << " failures (" << r.error << ")\n";
                }
            }
            if (!no_svg && !svg_dir.empty()) {
                for (const auto& p : swx::write_study_svgs(rows, config.alpha, svg_dir)) {
                    std::cerr << "wrote " << p << "\n";
                }
            }
            return kExitOk;
        }

        if (pow->parsed()) {
            const auto raw = read_json(inputs_file);
            const auto base = swx::power_inputs_from_json(raw);
            const std::vector<int> rs = sweep.empty() ? std::vector<int>{base.r} : parse_sweep(sweep);
            nlohmann::ordered_json records = nlohmann::ordered_json::array();
            for (const int r : rs) {
                auto in = base;
                in.r = r;
                nlohmann::ordered_json rec;
                rec["r"] = r;
                if (p_total->parsed()) {
                    rec.update(swx::to_json(swx::power_total(in)));
                } else {
                    swx::CarryMoments mom;
                    if (estimate) {
                        const auto dgp = swx::distributed_lag_dgp(in.mu, in.beta, in.rho, in.sigma_u);
                        const swx::PooledSetup setup{in.L, in.r, in.m, in.M_blocks, in.q};
                        mom = swx::estimate_carry_moments(dgp, setup, sims, seed);
                        rec["moments"] = swx::to_json(mom);
                    } else {
                        mom = moments_from_json(raw);
                    }
                    rec.update(swx::to_json(swx::power_carryover(in, mom)));
                }
                records.push_back(rec);
            }
            emit(sweep.empty() ? records.at(0) : records, out);
            return kExitOk;
        }

        if (des->parsed()) {
            emit(swx::design_to_json(swx::optimal_regular_design(n_blocks, m)), out);
            return kExitOk;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
