#include "pathsim/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pathsim/epsilon.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/exact.hpp"
#include "pathsim/io.hpp"
#include "pathsim/jumps.hpp"

namespace pathsim {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kAlgos{"bea", "uea", "auea", "bjea", "ujea", "aujea", "eps-bm", "eps-jd"};

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own slot, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

fs::path output_dir(const RunConfig& cfg) {
    std::string dir = cfg.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("PATHSIM_OUT");
        dir = env && *env ? env : "pathsim_out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << text;
}

std::string rep_name(const char* stem, std::size_t i, const char* ext) {
    std::ostringstream os;
    os << stem << '_' << std::setw(6) << std::setfill('0') << i << ext;
    return os.str();
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return r;
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return r;
}

ExactOptions exact_options(const Model& m) {
    ExactOptions opt;
    opt.layers.theta = m.config.theta;
    return opt;
}

InnerAlgo inner_from(const std::string& s) {
    if (s == "bea") return InnerAlgo::BEA;
    if (s == "uea") return InnerAlgo::UEA;
    if (s == "auea") return InnerAlgo::AUEA;
    throw ConfigError("unknown inner algorithm '" + s + "' (bea|uea|auea)");
}

struct RepResult {
    std::string record;
    double terminal = 0.0;
    std::size_t jumps = 0, kappa = 0, proposals = 0, segments = 0;
};

void add_stats(RepResult& r, const Skeleton& sk) {
    r.kappa += sk.stats.kappa;
    r.proposals += sk.stats.proposals;
    ++r.segments;
}

RepResult simulate_one(const RunConfig& cfg, const Model& m, Rng& rng) {
    const ExactOptions opt = exact_options(m);
    RepResult r;
    const std::string& a = cfg.algo;
    if (a == "bea" || a == "uea" || a == "auea") {
        const Skeleton sk = a == "bea" ? run_bea(m.diffusion, rng, opt)
                            : a == "uea" ? run_uea(m.diffusion, rng, opt)
                                         : run_auea(m.diffusion, rng, opt);
        add_stats(r, sk);
        r.terminal = sk.terminal();
        r.record = skeleton_to_json(sk);
        return r;
    }
    const JumpSkeleton sk = a == "bjea" ? run_bjea(m, inner_from(cfg.inner), rng, opt)
                            : a == "ujea" ? run_ujea(m, rng, opt)
                                          : run_aujea(m, rng, opt);
    for (const Skeleton& seg : sk.segments) add_stats(r, seg);
    r.terminal = sk.terminal;
    r.jumps = sk.jump_count();
    r.record = jump_skeleton_to_json(sk);
    return r;
}

using KV = std::pair<std::string, std::string>;

std::string json_summary(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string s = "{\n";
    for (std::size_t i = 0; i < kv.size(); ++i)
        s += "  \"" + kv[i].first + "\": " + kv[i].second + (i + 1 < kv.size() ? ",\n" : "\n");
    return s + "}\n";
}

std::string json_str(const std::string& s) { return "\"" + s + "\""; }

} // namespace

Model resolve_model(const RunConfig& cfg) {
    ModelConfig mc = cfg.config_path.empty() ? preset_config(cfg.model) : load_config(cfg.config_path);
    if (cfg.horizon) {
        if (!(*cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");
        mc.horizon = *cfg.horizon;
    }
    return build_model(mc);
}

void check_compatible(const RunConfig& cfg, const Model& m) {
    const std::string& a = cfg.algo;
    if (std::find(kAlgos.begin(), kAlgos.end(), a) == kAlgos.end()) throw ConfigError("unknown algorithm '" + a + "'");
    if (cfg.reps < 1) throw ConfigError("need at least one replication");
    const bool diffusion_only = a == "bea" || a == "uea" || a == "auea";
    if (diffusion_only && m.jumps)
        throw ConfigError("model '" + m.config.model + "' has jumps; use bjea, ujea or aujea");
    if ((a == "bjea" || a == "ujea" || a == "aujea") && !m.jumps)
        throw ConfigError("model '" + m.config.model + "' has no jumps; use bea, uea or auea");
    if (a == "bea" && !m.diffusion.global_phi_bounds)
        throw ConfigError("bea needs a globally bounded phi; model '" + m.config.model + "' has none");
    if (a == "bjea") {
        if (!m.jumps->globally_bounded())
            throw ConfigError("bjea needs a globally bounded jump intensity; use ujea or aujea");
        if (inner_from(cfg.inner) == InnerAlgo::BEA && !m.diffusion.global_phi_bounds)
            throw ConfigError("inner bea needs a globally bounded phi");
    }
}

SimulateSummary cmd_simulate(const RunConfig& cfg) {
    const Model m = resolve_model(cfg);
    check_compatible(cfg, m);
    if (cfg.algo == "eps-bm" || cfg.algo == "eps-jd") throw ConfigError("use the epsstrong command for " + cfg.algo);
    const fs::path dir = output_dir(cfg);
    std::vector<RepResult> res(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t i) {
        Rng rng = Rng::stream(cfg.seed, i);
        res[i] = simulate_one(cfg, m, rng);
    });

    std::string records, table = "rep,terminal,jumps,kappa,proposals\n";
    std::vector<double> term, jumps;
    SimulateSummary s;
    s.reps = cfg.reps;
    std::size_t proposals = 0, kappa = 0, segments = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const RepResult& r = res[i];
        records += r.record;
        table += std::to_string(i) + ',' + format_double(r.terminal) + ',' + std::to_string(r.jumps) + ',' +
                 std::to_string(r.kappa) + ',' + std::to_string(r.proposals) + '\n';
        term.push_back(r.terminal);
        jumps.push_back(static_cast<double>(r.jumps));
        proposals += r.proposals;
        kappa += r.kappa;
        segments += r.segments;
        s.max_kappa = std::max(s.max_kappa, r.kappa);
    }
    // One proposal loop per segment, so the rate is accepted segments per proposal.
    s.acceptance_rate = proposals ? static_cast<double>(segments) / static_cast<double>(proposals) : 0.0;
    s.mean_kappa = static_cast<double>(kappa) / static_cast<double>(cfg.reps);
    const MeanSe mt = mean_se(term), mj = mean_se(jumps);
    s.mean_terminal = mt.mean;
    s.se_terminal = mt.se;
    s.mean_jumps = mj.mean;
    s.se_jumps = mj.se;

    write_file(dir / "skeletons.jsonl", records);
    write_file(dir / "terminals.csv", table);
    write_file(dir / "summary.json",
               json_summary({{"command", json_str("simulate")},
                             {"model", json_str(m.config.model)},
                             {"algo", json_str(cfg.algo == "bjea" ? "bjea/" + cfg.inner : cfg.algo)},
                             {"seed", std::to_string(cfg.seed)},
                             {"reps", std::to_string(s.reps)},
                             {"horizon", format_double(m.diffusion.horizon)},
                             {"acceptance_rate", format_double(s.acceptance_rate)},
                             {"mean_kappa", format_double(s.mean_kappa)},
                             {"max_kappa", std::to_string(s.max_kappa)},
                             {"mean_jumps", format_double(s.mean_jumps)},
                             {"se_jumps", format_double(s.se_jumps)},
                             {"mean_terminal", format_double(s.mean_terminal)},
                             {"se_terminal", format_double(s.se_terminal)}}));
    return s;
}

void cmd_epsstrong(const RunConfig& cfg) {
    RunConfig c = cfg;
    if (c.algo != "eps-bm" && c.algo != "eps-jd") throw ConfigError("epsstrong needs --algo eps-bm or eps-jd");
    if (c.rounds.has_value() == c.epsilon.has_value()) throw ConfigError("give exactly one of --rounds or --epsilon");
    const RefinePolicy policy =
        c.rounds ? RefinePolicy::with_rounds(*c.rounds) : RefinePolicy::with_tolerance(*c.epsilon);
    const Model m = resolve_model(c);
    if (c.reps < 1) throw ConfigError("need at least one replication");
    const fs::path dir = output_dir(c);
    const bool bm = c.algo == "eps-bm";
    const std::size_t nrounds = c.rounds.value_or(0);

    struct Out {
        std::string csv;
        std::vector<double> sup, l1;
        std::size_t cells = 0;
        double max_gap = 0.0;
    };
    std::vector<Out> res(c.reps);
    parallel_for(c.reps, c.threads, [&](std::size_t i) {
        Rng rng = Rng::stream(c.seed, i);
        const ExactOptions opt = exact_options(m);
        BoundingProcess bp;
        RefinePolicy initial = policy;
        if (policy.mode == RefinePolicy::Mode::Rounds) initial.rounds = 1;
        bp = bm ? eps_strong_bm(m.diffusion.horizon, m.diffusion.start, initial, rng, opt.layers)
                : eps_strong_jump_diffusion(m, initial, rng, opt);
        Out& o = res[i];
        if (policy.mode == RefinePolicy::Mode::Rounds) {
            o.sup.push_back(bp.sup_gap());
            o.l1.push_back(bp.l1_gap());
            for (std::size_t n = 2; n <= nrounds; ++n) {
                bisect_round(bp, rng, policy.trigger_scale);
                o.sup.push_back(bp.sup_gap());
                o.l1.push_back(bp.l1_gap());
            }
        }
        o.cells = bp.cells.size();
        o.max_gap = bp.sup_gap();
        if (i < c.max_staircase_files) {
            std::ostringstream os;
            write_staircase_csv(os, bp);
            o.csv = os.str();
        }
    });

    std::vector<double> cells, gaps;
    for (std::size_t i = 0; i < res.size(); ++i) {
        if (i < c.max_staircase_files) write_file(dir / rep_name("staircase", i, ".csv"), res[i].csv);
        cells.push_back(static_cast<double>(res[i].cells));
        gaps.push_back(res[i].max_gap);
    }
    if (policy.mode == RefinePolicy::Mode::Rounds) {
        std::string table = "n,mean_sup_gap,mean_l1_gap,scaled_l1\n";
        for (std::size_t n = 1; n <= nrounds; ++n) {
            std::vector<double> sup, l1;
            for (const Out& o : res) sup.push_back(o.sup[n - 1]), l1.push_back(o.l1[n - 1]);
            const double ml1 = mean_se(l1).mean;
            table += std::to_string(n) + ',' + format_double(mean_se(sup).mean) + ',' + format_double(ml1) + ',' +
                     format_double(std::pow(2.0, 0.5 * static_cast<double>(n)) * ml1) + '\n';
        }
        write_file(dir / "convergence.csv", table);
    }
    write_file(dir / "summary.json",
               json_summary({KV{"command", json_str("epsstrong")},
                             KV{"model", json_str(bm ? std::string("brownian") : m.config.model)},
                             KV{"algo", json_str(c.algo)},
                             KV{"seed", std::to_string(c.seed)},
                             KV{"reps", std::to_string(c.reps)},
                             KV{"policy", json_str(c.rounds.has_value() ? "rounds" : "tolerance")},
                             KV{"rounds", std::to_string(nrounds)},
                             KV{"epsilon", format_double(c.epsilon.value_or(0.0))},
                             KV{"mean_cells", format_double(mean_se(cells).mean)},
                             KV{"max_gap", format_double(*std::max_element(gaps.begin(), gaps.end()))}}));
}

void cmd_oracle(const RunConfig& cfg, const EulerOracleConfig& oracle) {
    oracle.validate();
    const Model m = resolve_model(cfg);
    const fs::path dir = output_dir(cfg);
    std::vector<EulerSample> res(oracle.replications);
    parallel_for(oracle.replications, cfg.threads, [&](std::size_t i) {
        Rng rng = Rng::stream(cfg.seed, i);
        res[i] = euler_path(m, oracle.mesh, rng);
    });
    std::string table = "rep,terminal,jumps\n";
    std::vector<double> term, jumps;
    for (std::size_t i = 0; i < res.size(); ++i) {
        table += std::to_string(i) + ',' + format_double(res[i].terminal) + ',' + std::to_string(res[i].jumps) + '\n';
        term.push_back(res[i].terminal);
        jumps.push_back(static_cast<double>(res[i].jumps));
    }
    const MeanSe mt = mean_se(term), mj = mean_se(jumps);
    write_file(dir / "oracle.csv", table);
    write_file(dir / "summary.json", json_summary({{"command", json_str("oracle")},
                                                   {"approximate", std::string("true")},
                                                   {"model", json_str(m.config.model)},
                                                   {"mesh", format_double(oracle.mesh)},
                                                   {"seed", std::to_string(cfg.seed)},
                                                   {"reps", std::to_string(oracle.replications)},
                                                   {"mean_terminal", format_double(mt.mean)},
                                                   {"se_terminal", format_double(mt.se)},
                                                   {"mean_jumps", format_double(mj.mean)},
                                                   {"se_jumps", format_double(mj.se)}}));
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Exact and epsilon-strong simulation of diffusions and jump diffusions"};
    app.require_subcommand(1);
    RunConfig cfg;
    EulerOracleConfig oracle;
    double horizon = 0.0;
    std::size_t rounds = 0;
    double epsilon = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "preset: zero, constant, ou, sin, app1, app2");
        sub->add_option("--config", cfg.config_path, "key=value model file (overrides --model)");
        sub->add_option("--horizon", horizon, "override the model horizon");
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--reps", cfg.reps, "replications");
        sub->add_option("--out", cfg.out_dir, "output directory (default $PATHSIM_OUT or ./pathsim_out)");
        sub->add_option("--threads", cfg.threads, "worker threads (results do not depend on this)");
    };
    CLI::App* sim = app.add_subcommand("simulate", "exact skeletons");
    common(sim);
    sim->add_option("--algo", cfg.algo, "bea|uea|auea|bjea|ujea|aujea");
    sim->add_option("--inner", cfg.inner, "inner algorithm for bjea: bea|uea|auea");
    CLI::App* eps = app.add_subcommand("epsstrong", "epsilon-strong bounding processes");
    common(eps);
    cfg.algo = "auea";
    eps->add_option("--algo", cfg.algo, "eps-bm|eps-jd")->required();
    eps->add_option("--rounds", rounds, "number of bisection rounds");
    eps->add_option("--epsilon", epsilon, "target gap");
    CLI::App* orc = app.add_subcommand("oracle", "fine-mesh Euler reference samples (approximate)");
    common(orc);
    orc->add_option("--oracle-mesh", oracle.mesh, "Euler step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (horizon != 0.0) cfg.horizon = horizon;
        if (sim->parsed()) {
            const SimulateSummary s = cmd_simulate(cfg);
            std::cout << "reps " << s.reps << " acceptance_rate " << format_double(s.acceptance_rate)
                      << " mean_kappa " << format_double(s.mean_kappa) << " mean_jumps "
                      << format_double(s.mean_jumps) << " mean_terminal " << format_double(s.mean_terminal)
                      << '\n';
        } else if (eps->parsed()) {
            if (eps->count("--rounds")) cfg.rounds = rounds;
            if (eps->count("--epsilon")) cfg.epsilon = epsilon;
            cmd_epsstrong(cfg);
        } else {
            oracle.replications = cfg.reps;
            cmd_oracle(cfg, oracle);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace pathsim
