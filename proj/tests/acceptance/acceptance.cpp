// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pathsim/brownian.hpp"
#include "pathsim/epsilon.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/euler.hpp"
#include "pathsim/exact.hpp"
#include "pathsim/intersection.hpp"
#include "pathsim/jumps.hpp"
#include "pathsim/model.hpp"
#include "pathsim/series.hpp"
#include "support/stats.hpp"

using namespace pathsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Raw bracket monotonicity for every series family.

// S_k as delivered (SeriesCursor, the sequence eval(k) returns) must nest
// exactly; a raw deviation beyond rounding raises ContractViolation and
// counts as a failure. Raw deviations are reported for information.
struct BracketAudit {
    std::size_t series = 0, violations = 0, raw_deviations = 0;
    double worst_raw = 0.0;

    void check(const AlternatingSeries& s) {
        ++series;
        const std::size_t k0 = s.start_index();
        Bracket raw_prev = s.raw_bracket(k0);
        for (std::size_t k = k0; k <= k0 + 50; ++k) {
            const Bracket raw = s.raw_bracket(k + 1);
            const double v = std::max({raw_prev.lower - raw.lower, raw.upper - raw_prev.upper, raw.lower - raw.upper});
            if (v > 0.0) {
                ++raw_deviations;
                worst_raw = std::max(worst_raw, v);
            }
            raw_prev = raw;
        }
        try {
            SeriesCursor c(s);
            Bracket prev = c.current();
            if (!(prev.lower <= prev.upper)) ++violations;
            for (std::size_t k = k0; k <= k0 + 50; ++k) {
                c.advance();
                const Bracket& cur = c.current();
                if (!(cur.lower >= prev.lower && cur.upper <= prev.upper && cur.lower <= cur.upper)) ++violations;
                prev = cur;
            }
        } catch (const ContractViolation&) {
            ++violations;
        }
    }
};

Bridge random_bridge(Rng& rng) {
    const double s = rng.uniform(0.0, 2.0), T = std::exp(rng.uniform(-4.0, 1.5));
    return {s, s + T, rng.normal() * std::sqrt(T), rng.normal() * std::sqrt(T)};
}

std::vector<Knot> random_knots(const Bridge& b, int n, Rng& rng) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(rng.uniform(b.s, b.t));
    std::sort(t.begin(), t.end());
    std::vector<Knot> k;
    for (double q : t) k.push_back({q, b.x + rng.normal() * std::sqrt(b.t - b.s)});
    return k;
}

Outcome criterion1() {
    Rng rng(101);
    std::map<std::string, BracketAudit> audit;
    for (int i = 0; i < 500; ++i) {
        const Bridge b = random_bridge(rng);
        const double sd = std::sqrt(b.t - b.s), lo = std::min(b.x, b.y), hi = std::max(b.x, b.y);
        audit["gamma"].check(gamma_series(b, lo - rng.uniform(0.0, 2.0) * sd, hi + rng.uniform(0.0, 2.0) * sd));
        const double m = lo - rng.uniform(0.0, 2.0) * sd;
        audit["delta1"].check(delta1_series(b, m, hi + rng.uniform(0.0, 2.0) * sd));
        const Bridge b2 = rng.bernoulli(0.5) ? Bridge{b.s, b.t, lo, hi} : Bridge{b.s, b.t, hi, lo};
        audit["delta2"].check(delta2_series(b2, lo, hi + rng.uniform(0.0, 2.0) * sd));
        for (int n = 0; n <= 2; ++n) {
            const auto knots = random_knots(b, n, rng);
            double klo = lo, khi = hi;
            for (const Knot& k : knots) {
                klo = std::min(klo, k.w);
                khi = std::max(khi, k.w);
            }
            const double l_hi = klo - rng.uniform(0.0, 0.5) * sd, l_lo = l_hi - rng.uniform(0.01, 1.5) * sd;
            const double u_lo = khi + rng.uniform(0.0, 0.5) * sd, u_hi = u_lo + rng.uniform(0.01, 1.5) * sd;
            audit["rho"].check(rho_series(b, knots, l_lo, l_hi, u_lo, u_hi));
            std::vector<BandPair> bands;
            double s = b.s, x = b.x;
            for (std::size_t j = 0; j <= knots.size(); ++j) {
                const double t = j < knots.size() ? knots[j].t : b.t, y = j < knots.size() ? knots[j].w : b.y;
                const double psd = std::sqrt(t - s), plo = std::min(x, y), phi = std::max(x, y);
                const double mh = plo - rng.uniform(0.0, 0.5) * psd, Ml = phi + rng.uniform(0.0, 0.5) * psd;
                bands.push_back({mh - rng.uniform(0.01, 1.5) * psd, mh, Ml, Ml + rng.uniform(0.01, 1.5) * psd});
                s = t;
                x = y;
            }
            audit["beta"].check(beta_series(b, knots, bands));
        }
    }
    bool ok = true;
    std::string detail;
    for (const auto& [name, a] : audit) {
        ok = ok && a.violations == 0;
        detail += fmt("%s: %zu series, %zu violations (raw rounding deviations %zu, worst %.2g); ", name.c_str(),
                      a.series, a.violations, a.raw_deviations, a.worst_raw);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------
// 2. gamma events against a fine-mesh bridge containment oracle.

// Bridge on a mesh, with the exact single-barrier crossing probability of
// each step's sub-bridge; returns the conditional survival probability.
double mesh_survival(const Bridge& b, double l, double u, double mesh, Rng& rng) {
    const double T = b.t - b.s;
    const auto n = static_cast<std::size_t>(std::llround(T / mesh));
    const double h = T / static_cast<double>(n);
    double a = b.x, surv = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = T - h * static_cast<double>(i);
        const double next = i + 1 == n ? b.y : a + h / tau * (b.y - a) + std::sqrt(h * (tau - h) / tau) * rng.normal();
        if (next <= l || next >= u) return 0.0;
        const double up = std::exp(-2.0 * (u - a) * (u - next) / h), down = std::exp(-2.0 * (a - l) * (next - l) / h);
        surv *= std::max(0.0, 1.0 - up - down);
        if (surv < 1e-300) return 0.0;
        a = next;
    }
    return surv;
}

Outcome criterion2() {
    Rng prm(201);
    const int N = 100000;
    int passed = 0;
    double worst = 0.0;
    for (int set = 0; set < 20; ++set) {
        const double T = prm.uniform(0.2, 1.5);
        const Bridge b{0.0, T, prm.normal(0.0, std::sqrt(T / 2)), prm.normal(0.0, std::sqrt(T / 2))};
        const double l = std::min(b.x, b.y) - prm.uniform(0.1, 1.0) * std::sqrt(T);
        const double u = std::max(b.x, b.y) + prm.uniform(0.1, 1.0) * std::sqrt(T);
        const AlternatingSeries g = gamma_series(b, l, u);
        Rng ev = Rng::stream(202, set), orc = Rng::stream(203, set);
        int hits = 0;
        for (int i = 0; i < N; ++i) hits += series_event(g, ev);
        std::vector<double> surv(N);
        for (double& s : surv) s = mesh_survival(b, l, u, 1e-3, orc);
        const double p = static_cast<double>(hits) / N;
        const auto o = teststats::mean_se(surv);
        const double se = std::sqrt(p * (1 - p) / N + o.se * o.se);
        const double z = std::abs(p - o.mean) / se;
        worst = std::max(worst, z);
        if (z <= 3.0) ++passed;
    }
    return {passed == 20, fmt("%d/20 parameter sets within 3 s.e.; largest |z| %.2f", passed, worst)};
}

// ---------------------------------------------------------------------------
// 3. Minimum law.

Outcome criterion3() {
    Rng rng(301);
    const int N = 100000;
    int hits = 0;
    for (int i = 0; i < N; ++i) hits += sample_min({0.0, 1.0, 0.0, 0.0}, -INFINITY, 0.0, rng).value <= -1.0;
    const double p = static_cast<double>(hits) / N, target = std::exp(-2.0);
    const double se = std::sqrt(target * (1 - target) / N);
    const double z = (p - target) / se;
    return {std::abs(z) <= 3.0, fmt("P(min <= -1) = %.5f vs %.5f, z = %.2f", p, target, z)};
}

// ---------------------------------------------------------------------------
// 4. UEA and AUEA on OU.

Outcome criterion4() {
    const DiffusionModel m = ou_model(0.0, 1.0);
    const double sd = std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
    auto cdf = [&](double x) { return teststats::norm_cdf(x, 0.0, sd); };
    const int N = 10000;
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        Rng ru = Rng::stream(400 + seed, 0), ra = Rng::stream(400 + seed, 1);
        std::vector<double> u(N), a(N);
        for (double& x : u) x = run_uea(m, ru).terminal();
        for (double& x : a) x = run_auea(m, ra).terminal();
        const double pu = teststats::ks_pvalue(u, cdf), pa = teststats::ks_pvalue(a, cdf),
                     p2 = teststats::ks2_pvalue(u, a);
        ok = ok && pu > 0.01 && pa > 0.01 && p2 > 0.01;
        detail += fmt("seed %d: UEA p=%.3f AUEA p=%.3f two-sample p=%.3f; ", int(seed), pu, pa, p2);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------
// 5. AUEA needs no more skeletal points than UEA.

Outcome criterion5() {
    const DiffusionModel m = ou_model(0.0, 1.0);
    const int N = 10000;
    std::vector<double> d(N), ku(N), ka(N);
    for (int i = 0; i < N; ++i) {
        Rng ru = Rng::stream(501, i), ra = Rng::stream(501, i);
        ku[i] = static_cast<double>(run_uea(m, ru).stats.kappa);
        ka[i] = static_cast<double>(run_auea(m, ra).stats.kappa);
        d[i] = ka[i] - ku[i];
    }
    const auto md = teststats::mean_se(d);
    return {md.mean <= 3.0 * md.se,
            fmt("mean kappa AUEA %.4f, UEA %.4f, paired difference %.4f (s.e. %.4f)", teststats::mean_se(ka).mean,
                teststats::mean_se(ku).mean, md.mean, md.se)};
}

// ---------------------------------------------------------------------------
// 6. Jump diffusions against the Euler oracle.

Outcome criterion6() {
    const int N = 10000, perms = 199;
    auto compare = [&](const Model& m, const std::function<JumpSkeleton(Rng&)>& run, std::uint64_t seed) {
        std::vector<teststats::Point2> ex(N), eu(N);
        for (int i = 0; i < N; ++i) {
            Rng r = Rng::stream(seed, i);
            const JumpSkeleton sk = run(r);
            ex[i] = {sk.terminal, static_cast<double>(sk.jump_count())};
        }
        for (int i = 0; i < N; ++i) {
            Rng r = Rng::stream(seed + 1, i);
            const EulerSample s = euler_path(m, 1e-4, r);
            eu[i] = {s.terminal, static_cast<double>(s.jumps)};
        }
        Rng pr(seed + 2);
        return teststats::energy_pvalue(ex, eu, perms, pr);
    };
    const Model app1 = build_model(preset_config("app1")), app2 = build_model(preset_config("app2"));
    const double p1 = compare(app1, [&](Rng& r) { return run_bjea(app1, InnerAlgo::AUEA, r); }, 601);
    const double p2 = compare(app2, [&](Rng& r) { return run_aujea(app2, r); }, 611);
    return {p1 > 0.01 && p2 > 0.01,
            fmt("energy permutation p: BJEA/AUEA on app1 %.3f, AUJEA on app2 %.3f (%d permutations)", p1, p2, perms)};
}

// ---------------------------------------------------------------------------
// 7. Epsilon-strong guarantees.

std::vector<double> probe_times(const BoundingProcess& bp) {
    std::vector<double> g;
    for (const Cell& c : bp.cells) g.insert(g.end(), {c.s(), 0.5 * (c.s() + c.t()), c.t()});
    return g;
}

Outcome criterion7() {
    std::size_t nest_bad = 0, sandwich_bad = 0, tol_bad = 0, refinements = 0, restored = 0;
    std::map<int, std::vector<double>> l1;
    const Model app2 = build_model(preset_config("app2"));
    auto nested = [&](const BoundingProcess& before, const BoundingProcess& after) {
        ++refinements;
        for (double u : probe_times(after))
            if (after.lower_at(u) < before.lower_at(u) || after.upper_at(u) > before.upper_at(u)) return false;
        for (double u : probe_times(before))
            if (after.lower_at(u) < before.lower_at(u) || after.upper_at(u) > before.upper_at(u)) return false;
        return true;
    };
    auto sandwich = [&](BoundingProcess& bp, Rng& rng, int k) {
        std::vector<Knot> pts;
        for (int j = 0; j < k; ++j) {
            const double t = rng.uniform(bp.start_time(), bp.end_time());
            const double lo = bp.lower_at(t), hi = bp.upper_at(t);
            const double w = restore(bp, t, rng);
            ++restored;
            if (w < lo || w > hi) ++sandwich_bad;
            pts.push_back({t, w});
        }
        for (const Knot& p : pts)
            if (p.w < bp.lower_at(p.t) || p.w > bp.upper_at(p.t)) ++sandwich_bad;
    };
    for (int seed = 0; seed < 200; ++seed) {
        Rng rng = Rng::stream(701, seed);
        BoundingProcess bp = eps_strong_bm(1.0, 0.0, RefinePolicy::with_rounds(1), rng);
        for (int n = 2; n <= 8; ++n) {
            const BoundingProcess before = bp;
            bisect_round(bp, rng);
            if (!nested(before, bp)) ++nest_bad;
            if (n % 2 == 0) l1[n].push_back(bp.l1_gap());
        }
        sandwich(bp, rng, 20);
        Rng jr = Rng::stream(702, seed);
        BoundingProcess jd = eps_strong_jump_diffusion(app2, RefinePolicy::with_rounds(1), jr);
        for (int n = 2; n <= 5; ++n) {
            const BoundingProcess before = jd;
            bisect_round(jd, jr);
            if (!nested(before, jd)) ++nest_bad;
        }
        sandwich(jd, jr, 20);
    }
    double worst_tol = 0.0;
    for (double eps : {0.25, 0.15, 0.1, 0.05}) {
        for (int seed = 0; seed < 20; ++seed) {
            Rng rng = Rng::stream(703, seed);
            BoundingProcess bp = eps_strong_jump_diffusion(app2, RefinePolicy::with_tolerance(eps), rng);
            worst_tol = std::max(worst_tol, bp.sup_gap() / eps);
            if (bp.sup_gap() > eps) ++tol_bad;
            sandwich(bp, rng, 5);
        }
    }
    std::vector<double> scaled;
    for (int n : {2, 4, 6, 8}) scaled.push_back(std::pow(2.0, n / 2.0) * teststats::mean_se(l1[n]).mean);
    bool ratios_ok = true;
    std::string ratios;
    for (std::size_t i = 1; i < scaled.size(); ++i) {
        const double r = scaled[i] / scaled[i - 1];
        ratios_ok = ratios_ok && r >= 0.5 && r <= 2.0;
        ratios += fmt(" %.3f", r);
    }
    const bool ok = nest_bad == 0 && sandwich_bad == 0 && tol_bad == 0 && ratios_ok;
    return {ok, fmt("(a) %zu/%zu refinements not nested; (b) %zu/%zu restored points outside; (c) %zu tolerance "
                    "misses (max gap/eps %.3f); (d) scaled L1 ratios%s",
                    nest_bad, refinements, sandwich_bad, restored, tol_bad, worst_tol, ratios.c_str())};
}

// ---------------------------------------------------------------------------
// 8. Restoration order invariance.

Outcome criterion8() {
    const DiffusionModel m = ou_model(0.0, 1.0);
    const int N = 10000;
    const double target = 0.5;
    std::vector<double> first(N), last(N);
    for (int i = 0; i < N; ++i) {
        for (int order = 0; order < 2; ++order) {
            Rng rng = Rng::stream(801 + order, i);
            Skeleton sk = run_auea(m, rng);
            std::vector<double> others(10);
            for (double& t : others) t = rng.uniform();
            if (order == 0) first[i] = restore(sk, target, rng);
            for (double t : others) restore(sk, t, rng);
            if (order == 1) last[i] = restore(sk, target, rng);
        }
    }
    const double p = teststats::ks2_pvalue(first, last);
    const double sd = std::sqrt((1.0 - std::exp(-1.0)) / 2.0);
    auto cdf = [&](double x) { return teststats::norm_cdf(x, 0.0, sd); };
    return {p > 0.01, fmt("two-sample KS p=%.3f (vs transition law: first %.3f, last %.3f)", p,
                          teststats::ks_pvalue(first, cdf), teststats::ks_pvalue(last, cdf))};
}

// ---------------------------------------------------------------------------
// 9. Dissection frequencies.

Outcome criterion9() {
    const IntersectionLayer il{0.0, 1.0, 0.1, -0.2, -1.1, -0.6, 0.4, 0.9, LayerOrigin::None};
    const std::vector<Knot> knots{{0.4, 0.2}};
    const auto cases = dissection_cases(il, knots);
    if (cases.size() != 9) return {false, fmt("%zu cases enumerated", cases.size())};
    std::vector<double> w;
    double total = 0.0;
    for (const auto& c : cases) {
        SeriesCursor cur(c.weight);
        for (int k = 0; k < 60; ++k) cur.advance();
        w.push_back(0.5 * (cur.current().lower + cur.current().upper));
        total += w.back();
    }
    const int N = 100000;
    std::vector<int> counts(9, 0);
    Rng rng(901);
    for (int i = 0; i < N; ++i) counts[dissect(il, knots, rng).case_index]++;
    int within = 0;
    double worst = 0.0;
    for (int k = 0; k < 9; ++k) {
        const double p = w[k] / total;
        const double se = std::sqrt(p * (1 - p) / N);
        const double z = se > 0 ? std::abs(counts[k] / double(N) - p) / se : (counts[k] ? INFINITY : 0.0);
        worst = std::max(worst, z);
        if (z <= 3.0) ++within;
    }
    return {within == 9, fmt("9 cases; %d/9 cells within 3 s.e.; largest |z| %.2f", within, worst)};
}

// ---------------------------------------------------------------------------
// 10. CLI determinism.

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome criterion10() {
    const fs::path root = fs::temp_directory_path() / "pathsim_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::string> runs{
        "simulate --model app2 --algo aujea --reps 40 --seed 7",
        "simulate --model app1 --algo bjea --inner uea --reps 40 --seed 8",
        "simulate --model ou --algo uea --reps 40 --seed 9",
        "epsstrong --algo eps-jd --model app2 --rounds 4 --reps 10 --seed 10",
        "epsstrong --algo eps-bm --model zero --epsilon 0.1 --reps 10 --seed 11",
        "oracle --model app1 --oracle-mesh 0.001 --reps 20 --seed 12",
    };
    std::size_t identical = 0, files = 0;
    std::string detail;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        std::string outputs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = root / fmt("run%zu_%d", r, rep);
            const fs::path log = root / fmt("run%zu_%d.log", r, rep);
            const std::string cmd = std::string("\"") + PATHSIM_CLI_PATH + "\" " + runs[r] + " --out \"" +
                                    dir.string() + "\" > \"" + log.string() + "\" 2>&1";
            if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + runs[r]};
            std::set<std::string> names;
            for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
            for (const std::string& n : names) outputs[rep] += n + "\n" + slurp(dir / n);
            outputs[rep] += slurp(log);
            if (rep == 0) files += names.size();
        }
        if (outputs[0] == outputs[1]) ++identical;
        else detail += " differs: " + runs[r] + ";";
    }
    fs::remove_all(root);
    return {identical == runs.size(),
            fmt("%zu/%zu runs byte-identical over %zu output files", identical, runs.size(), files) + detail};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8,
                                                         criterion9, criterion10};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d: %s  %s [%.0f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
