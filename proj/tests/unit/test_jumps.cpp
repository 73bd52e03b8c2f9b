#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "pathsim/errors.hpp"
#include "pathsim/jumps.hpp"
#include "support/stats.hpp"

using namespace pathsim;

namespace {

Model with_jumps(DiffusionModel d, JumpSpec j) {
    Model m;
    m.diffusion = std::move(d);
    m.jumps = std::move(j);
    return m;
}

JumpSpec constant_rate(double rate, bool layer_bound) {
    JumpSpec j;
    j.intensity = [rate](double) { return rate; };
    if (layer_bound)
        j.bound = LayerBound{[rate](Interval) { return rate; }};
    else
        j.bound = GlobalBound{rate};
    j.jump_size = [](double, Rng& rng) { return rng.normal(); };
    return j;
}

using Runner = std::function<JumpSkeleton(const Model&, Rng&)>;

std::vector<Runner> all_runners() {
    return {[](const Model& m, Rng& r) { return run_bjea(m, InnerAlgo::UEA, r); },
            [](const Model& m, Rng& r) { return run_bjea(m, InnerAlgo::AUEA, r); },
            [](const Model& m, Rng& r) { return run_ujea(m, r); },
            [](const Model& m, Rng& r) { return run_aujea(m, r); }};
}

void check_bookkeeping(const JumpSkeleton& sk, double T) {
    REQUIRE_FALSE(sk.segments.empty());
    CHECK(sk.horizon == T);
    CHECK(sk.segments.front().start_time() == 0.0);
    CHECK(sk.terminal == sk.segments.back().terminal());
    CHECK(sk.segments.back().end_time() == doctest::Approx(T).epsilon(1e-14));
    const bool ujea = sk.provenance.find("UJEA") != std::string::npos && sk.provenance.find("AUJEA") == std::string::npos;
    std::size_t j = 0;
    for (std::size_t i = 1; i < sk.segments.size(); ++i) {
        const Skeleton& prev = sk.segments[i - 1];
        const Skeleton& next = sk.segments[i];
        if (!ujea) CHECK(prev.end_time() == next.start_time());
        if (j < sk.jumps.size() && sk.jumps[j].time == next.start_time()) {
            CHECK(sk.jumps[j].post == next.points.front().w);
            if (!ujea) CHECK(sk.jumps[j].pre == prev.terminal());
            ++j;
        }
    }
    CHECK(j == sk.jumps.size());
    for (std::size_t k = 1; k < sk.jumps.size(); ++k) CHECK(sk.jumps[k].time > sk.jumps[k - 1].time);
}

} // namespace

TEST_CASE("no jumps reduces to the diffusion") {
    const DiffusionModel ou = ou_model(0.0, 1.0);
    const double sd = std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
    for (bool layer : {false, true}) {
        const Model m = with_jumps(ou, constant_rate(0.0, layer));
        std::vector<Runner> runners = all_runners();
        if (layer) runners.erase(runners.begin(), runners.begin() + 2);
        for (const Runner& run : runners) {
            Rng rng(61);
            std::vector<double> v(2000);
            for (double& x : v) {
                const JumpSkeleton sk = run(m, rng);
                CHECK(sk.jump_count() == 0);
                x = sk.terminal;
            }
            CHECK(teststats::ks_pvalue(v, [&](double x) { return teststats::norm_cdf(x, 0.0, sd); }) > 0.001);
        }
    }
}

TEST_CASE("constant intensity gives Poisson counts and a normal mixture") {
    const double rate = 1.5, T = 1.2;
    auto cdf = [&](double x) {
        double p = 0.0, w = std::exp(-rate * T);
        for (int k = 0; k < 40; ++k) {
            p += w * teststats::norm_cdf(x, 0.0, std::sqrt(T + k));
            w *= rate * T / (k + 1);
        }
        return p;
    };
    for (bool layer : {false, true}) {
        const Model m = with_jumps(zero_drift_model(0.0, T), constant_rate(rate, layer));
        std::vector<Runner> runners = all_runners();
        if (layer) runners.erase(runners.begin(), runners.begin() + 2);
        for (const Runner& run : runners) {
            Rng rng(62);
            const int N = 4000;
            std::vector<double> v(N), obs(15, 0.0), exp(15, 0.0);
            for (double& x : v) {
                const JumpSkeleton sk = run(m, rng);
                check_bookkeeping(sk, T);
                obs[std::min<std::size_t>(sk.jump_count(), 14)] += 1;
                x = sk.terminal;
            }
            double w = std::exp(-rate * T), acc = 0.0;
            for (int k = 0; k < 14; ++k) {
                exp[k] = N * w;
                acc += w;
                w *= rate * T / (k + 1);
            }
            exp[14] = N * (1.0 - acc);
            CHECK(teststats::chi2_pvalue(obs, exp) > 0.001);
            CHECK(teststats::ks_pvalue(v, cdf) > 0.001);
        }
    }
}

TEST_CASE("superposition matches the direct adaptive algorithm") {
    JumpSpec j;
    j.intensity = [](double x) { return 0.5 + 0.5 * x * x; };
    j.bound = LayerBound{[](Interval r) { return 0.5 + 0.5 * std::max(r.lo * r.lo, r.hi * r.hi); }};
    j.floor = 0.5;
    j.jump_size = [](double x, Rng& rng) { return rng.uniform(-0.5, 0.5) - 0.3 * x; };
    const Model m = with_jumps(ou_model(0.2, 1.5), j);
    Rng a(63), b(64), c(65);
    const int N = 3000;
    std::vector<double> ta, tb, tc;
    std::vector<int> ka, kb, kc;
    for (int i = 0; i < N; ++i) {
        const JumpSkeleton sa = run_aujea(m, a);
        const JumpSkeleton sb = superposition_wrapper(m, JumpAlgo::AUJEA, b);
        const JumpSkeleton sc = superposition_wrapper(m, JumpAlgo::UJEA, c);
        check_bookkeeping(sb, 1.5);
        CHECK(sb.provenance == "superposition/AUJEA");
        CHECK(sc.provenance == "superposition/UJEA");
        ta.push_back(sa.terminal);
        tb.push_back(sb.terminal);
        tc.push_back(sc.terminal);
        ka.push_back(static_cast<int>(sa.jump_count()));
        kb.push_back(static_cast<int>(sb.jump_count()));
        kc.push_back(static_cast<int>(sc.jump_count()));
    }
    CHECK(teststats::ks2_pvalue(ta, tb) > 0.001);
    CHECK(teststats::ks2_pvalue(ta, tc) > 0.001);
    CHECK(teststats::chi2_two_sample_pvalue(ka, kb) > 0.001);
    CHECK(teststats::chi2_two_sample_pvalue(ka, kc) > 0.001);
}

TEST_CASE("bounded and adaptive jump algorithms agree on the bounded model") {
    Model m = build_model(preset_config("app1"));
    m.diffusion.horizon = 2.0;
    Rng a(66), b(67), c(68);
    const int N = 2000;
    std::vector<double> ta, tb, tc;
    std::vector<int> ka, kb;
    for (int i = 0; i < N; ++i) {
        const JumpSkeleton sa = run_bjea(m, InnerAlgo::UEA, a);
        const JumpSkeleton sb = run_aujea(m, b);
        const JumpSkeleton sc = run_bjea(m, InnerAlgo::AUEA, c);
        CHECK(sa.provenance == "BJEA/UEA");
        ta.push_back(sa.terminal);
        tb.push_back(sb.terminal);
        tc.push_back(sc.terminal);
        ka.push_back(static_cast<int>(sa.jump_count()));
        kb.push_back(static_cast<int>(sb.jump_count()));
    }
    CHECK(teststats::ks2_pvalue(ta, tb) > 0.001);
    CHECK(teststats::ks2_pvalue(ta, tc) > 0.001);
    CHECK(teststats::chi2_two_sample_pvalue(ka, kb) > 0.001);
}

TEST_CASE("algorithm preconditions") {
    Rng rng(69);
    const Model app2 = build_model(preset_config("app2"));
    CHECK_THROWS_AS(run_bjea(app2, InnerAlgo::UEA, rng), ConfigError);
    CHECK_THROWS_AS(superposition_wrapper(app2, JumpAlgo::AUJEA, rng), ConfigError);
    CHECK_THROWS_AS(superposition_wrapper(app2, JumpAlgo::BJEA, rng), ConfigError);
    const Model app1 = build_model(preset_config("app1"));
    CHECK_THROWS_AS(run_bjea(app1, InnerAlgo::BEA, rng), ConfigError);
    Model plain;
    plain.diffusion = ou_model(0.0, 1.0);
    CHECK_THROWS_AS(run_aujea(plain, rng), ConfigError);
}

TEST_CASE("restoration of jump skeletons") {
    const Model m = build_model(preset_config("app2"));
    Rng rng(70);
    JumpSkeleton u = run_ujea(m, rng);
    CHECK_THROWS_AS(restore(u, 1.0, rng), ConfigError);
    int with_jumps = 0;
    for (int rep = 0; rep < 200; ++rep) {
        JumpSkeleton sk = run_aujea(m, rng);
        check_bookkeeping(sk, 2.0);
        CHECK(restore(sk, 0.0, rng) == m.diffusion.start);
        CHECK(restore(sk, 2.0, rng) == sk.terminal);
        for (const JumpEvent& e : sk.jumps) {
            CHECK(restore(sk, e.time, rng) == e.post);
            ++with_jumps;
        }
        for (int i = 0; i < 5; ++i) {
            const double t = rng.uniform(0.0, 2.0);
            const double w = restore(sk, t, rng);
            CHECK(std::isfinite(w));
            CHECK(restore(sk, t, rng) == w);
        }
        CHECK_THROWS_AS(restore(sk, 2.5, rng), ContractViolation);
    }
    CHECK(with_jumps > 0);
}
