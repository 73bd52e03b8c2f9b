#include <doctest.h>

#include <cmath>
#include <string>

#include "pathsim/errors.hpp"
#include "pathsim/model.hpp"
#include "support/stats.hpp"

using namespace pathsim;

namespace {

RawSDE unit_ou() {
    return {[](double v) { return -v; }, [](double) { return 1.0; }, [](double) { return 0.0; }, 0.0, {-1e300, 1e300}};
}

} // namespace

TEST_CASE("presets pass their own validation") {
    for (const std::string& name : preset_names()) {
        CAPTURE(name);
        const Model m = build_model(preset_config(name));
        const ValidationReport r = validate_model(m.diffusion, m.jumps ? &*m.jumps : nullptr);
        for (const auto& c : r.checks) {
            CAPTURE(c.name);
            CHECK(c.passed);
        }
        CHECK(r.ok());
        REQUIRE(m.diffusion.phi_floor.has_value());
        for (double x = -6.0; x <= 6.0; x += 0.01) CHECK(m.diffusion.phi(x) >= *m.diffusion.phi_floor - 1e-12);
    }
}

TEST_CASE("validation catches wrong derivatives and bounds") {
    DiffusionModel m = ou_model(0.0, 1.0);
    CHECK(validate_model(m).ok());
    DiffusionModel bad_deriv = m;
    bad_deriv.drift_deriv = [](double) { return 1.0; };
    CHECK_FALSE(validate_model(bad_deriv).ok());
    DiffusionModel bad_bound = m;
    bad_bound.phi_bounds = [](Interval iv) {
        const double hi = std::max(iv.lo * iv.lo, iv.hi * iv.hi);
        return PhiBounds{-0.5, 0.5 * (hi - 1.0) - 0.1};
    };
    const ValidationReport r = validate_model(bad_bound);
    CHECK_FALSE(r.ok());
    bool found = false;
    for (const auto& c : r.checks)
        if (c.name == "phi within phi_bounds on grid") {
            found = true;
            CHECK_FALSE(c.passed);
            CHECK(c.worst == doctest::Approx(0.1).epsilon(1e-6));
        }
    CHECK(found);
}

TEST_CASE("phi bounds nest over random nested intervals") {
    Rng rng(31);
    for (const std::string& name : {"ou", "sin", "constant", "zero"}) {
        const DiffusionModel m = build_model(preset_config(name)).diffusion;
        for (int i = 0; i < 500; ++i) {
            const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-5.0, 5.0);
            const Interval outer{std::min(a, b), std::max(a, b)};
            const double c = rng.uniform(outer.lo, outer.hi), d = rng.uniform(outer.lo, outer.hi);
            const Interval inner{std::min(c, d), std::max(c, d)};
            const PhiBounds po = m.phi_bounds(outer), pi = m.phi_bounds(inner);
            CHECK(po.lower <= pi.lower);
            CHECK(pi.upper <= po.upper);
            for (int j = 0; j <= 20; ++j) {
                const double x = inner.lo + (inner.hi - inner.lo) * j / 20.0;
                CHECK(m.phi(x) >= pi.lower - 1e-12);
                CHECK(m.phi(x) <= pi.upper + 1e-12);
            }
        }
    }
}

TEST_CASE("lamperti transform reference cases") {
    SUBCASE("unit volatility is the identity") {
        const LampertiMap l = lamperti_transform(unit_ou());
        for (double x = -3.0; x <= 3.0; x += 0.25) {
            CHECK(l.eta(x) == doctest::Approx(x).epsilon(1e-12));
            CHECK(l.drift(x) == doctest::Approx(-x).epsilon(1e-8));
        }
    }
    SUBCASE("constant volatility rescales") {
        RawSDE s{[](double) { return 0.0; }, [](double) { return 2.0; }, [](double) { return 0.0; }, 0.0, {-1e300, 1e300}};
        const LampertiMap l = lamperti_transform(s);
        for (double v = -3.0; v <= 3.0; v += 0.25) {
            CHECK(l.eta(v) == doctest::Approx(v / 2.0).epsilon(1e-12));
            CHECK(std::abs(l.drift(l.eta(v))) < 1e-8);
            CHECK(l.eta_inverse(l.eta(v)) == doctest::Approx(v).epsilon(1e-10));
        }
    }
    SUBCASE("geometric volatility gives a log map and zero drift") {
        RawSDE s{[](double v) { return v / 2.0; }, [](double v) { return v; }, [](double) { return 1.0; }, 1.0, {0.0, 1e300}};
        const LampertiMap l = lamperti_transform(s);
        for (double v = 0.1; v <= 8.0; v *= 1.4) {
            CHECK(l.eta(v) == doctest::Approx(std::log(v)).epsilon(1e-10));
            CHECK(std::abs(l.drift(l.eta(v))) < 1e-8);
        }
        for (double x = -2.0; x <= 2.0; x += 0.25) CHECK(std::abs(l.eta(l.eta_inverse(x)) - x) < 1e-10);
    }
    SUBCASE("general drift matches the closed form") {
        // sigma(v) = 1 + v^2 / 4, beta(v) = -v.
        RawSDE s{[](double v) { return -v; }, [](double v) { return 1.0 + 0.25 * v * v; },
                 [](double v) { return 0.5 * v; }, 0.0, {-1e300, 1e300}};
        const LampertiMap l = lamperti_transform(s);
        for (double v = -3.0; v <= 3.0; v += 0.3) {
            CHECK(l.eta(v) == doctest::Approx(2.0 * std::atan(v / 2.0)).epsilon(1e-10));
            CHECK(l.drift(l.eta(v)) == doctest::Approx(-v / (1.0 + 0.25 * v * v) - 0.25 * v).epsilon(1e-8));
        }
    }
    RawSDE bad = unit_ou();
    bad.sigma = [](double) { return -1.0; };
    CHECK_THROWS_AS(lamperti_transform(bad), ConfigError);
}

TEST_CASE("transformed jumps land on eta of the raw post-jump state") {
    RawSDE s{[](double v) { return v / 2.0; }, [](double v) { return v; }, [](double) { return 1.0; }, 1.0, {0.0, 1e300}};
    const LampertiMap l = lamperti_transform(s);
    const auto jump = l.transform_jump([](double, Rng&) { return 0.5; });
    Rng rng(32);
    for (double x = -1.0; x <= 1.0; x += 0.5) {
        const double v = std::exp(x);
        CHECK(x + jump(x, rng) == doctest::Approx(std::log(v + 0.5)).epsilon(1e-9));
    }
}

TEST_CASE("configuration text round trips") {
    for (const std::string& name : preset_names()) {
        ModelConfig c = preset_config(name);
        c.horizon = 1.25;
        c.theta = 0.375;
        CHECK(parse_config(serialize_config(c)) == c);
    }
    const ModelConfig c = parse_config("# comment\nmodel = sin\nstart = 0.5\n\nhorizon=3\n");
    CHECK(c.model == "sin");
    CHECK(c.start == 0.5);
    CHECK(c.horizon == 3.0);
    CHECK_THROWS_AS(parse_config("model = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("horizon = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("unknown_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("horizon = abc\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/pathsim.cfg"), ConfigError);
}

TEST_CASE("biased endpoint follows the tilted density") {
    // For OU the tilted density exp{-y^2/2 - (y - x)^2 / (2T)} is Gaussian.
    const DiffusionModel m = ou_model(0.0, 1.0);
    Rng rng(33);
    const double x = 0.7, T = 1.0;
    std::vector<double> v(10000);
    for (double& y : v) y = sample_biased_endpoint(m, x, T, rng);
    const double mean = x / (1.0 + T), sd = std::sqrt(T / (1.0 + T));
    CHECK(teststats::ks_pvalue(v, [&](double y) { return teststats::norm_cdf(y, mean, sd); }) > 0.001);
}

TEST_CASE("jump specs respect their bounds") {
    const JumpSpec j1 = app1_jumps(), j2 = app2_jumps();
    CHECK(j1.globally_bounded());
    for (double x = -5.0; x <= 5.0; x += 0.05) {
        CHECK(j1.intensity(x) >= 0.0);
        CHECK(j1.intensity(x) <= j1.bound_over({x, x}));
        CHECK(j2.intensity(x) <= j2.bound_over({x - 0.1, x + 0.1}));
        if (j2.floor) CHECK(j2.intensity(x) >= *j2.floor);
    }
}
