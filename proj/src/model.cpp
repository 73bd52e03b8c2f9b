#include "pathsim/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "pathsim/errors.hpp"

namespace pathsim {

double JumpSpec::bound_over(Interval range) const {
    if (const auto* g = std::get_if<GlobalBound>(&bound)) return g->rate;
    return std::get<LayerBound>(bound).rate(range);
}

// ---------------------------------------------------------------------------
// Lamperti transform.

std::function<double(double, Rng&)> LampertiMap::transform_jump(std::function<double(double, Rng&)> raw) const {
    return [eta = eta, inv = eta_inverse, raw = std::move(raw)](double x, Rng& rng) {
        const double v = inv(x);
        return eta(v + raw(v, rng)) - x;
    };
}

LampertiMap lamperti_transform(const RawSDE& sde) {
    if (!sde.beta || !sde.sigma || !sde.sigma_deriv) throw ConfigError("lamperti: beta, sigma and sigma' required");
    if (!(sde.v_star > sde.domain.lo && sde.v_star < sde.domain.hi))
        throw ConfigError("lamperti: reference point outside the domain");
    if (!(sde.sigma(sde.v_star) > 0.0)) throw ConfigError("lamperti: sigma must be positive");
    const RawSDE s = sde;
    auto eta = [s](double v) {
        if (!(v > s.domain.lo && v < s.domain.hi)) throw ContractViolation("lamperti: state outside domain");
        if (v == s.v_star) return 0.0;
        auto f = [&](double u) { return 1.0 / s.sigma(u); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, s.v_star, v, 20, 1e-14);
    };
    auto eta_inverse = [s, eta](double x) {
        if (x == 0.0) return s.v_star;
        // Bracket the root of eta(v) - x, stepping outward from v_star and
        // halving the distance to a finite domain edge when one is near.
        const bool up = x > 0.0;
        double inner = s.v_star, step = 1.0;
        double outer = s.v_star;
        for (int i = 0; i < 4000; ++i) {
            const double edge = up ? s.domain.hi : s.domain.lo;
            double cand = up ? inner + step : inner - step;
            if (up ? cand >= edge : cand <= edge) cand = 0.5 * (inner + edge);
            const double val = eta(cand);
            if (up ? val >= x : val <= x) {
                outer = cand;
                break;
            }
            inner = cand;
            step *= 2.0;
            if (i == 3999) throw ContractViolation("lamperti: could not bracket inverse");
        }
        double a = std::min(inner, outer), b = std::max(inner, outer);
        auto g = [&](double v) { return eta(v) - x; };
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(g, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
        return 0.5 * (r.first + r.second);
    };
    auto drift = [s, eta_inverse](double x) {
        const double v = eta_inverse(x);
        return s.beta(v) / s.sigma(v) - 0.5 * s.sigma_deriv(v);
    };
    return {eta, eta_inverse, drift};
}

// ---------------------------------------------------------------------------
// Validation.

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

ValidationReport validate_model(const DiffusionModel& m, const JumpSpec* jumps, double lo, double hi,
                                std::size_t grid) {
    ValidationReport rep;
    std::vector<double> xs(grid);
    for (std::size_t i = 0; i < grid; ++i) xs[i] = lo + (hi - lo) * static_cast<double>(i) / (grid - 1);

    {
        double worst = 0.0;
        for (double x : xs) {
            const double h = 1e-5 * std::max(1.0, std::abs(x));
            const double fd = (m.drift(x + h) - m.drift(x - h)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - m.drift_deriv(x)) / std::max(1.0, std::abs(fd)));
        }
        rep.checks.push_back({"drift_deriv matches finite difference", worst < 1e-5, worst, ""});
    }
    {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < grid; ++i) {
            const double a = xs[i], b = xs[i + 1];
            const double quad = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(m.drift, a, b, 5, 1e-12);
            const double diff = m.drift_integral(b) - m.drift_integral(a);
            worst = std::max(worst, std::abs(quad - diff));
        }
        rep.checks.push_back({"drift_integral matches quadrature of drift", worst < 1e-8, worst, ""});
        const double a0 = std::abs(m.drift_integral(0.0));
        rep.checks.push_back({"drift_integral vanishes at 0", a0 < 1e-12, a0, ""});
    }
    {
        double worst = 0.0;
        bool nested = true;
        for (std::size_t i = 0; i < grid; i += 7)
            for (std::size_t j = i + 1; j < grid; j += 11) {
                const PhiBounds pb = m.phi_bounds({xs[i], xs[j]});
                for (std::size_t k = i; k <= j; ++k) {
                    const double p = m.phi(xs[k]);
                    worst = std::max({worst, pb.lower - p, p - pb.upper});
                }
                if (j + 11 < grid) {
                    const PhiBounds outer = m.phi_bounds({xs[i], xs[j + 11]});
                    nested = nested && outer.lower <= pb.lower && outer.upper >= pb.upper;
                }
            }
        rep.checks.push_back({"phi within phi_bounds on grid", worst <= 1e-12, worst, ""});
        rep.checks.push_back({"phi_bounds nest for nested intervals", nested, nested ? 0.0 : 1.0, ""});
    }
    if (m.global_phi_bounds) {
        double worst = 0.0;
        for (double x : xs) worst = std::max({worst, m.global_phi_bounds->lower - m.phi(x), m.phi(x) - m.global_phi_bounds->upper});
        rep.checks.push_back({"phi within global bounds", worst <= 1e-12, worst, ""});
    }
    if (m.endpoint_proposal) {
        double worst = -1e300;
        for (double x0 : {lo / 2, 0.0, hi / 2})
            for (double T : {0.1, 1.0, m.horizon}) {
                const GaussianProposal p = m.endpoint_proposal(x0, T);
                for (double y : xs) {
                    const double lh = m.drift_integral(y) - (y - x0) * (y - x0) / (2.0 * T);
                    const double lq = -(y - p.mean) * (y - p.mean) / (2.0 * p.variance);
                    worst = std::max(worst, lh - lq - p.log_bound);
                }
            }
        rep.checks.push_back({"endpoint proposal dominates tilted density", worst <= 1e-9, worst, ""});
    }
    if (jumps) {
        double worst = 0.0;
        bool nonneg = true;
        for (std::size_t i = 0; i < grid; i += 5)
            for (std::size_t j = i + 1; j < grid; j += 13) {
                const double b = jumps->bound_over({xs[i], xs[j]});
                for (std::size_t k = i; k <= j; ++k) {
                    const double l = jumps->intensity(xs[k]);
                    nonneg = nonneg && l >= 0.0;
                    worst = std::max(worst, l - b);
                    if (jumps->floor) worst = std::max(worst, *jumps->floor - l);
                }
            }
        rep.checks.push_back({"jump intensity within its bound", worst <= 1e-12, worst, ""});
        rep.checks.push_back({"jump intensity nonnegative", nonneg, 0.0, ""});
    }
    return rep;
}

std::function<PhiBounds(Interval)> grid_phi_bounds(std::function<double(double)> phi, std::size_t points,
                                                   double margin) {
    return [phi = std::move(phi), points, margin](Interval r) {
        double lo = phi(r.lo), hi = lo;
        for (std::size_t i = 1; i < points; ++i) {
            const double v = phi(r.lo + (r.hi - r.lo) * static_cast<double>(i) / (points - 1));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return PhiBounds{lo - margin, hi + margin};
    };
}

double sample_biased_endpoint(const DiffusionModel& m, double x, double T, Rng& rng) {
    const GaussianProposal p = m.endpoint_proposal(x, T);
    auto log_h = [&](double y) { return m.drift_integral(y) - (y - x) * (y - x) / (2.0 * T); };
    return sample_tilted(log_h, p, rng);
}

// ---------------------------------------------------------------------------
// Presets.

DiffusionModel zero_drift_model(double start, double horizon) {
    DiffusionModel m;
    m.name = "zero";
    m.drift = [](double) { return 0.0; };
    m.drift_deriv = [](double) { return 0.0; };
    m.drift_integral = [](double) { return 0.0; };
    m.phi_bounds = [](Interval) { return PhiBounds{0.0, 0.0}; };
    m.global_phi_bounds = PhiBounds{0.0, 0.0};
    m.phi_floor = 0.0;
    m.endpoint_proposal = [](double x, double T) { return GaussianProposal{x, T, 0.0}; };
    m.start = start;
    m.horizon = horizon;
    return m;
}

DiffusionModel constant_drift_model(double c, double start, double horizon) {
    DiffusionModel m;
    m.name = "constant";
    m.drift = [c](double) { return c; };
    m.drift_deriv = [](double) { return 0.0; };
    m.drift_integral = [c](double u) { return c * u; };
    m.phi_bounds = [c](Interval) { return PhiBounds{0.5 * c * c, 0.5 * c * c}; };
    m.global_phi_bounds = PhiBounds{0.5 * c * c, 0.5 * c * c};
    m.phi_floor = 0.5 * c * c;
    m.endpoint_proposal = [c](double x, double T) { return GaussianProposal{x + c * T, T, c * x + 0.5 * c * c * T}; };
    m.start = start;
    m.horizon = horizon;
    return m;
}

DiffusionModel ou_model(double start, double horizon) {
    DiffusionModel m;
    m.name = "ou";
    m.drift = [](double x) { return -x; };
    m.drift_deriv = [](double) { return -1.0; };
    m.drift_integral = [](double u) { return -0.5 * u * u; };
    m.phi_bounds = [](Interval r) {
        const double a = r.lo * r.lo, b = r.hi * r.hi;
        const double low = (r.lo <= 0.0 && r.hi >= 0.0) ? 0.0 : std::min(a, b);
        return PhiBounds{0.5 * (low - 1.0), 0.5 * (std::max(a, b) - 1.0)};
    };
    m.phi_floor = -0.5;
    // exp{-y^2/2 - (y - x)^2/(2T)} is Gaussian: the proposal is exact.
    m.endpoint_proposal = [](double x, double T) {
        return GaussianProposal{x / (1.0 + T), T / (1.0 + T), -x * x / (2.0 * (1.0 + T))};
    };
    m.start = start;
    m.horizon = horizon;
    return m;
}

namespace {

// Range of cos over [lo, hi].
std::pair<double, double> cos_range(double lo, double hi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (hi - lo >= two_pi) return {-1.0, 1.0};
    double cmin = std::min(std::cos(lo), std::cos(hi)), cmax = std::max(std::cos(lo), std::cos(hi));
    if (std::ceil(lo / two_pi) * two_pi <= hi) cmax = 1.0;
    if (std::ceil((lo - std::numbers::pi) / two_pi) * two_pi + std::numbers::pi <= hi) cmin = -1.0;
    return {cmin, cmax};
}

} // namespace

DiffusionModel sin_model(double start, double horizon) {
    DiffusionModel m;
    m.name = "sin";
    m.drift = [](double x) { return std::sin(x); };
    m.drift_deriv = [](double x) { return std::cos(x); };
    m.drift_integral = [](double u) { return 1.0 - std::cos(u); };
    m.phi_bounds = [](Interval r) {
        // phi = (1 - c^2 + c) / 2 with c = cos x, concave in c with peak at 1/2.
        const auto [cmin, cmax] = cos_range(r.lo, r.hi);
        auto g = [](double c) { return 0.5 * (1.0 - c * c + c); };
        return PhiBounds{std::min(g(cmin), g(cmax)), g(std::clamp(0.5, cmin, cmax))};
    };
    m.global_phi_bounds = PhiBounds{-0.5, 0.625};
    m.phi_floor = -0.5;
    m.endpoint_proposal = [](double x, double T) { return GaussianProposal{x, T, 2.0}; };
    m.start = start;
    m.horizon = horizon;
    return m;
}

JumpSpec app1_jumps() {
    JumpSpec j;
    j.intensity = [](double x) { return std::max(std::sin(x), 0.0); };
    j.bound = GlobalBound{1.0};
    j.jump_size = [](double x, Rng& rng) { return rng.normal(-0.5 * x, 1.0); };
    return j;
}

JumpSpec app2_jumps() {
    JumpSpec j;
    j.intensity = [](double x) { return x * x; };
    j.bound = LayerBound{[](Interval r) { return std::max(r.lo * r.lo, r.hi * r.hi); }};
    j.jump_size = [](double x, Rng& rng) { return rng.uniform(std::min(-x, 0.0), std::max(-x, 0.0)); };
    return j;
}

std::vector<std::string> preset_names() { return {"zero", "constant", "ou", "sin", "app1", "app2"}; }

ModelConfig preset_config(const std::string& name) {
    ModelConfig c;
    c.model = name;
    if (name == "zero" || name == "constant" || name == "ou") {
        c.start = 0.0;
        c.horizon = 1.0;
    } else if (name == "sin" || name == "app2") {
        c.start = 0.0;
        c.horizon = 2.0;
    } else if (name == "app1") {
        c.start = 2.0;
        c.horizon = 5.0;
    } else {
        throw ConfigError("unknown model preset '" + name + "'");
    }
    return c;
}

Model build_model(const ModelConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) throw ConfigError("horizon must be positive");
    if (!std::isfinite(cfg.start)) throw ConfigError("start must be finite");
    if (!(cfg.theta > 0.0) || !std::isfinite(cfg.theta)) throw ConfigError("theta must be positive");
    Model m;
    m.config = cfg;
    const std::string& n = cfg.model;
    if (n == "zero") {
        m.diffusion = zero_drift_model(cfg.start, cfg.horizon);
    } else if (n == "constant") {
        m.diffusion = constant_drift_model(cfg.drift_param, cfg.start, cfg.horizon);
    } else if (n == "ou") {
        m.diffusion = ou_model(cfg.start, cfg.horizon);
    } else if (n == "sin") {
        m.diffusion = sin_model(cfg.start, cfg.horizon);
    } else if (n == "app1") {
        m.diffusion = ou_model(cfg.start, cfg.horizon);
        m.diffusion.name = "app1";
        m.jumps = app1_jumps();
    } else if (n == "app2") {
        m.diffusion = sin_model(cfg.start, cfg.horizon);
        m.diffusion.name = "app2";
        m.jumps = app2_jumps();
    } else {
        throw ConfigError("unknown model preset '" + n + "'");
    }
    return m;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("config key '" + key + "': not a finite number: '" + v + "'");
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

ModelConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key)) throw ConfigError("config key '" + key + "' given twice");
        kv[key] = value;
    }
    if (!kv.count("model")) throw ConfigError("config: missing 'model' key");
    ModelConfig cfg = preset_config(kv["model"]);
    for (const auto& [k, v] : kv) {
        if (k == "model") continue;
        if (k == "drift_param") cfg.drift_param = parse_double(k, v);
        else if (k == "start") cfg.start = parse_double(k, v);
        else if (k == "horizon") cfg.horizon = parse_double(k, v);
        else if (k == "theta") cfg.theta = parse_double(k, v);
        else throw ConfigError("config: unknown key '" + k + "'");
    }
    build_model(cfg);  // reject values the presets cannot use
    return cfg;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ModelConfig& cfg) {
    std::ostringstream out;
    out << "model = " << cfg.model << "\n"
        << "drift_param = " << format_double(cfg.drift_param) << "\n"
        << "start = " << format_double(cfg.start) << "\n"
        << "horizon = " << format_double(cfg.horizon) << "\n"
        << "theta = " << format_double(cfg.theta) << "\n";
    return out.str();
}

} // namespace pathsim
