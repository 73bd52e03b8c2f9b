#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pathsim/brownian.hpp"
#include "pathsim/rng.hpp"

namespace pathsim {

struct Interval {
    double lo, hi;
};

struct PhiBounds {
    double lower, upper;
};

/// Unit-volatility diffusion dX = alpha(X) dt + dW on [0, horizon].
/// phi = (alpha^2 + alpha') / 2 must be bounded below; phi_bounds must return
/// certified bounds of phi over any finite interval, nested for nested
/// intervals.
struct DiffusionModel {
    std::string name;
    std::function<double(double)> drift;
    std::function<double(double)> drift_deriv;
    /// A(u) = integral of drift from 0 to u.
    std::function<double(double)> drift_integral;
    std::function<PhiBounds(Interval)> phi_bounds;
    /// Bounds valid on the whole real line, when they exist.
    std::optional<PhiBounds> global_phi_bounds;
    /// inf phi over the real line. The layered algorithms need it to keep the
    /// acceptance probability proportional to exp{-integral of phi}.
    std::optional<double> phi_floor;
    /// Gaussian proposal for the tilted endpoint density started at x over
    /// a horizon T.
    std::function<GaussianProposal(double x, double T)> endpoint_proposal;
    double horizon = 1.0;
    double start = 0.0;

    double phi(double u) const {
        const double a = drift(u);
        return 0.5 * (a * a + drift_deriv(u));
    }
};

struct GlobalBound {
    double rate;
};
struct LayerBound {
    std::function<double(Interval)> rate;
};

/// State-dependent jump intensity lambda(x) with a dominating bound, an
/// optional floor lambda(x) >= floor, and the jump-size law given the
/// pre-jump state.
struct JumpSpec {
    std::function<double(double)> intensity;
    std::variant<GlobalBound, LayerBound> bound;
    std::optional<double> floor;
    std::function<double(double, Rng&)> jump_size;

    /// Bound on the intensity over a path confined to `range`.
    double bound_over(Interval range) const;
    bool globally_bounded() const { return std::holds_alternative<GlobalBound>(bound); }
};

/// dV = beta(V) dt + sigma(V) dW on `domain`, with sigma > 0 there.
struct RawSDE {
    std::function<double(double)> beta;
    std::function<double(double)> sigma;
    std::function<double(double)> sigma_deriv;
    double v_star = 0.0;
    Interval domain{-1e300, 1e300};
};

/// X = eta(V) with eta(v) = integral from v_star to v of 1/sigma; the
/// transformed drift is beta/sigma - sigma'/2 evaluated at eta^{-1}(x).
struct LampertiMap {
    std::function<double(double)> eta;
    std::function<double(double)> eta_inverse;
    std::function<double(double)> drift;
    /// Jump law on the transformed scale: eta(eta^{-1}(x) + raw jump) - x.
    std::function<double(double, Rng&)> transform_jump(std::function<double(double, Rng&)> raw) const;
};

/// eta by adaptive Gauss-Kronrod quadrature and its inverse by bracketed
/// root finding (round trip accurate to about 1e-10).
LampertiMap lamperti_transform(const RawSDE& sde);

struct ValidationCheck {
    std::string name;
    bool passed;
    double worst;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool ok() const;
};

/// Grid spot-checks of the model's declared identities and bounds on
/// [lo, hi]. Passing is evidence, not proof.
ValidationReport validate_model(const DiffusionModel& m, const JumpSpec* jumps = nullptr, double lo = -4.0,
                                double hi = 4.0, std::size_t grid = 401);

/// phi bounds from a grid search plus a margin. Not certified: a bound
/// produced this way can be violated between grid points, which would bias
/// the exact algorithms. Opt in only when no analytic bound is available.
std::function<PhiBounds(Interval)> grid_phi_bounds(std::function<double(double)> phi, std::size_t points = 257,
                                                   double margin = 1e-3);

/// Endpoint from the density proportional to exp{A(y) - (y - x)^2 / (2T)}.
double sample_biased_endpoint(const DiffusionModel& m, double x, double T, Rng& rng);

// ---------------------------------------------------------------------------
// Presets and configuration.

/// Plain key/value model description. Recognised keys: model, drift_param,
/// start, horizon, theta.
struct ModelConfig {
    std::string model = "ou";
    double drift_param = 1.0;
    double start = 0.0;
    double horizon = 1.0;
    double theta = 0.5;

    bool operator==(const ModelConfig&) const = default;
};

struct Model {
    DiffusionModel diffusion;
    std::optional<JumpSpec> jumps;
    ModelConfig config;
};

/// Names: zero, constant, ou, sin, app1, app2.
std::vector<std::string> preset_names();
/// Defaults for a preset (start, horizon as in its reference setting).
ModelConfig preset_config(const std::string& name);
Model build_model(const ModelConfig& cfg);

ModelConfig parse_config(const std::string& text);
ModelConfig load_config(const std::string& path);
/// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ModelConfig& cfg);

/// Individual preset constructors.
DiffusionModel zero_drift_model(double start, double horizon);
DiffusionModel constant_drift_model(double c, double start, double horizon);
DiffusionModel ou_model(double start, double horizon);
DiffusionModel sin_model(double start, double horizon);
JumpSpec app1_jumps();
JumpSpec app2_jumps();

} // namespace pathsim
