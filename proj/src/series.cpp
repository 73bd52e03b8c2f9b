#include "pathsim/series.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "pathsim/errors.hpp"

namespace pathsim {

namespace {

constexpr double kContractTol = 1e-9;
constexpr double kWidthFloor = 1e-12;
constexpr std::size_t kLevelCap = 10000;
constexpr std::size_t kStallCap = 64;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_bridge(const Bridge& b) {
    if (!(b.t > b.s)) throw ContractViolation("bridge with non-positive length");
}

// Terms of the two-sided exit expansion for a Brownian bridge.
struct GammaTerms {
    double T, D, x, y, l, u;

    double sigma(std::size_t j) const {
        const double jm = static_cast<double>(j - 1);
        const double top = u + jm * D;
        const double bot = l - jm * D;
        return std::exp(-2.0 * (top - x) * (top - y) / T) +
               std::exp(-2.0 * (x - bot) * (y - bot) / T);
    }
    double phi(std::size_t j) const {
        const double jd = static_cast<double>(j) * D;
        return std::exp(-2.0 * jd * (jd + (x - y)) / T) + std::exp(-2.0 * jd * (jd + (y - x)) / T);
    }
    Bracket bracket(std::size_t k) const {
        double upper = 1.0;
        double lower = 1.0 - sigma(1);
        double sig_next = sigma(1);
        for (std::size_t j = 1; j <= k; ++j) {
            const double ph = phi(j);
            const double sig_after = sigma(j + 1);
            upper -= sig_next - ph;
            lower += ph - sig_after;
            sig_next = sig_after;
        }
        return {lower, upper};
    }
};

// Terms for a bridge that starts at its minimum m and ends at m + c.
struct Delta2Terms {
    double T, D, c;

    double psi(std::size_t j) const {
        const double jd = static_cast<double>(j) * D;
        return (2.0 * jd - c) * std::exp(-2.0 * jd * (jd - c) / T);
    }
    // (psi_j - chi_j) / c, written with sinh/cosh so that small c is stable.
    // Exponents are combined first: a - e <= 0 since c < D, so nothing overflows.
    double diff_over_c(std::size_t j) const {
        const double jd = static_cast<double>(j) * D;
        const double a = 2.0 * jd * c / T;
        const double e = 2.0 * jd * jd / T;
        const double ep = std::exp(a - e), em = std::exp(-a - e);
        const double sinh_term =
            a < 1.0 ? (a == 0.0 ? 1.0 : std::sinh(a) / a) * std::exp(-e) : 0.5 * (ep - em) / a;
        return 8.0 * jd * jd / T * sinh_term - (ep + em);
    }
    Bracket bracket(std::size_t k) const {
        double upper = 1.0;
        for (std::size_t j = 1; j <= k; ++j) upper -= diff_over_c(j);
        return {upper - psi(k + 1) / c, upper};
    }
};

} // namespace

// ---------------------------------------------------------------------------

AlternatingSeries::AlternatingSeries()
    : fn_([](std::size_t) { return Bracket{0.0, 0.0}; }), meta_("zero"), constant_(true) {}

AlternatingSeries::AlternatingSeries(BracketFn fn, std::size_t start_index, std::string meta)
    : fn_(std::move(fn)), start_(start_index), meta_(std::move(meta)) {}

AlternatingSeries AlternatingSeries::constant(double value, std::string meta) {
    AlternatingSeries s([value](std::size_t) { return Bracket{value, value}; }, 0, std::move(meta));
    s.constant_ = true;
    s.value_ = value;
    return s;
}

double AlternatingSeries::eval(std::size_t k) const {
    const std::size_t level = k / 2;
    if (level < start_) {
        const Bracket b = raw_bracket(level);
        return k % 2 == 0 ? b.lower : b.upper;
    }
    SeriesCursor c(*this);
    while (c.level() < level) c.advance();
    return k % 2 == 0 ? c.current().lower : c.current().upper;
}

SeriesCursor::SeriesCursor(const AlternatingSeries& series)
    : series_(&series), level_(series.start_index()) {
    const Bracket raw = series.raw_bracket(level_);
    if (!(raw.lower <= raw.upper + kContractTol))
        throw ContractViolation("series " + series.meta() + ": lower exceeds upper at start");
    prev_raw_ = raw;
    cur_ = {clamp01(raw.lower), clamp01(raw.upper)};
    if (cur_.lower > cur_.upper) cur_.lower = cur_.upper = 0.5 * (cur_.lower + cur_.upper);
}

void SeriesCursor::advance() {
    ++level_;
    const Bracket raw = series_->raw_bracket(level_);
    if (!(raw.lower >= prev_raw_.lower - kContractTol) ||
        !(raw.upper <= prev_raw_.upper + kContractTol) ||
        !(raw.lower <= raw.upper + kContractTol))
        throw ContractViolation("series " + series_->meta() + ": brackets fail to nest at level " +
                                std::to_string(level_));
    prev_raw_ = raw;
    absorb(raw);
}

void SeriesCursor::absorb(const Bracket& raw) {
    const Bracket old = cur_;
    Bracket next{std::max(old.lower, clamp01(raw.lower)), std::min(old.upper, clamp01(raw.upper))};
    if (next.lower > next.upper) {
        // Crossing by rounding only: collapse inside the previous bracket.
        const double mid = std::clamp(0.5 * (next.lower + next.upper), old.lower, old.upper);
        next = {mid, mid};
    }
    stalled_ = (next.lower == old.lower && next.upper == old.upper) ? stalled_ + 1 : 0;
    cur_ = next;
}

namespace {

void check_progress(const SeriesCursor& c, std::size_t start, const std::string& meta) {
    const Bracket& b = c.current();
    if (b.upper - b.lower < kWidthFloor || c.level() - start >= kLevelCap ||
        c.stalled() >= kStallCap)
        throw PrecisionError("series " + meta + ": uniform unresolved at level " +
                             std::to_string(c.level()) + " with bracket width " +
                             std::to_string(b.upper - b.lower));
}

} // namespace

SeriesDecision series_decide(const AlternatingSeries& series, double u) {
    if (series.is_constant()) return {u <= series.constant_value(), series.start_index()};
    SeriesCursor c(series);
    for (;;) {
        const Bracket& b = c.current();
        if (u <= b.lower) return {true, c.level()};
        if (u >= b.upper) return {false, c.level()};
        check_progress(c, series.start_index(), series.meta());
        c.advance();
    }
}

bool series_event(const AlternatingSeries& series, Rng& rng) {
    return series_decide(series, rng.uniform()).event;
}

std::size_t sample_discrete(const std::vector<AlternatingSeries>& weights, Rng& rng) {
    return sample_discrete(weights, rng.uniform());
}

std::size_t sample_discrete(const std::vector<AlternatingSeries>& weights, double u) {
    const std::size_t n = weights.size();
    if (n == 0) throw ContractViolation("sample_discrete: no weights");
    std::vector<std::unique_ptr<SeriesCursor>> cursors(n);
    std::vector<double> lo(n), hi(n);
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i].is_constant()) {
            lo[i] = hi[i] = std::max(0.0, weights[i].constant_value());
        } else {
            cursors[i] = std::make_unique<SeriesCursor>(weights[i]);
            start = std::max(start, weights[i].start_index());
        }
    }
    // Bring every cursor to a common level.
    for (std::size_t i = 0; i < n; ++i)
        if (cursors[i]) {
            while (cursors[i]->level() < start) cursors[i]->advance();
            lo[i] = cursors[i]->current().lower;
            hi[i] = cursors[i]->current().upper;
        }
    std::size_t level = start;
    double total_hi = 0.0;
    for (double h : hi) total_hi += h;
    if (total_hi == 0.0) throw ContractViolation("sample_discrete: all weights vanish");

    auto advance_all = [&] {
        ++level;
        for (std::size_t i = 0; i < n; ++i)
            if (cursors[i]) {
                cursors[i]->advance();
                lo[i] = cursors[i]->current().lower;
                hi[i] = cursors[i]->current().upper;
            }
    };

    for (std::size_t j = 0; j + 1 < n; ++j) {
        for (;;) {
            double a_lo = 0.0, a_hi = 0.0, b_lo = 0.0, b_hi = 0.0;
            for (std::size_t i = 0; i <= j; ++i) a_lo += lo[i], a_hi += hi[i];
            for (std::size_t i = j + 1; i < n; ++i) b_lo += lo[i], b_hi += hi[i];
            const double c_lo = a_lo == 0.0 ? 0.0 : a_lo / (a_lo + b_hi);
            const double c_hi = a_hi == 0.0 ? 0.0 : a_hi / (a_hi + b_lo);
            if (u <= c_lo) return j;
            if (u >= c_hi) break;
            if (c_hi - c_lo < kWidthFloor || level - start >= kLevelCap)
                throw PrecisionError("sample_discrete: uniform unresolved at level " +
                                     std::to_string(level));
            advance_all();
        }
    }
    return n - 1;
}

// ---------------------------------------------------------------------------

AlternatingSeries gamma_series(const Bridge& b, double l, double u) {
    check_bridge(b);
    if (!(l < std::min(b.x, b.y)) || !(u > std::max(b.x, b.y)))
        return AlternatingSeries::constant(0.0, "gamma(empty)");
    const GammaTerms g{b.t - b.s, u - l, b.x, b.y, l, u};
    return AlternatingSeries([g](std::size_t k) { return g.bracket(k); }, 0,
                             "gamma[" + std::to_string(l) + "," + std::to_string(u) + "]");
}

AlternatingSeries delta1_series(const Bridge& b, double m, double u) {
    check_bridge(b);
    if (!(b.x > m) || !(b.y > m))
        throw ContractViolation("delta1: endpoints must lie strictly above the minimum");
    if (!(u > std::max(b.x, b.y))) return AlternatingSeries::constant(0.0, "delta1(empty)");
    const double den = -std::expm1(-2.0 * (b.x - m) * (b.y - m) / (b.t - b.s));
    const GammaTerms g{b.t - b.s, u - m, b.x, b.y, m, u};
    return AlternatingSeries(
        [g, den](std::size_t k) {
            const Bracket r = g.bracket(k);
            return Bracket{r.lower / den, r.upper / den};
        },
        0, "delta1[" + std::to_string(m) + "," + std::to_string(u) + "]");
}

AlternatingSeries delta2_series(const Bridge& b, double m, double u) {
    check_bridge(b);
    double c;
    if (b.x == m && b.y > m)
        c = b.y - m;
    else if (b.y == m && b.x > m)
        c = b.x - m;
    else
        throw ContractViolation("delta2: exactly one endpoint must sit at the minimum");
    const double D = u - m;
    if (!(D > c)) return AlternatingSeries::constant(0.0, "delta2(empty)");
    const double T = b.t - b.s;
    const double khat = std::sqrt(T + D * D) / (2.0 * D);
    const auto start = static_cast<std::size_t>(std::ceil(khat));
    const Delta2Terms d{T, D, c};
    return AlternatingSeries([d](std::size_t k) { return d.bracket(k); }, start,
                             "delta2[" + std::to_string(m) + "," + std::to_string(u) + "]");
}

AlternatingSeries delta_series(const Bridge& b, double m, double u) {
    if (b.x == m || b.y == m) return delta2_series(b, m, u);
    return delta1_series(b, m, u);
}

// ---------------------------------------------------------------------------

AlternatingSeries compose_series(std::vector<AlternatingSeries> parts, std::vector<int> signs,
                                 std::function<double(std::span<const double>)> f,
                                 std::string meta) {
    if (parts.size() != signs.size()) throw ContractViolation("compose: sign count mismatch");
    for (int s : signs)
        if (s != 1 && s != -1)
            throw ContractViolation("compose: partial derivative sign must be +1 or -1");
    bool all_constant = true;
    std::size_t start = 0;
    for (const auto& p : parts) {
        all_constant = all_constant && p.is_constant();
        start = std::max(start, p.start_index());
    }
    if (all_constant) {
        std::vector<double> v;
        for (const auto& p : parts) v.push_back(clamp01(p.constant_value()));
        return AlternatingSeries::constant(f(v), meta);
    }
    auto fn = [parts = std::move(parts), signs = std::move(signs), f = std::move(f)](std::size_t k) {
        std::vector<double> lo(parts.size()), hi(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Bracket r = parts[i].raw_bracket(k);
            if (signs[i] > 0) {
                lo[i] = clamp01(r.lower);
                hi[i] = clamp01(r.upper);
            } else {
                lo[i] = clamp01(r.upper);
                hi[i] = clamp01(parts[i].raw_bracket(k + 1).lower);
            }
        }
        return Bracket{f(lo), f(hi)};
    };
    return AlternatingSeries(std::move(fn), start, std::move(meta));
}

AlternatingSeries product_series(std::vector<AlternatingSeries> parts) {
    std::vector<AlternatingSeries> live;
    double scale = 1.0;
    for (auto& p : parts) {
        if (p.is_constant()) {
            scale *= clamp01(p.constant_value());
            if (scale == 0.0) return AlternatingSeries::constant(0.0, "product(zero)");
        } else {
            live.push_back(std::move(p));
        }
    }
    if (live.empty()) return AlternatingSeries::constant(scale, "product");
    if (live.size() == 1 && scale == 1.0) return live.front();
    std::vector<int> signs(live.size(), 1);
    return compose_series(
        std::move(live), std::move(signs),
        [scale](std::span<const double> v) {
            double r = scale;
            for (double x : v) r *= x;
            return r;
        },
        "product");
}

namespace {

std::vector<Bridge> split_bridge(const Bridge& b, const std::vector<Knot>& knots) {
    std::vector<Bridge> out;
    double s = b.s, x = b.x;
    for (const Knot& k : knots) {
        if (!(k.t > s && k.t < b.t)) throw ContractViolation("knots must be increasing and interior");
        out.push_back({s, k.t, x, k.w});
        s = k.t;
        x = k.w;
    }
    out.push_back({s, b.t, x, b.y});
    return out;
}

double inclusion_exclusion(std::span<const double> v) { return v[0] - v[1] - v[2] + v[3]; }

AlternatingSeries band_product(const std::vector<Bridge>& pieces, double l, double u) {
    std::vector<AlternatingSeries> parts;
    for (const Bridge& p : pieces) parts.push_back(gamma_series(p, l, u));
    return product_series(std::move(parts));
}

void check_bands(const BandPair& bp) {
    if (!(bp.min_lo <= bp.min_hi) || !(bp.max_lo <= bp.max_hi))
        throw ContractViolation("band pair with inverted band");
}

} // namespace

AlternatingSeries rho_series(const Bridge& b, const std::vector<Knot>& knots, double l_lo,
                             double l_hi, double u_lo, double u_hi) {
    check_bridge(b);
    check_bands({l_lo, l_hi, u_lo, u_hi});
    if (l_lo == l_hi || u_lo == u_hi) return AlternatingSeries::constant(0.0, "rho(empty)");
    const auto pieces = split_bridge(b, knots);
    std::vector<AlternatingSeries> parts{band_product(pieces, l_lo, u_hi), band_product(pieces, l_hi, u_hi),
                                         band_product(pieces, l_lo, u_lo), band_product(pieces, l_hi, u_lo)};
    return compose_series(std::move(parts), {1, -1, -1, 1}, inclusion_exclusion, "rho");
}

AlternatingSeries beta_series(const Bridge& b, const BandPair& bp) {
    check_bridge(b);
    check_bands(bp);
    if (bp.min_lo == bp.min_hi || bp.max_lo == bp.max_hi)
        return AlternatingSeries::constant(0.0, "beta(empty)");
    std::vector<AlternatingSeries> parts{
        gamma_series(b, bp.min_lo, bp.max_hi), gamma_series(b, bp.min_hi, bp.max_hi),
        gamma_series(b, bp.min_lo, bp.max_lo), gamma_series(b, bp.min_hi, bp.max_lo)};
    return compose_series(std::move(parts), {1, -1, -1, 1}, inclusion_exclusion, "beta");
}

AlternatingSeries beta_series(const Bridge& b, const std::vector<Knot>& knots,
                              const std::vector<BandPair>& bands) {
    check_bridge(b);
    const auto pieces = split_bridge(b, knots);
    if (bands.size() != pieces.size()) throw ContractViolation("beta: one band pair per sub-interval");
    std::vector<AlternatingSeries> parts;
    for (std::size_t i = 0; i < pieces.size(); ++i) parts.push_back(beta_series(pieces[i], bands[i]));
    return product_series(std::move(parts));
}

} // namespace pathsim
