#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pathsim/rng.hpp"

namespace pathsim {

/// Pair of partial sums at one level of an alternating sequence.
/// lower = S_{2k} (nondecreasing in k), upper = S_{2k+1} (nonincreasing).
struct Bracket {
    double lower;
    double upper;
};

/// Brownian bridge from x at time s to y at time t.
struct Bridge {
    double s, t, x, y;
};

/// Interior point of a bridge.
struct Knot {
    double t, w;
};

/// Band pair for one sub-interval: minimum in [min_lo, min_hi], maximum in
/// [max_lo, max_hi].
struct BandPair {
    double min_lo, min_hi, max_lo, max_hi;
};

/// An event probability represented by converging brackets. The bracket
/// function must be pure; it is re-evaluated level by level by SeriesCursor.
/// `start_index` is the first level from which the brackets are guaranteed
/// to nest.
class AlternatingSeries {
public:
    using BracketFn = std::function<Bracket(std::size_t)>;

    AlternatingSeries();
    AlternatingSeries(BracketFn fn, std::size_t start_index, std::string meta);
    static AlternatingSeries constant(double value, std::string meta = "constant");

    /// Unguarded bracket at level k, as computed from the series terms.
    Bracket raw_bracket(std::size_t k) const { return fn_(k); }
    /// S_k: even k gives the lower sequence, odd k the upper one, both taken
    /// from the guarded sequence produced by SeriesCursor.
    double eval(std::size_t k) const;
    std::size_t start_index() const { return start_; }
    const std::string& meta() const { return meta_; }
    bool is_constant() const { return constant_; }
    double constant_value() const { return value_; }

private:
    BracketFn fn_;
    std::size_t start_ = 0;
    std::string meta_;
    bool constant_ = false;
    double value_ = 0.0;
};

/// Walks an AlternatingSeries from its start level. Each raw bracket is
/// checked against the previous one (a gross violation raises
/// ContractViolation), clamped to [0, 1] and intersected with the running
/// bracket, so the delivered sequence nests exactly in floating point.
class SeriesCursor {
public:
    explicit SeriesCursor(const AlternatingSeries& series);
    const Bracket& current() const { return cur_; }
    std::size_t level() const { return level_; }
    void advance();
    /// Levels advanced without the bracket changing.
    std::size_t stalled() const { return stalled_; }

private:
    void absorb(const Bracket& raw);

    const AlternatingSeries* series_;
    std::size_t level_;
    Bracket cur_{0.0, 1.0};
    Bracket prev_raw_{0.0, 1.0};
    std::size_t stalled_ = 0;
};

struct SeriesDecision {
    bool event;
    std::size_t level;
};

/// Retrospective decision of the event {u <= p} for a given uniform u.
SeriesDecision series_decide(const AlternatingSeries& series, double u);
/// Draws u and decides {u <= p}.
bool series_event(const AlternatingSeries& series, Rng& rng);

/// Index i drawn with probability w_i / sum(w), all weights represented by
/// series, using a single uniform and cumulative-ratio brackets.
std::size_t sample_discrete(const std::vector<AlternatingSeries>& weights, Rng& rng);
std::size_t sample_discrete(const std::vector<AlternatingSeries>& weights, double u);

/// Probability that a Brownian bridge stays within [l, u].
AlternatingSeries gamma_series(const Bridge& b, double l, double u);
/// Probability that a bridge conditioned to stay above m also stays below u,
/// with both endpoints strictly above m.
AlternatingSeries delta1_series(const Bridge& b, double m, double u);
/// As delta1 but one endpoint equals m (the bridge starts or ends at its
/// minimum).
AlternatingSeries delta2_series(const Bridge& b, double m, double u);
/// Dispatches to delta1 or delta2 depending on whether an endpoint sits at m.
AlternatingSeries delta_series(const Bridge& b, double m, double u);

/// Probability that the minimum over [s, t] lies in [l_lo, l_hi] and the
/// maximum in [u_lo, u_hi], given the values at the knots.
AlternatingSeries rho_series(const Bridge& b, const std::vector<Knot>& knots, double l_lo,
                             double l_hi, double u_lo, double u_hi);
/// Probability that each sub-interval between consecutive knots has its
/// minimum and maximum in its own band pair.
AlternatingSeries beta_series(const Bridge& b, const std::vector<Knot>& knots,
                              const std::vector<BandPair>& bands);
/// Single-interval special case of beta_series.
AlternatingSeries beta_series(const Bridge& b, const BandPair& bands);

/// Series for f(p_1, ..., p_m) where f is monotone in each argument with the
/// given sign (+1 increasing, -1 decreasing). Arguments are clamped to
/// [0, 1]; decreasing arguments use the lower sequence one level ahead for
/// the upper bound.
AlternatingSeries compose_series(std::vector<AlternatingSeries> parts, std::vector<int> signs,
                                 std::function<double(std::span<const double>)> f,
                                 std::string meta);
AlternatingSeries product_series(std::vector<AlternatingSeries> parts);

} // namespace pathsim
