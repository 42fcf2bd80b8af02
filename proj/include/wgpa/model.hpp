#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wgpa/random.hpp"

namespace wgpa {

// ---------------------------------------------------------------------------
// Task

struct Task {
    double value = 0.0;     // consumer's value for completion within the deadline
    double deadline = 0.0;  // absolute completion deadline
};

inline void check_task(const Task& t) {
    if (!(t.value > 0.0) || !std::isfinite(t.value))
        throw std::invalid_argument("task value must be positive and finite");
    if (!(t.deadline > 0.0) || !std::isfinite(t.deadline))
        throw std::invalid_argument("task deadline must be positive and finite");
}

// ---------------------------------------------------------------------------
// Delivery-time laws.  duration_cdf(m, t) = Prob(X <= t), with X the time a
// provider needs to deliver once invoked; all laws put no mass at or below 0
// except Deterministic{0}, which validation rejects.

struct Exponential {
    double rate = 1.0;
};

struct Deterministic {
    double delay = 0.0;
};

struct DurationModel;

struct FiniteMixture {
    std::vector<double> weights;
    std::vector<DurationModel> components;
};

// Law of the minimum of independent components; not part of the JSON surface,
// used to build the composite provider in allocation upper bounds.
struct MinOf {
    std::vector<DurationModel> components;
};

struct DurationModel {
    std::variant<Exponential, Deterministic, FiniteMixture, MinOf> law;

    static DurationModel exponential(double rate) { return {Exponential{rate}}; }
    static DurationModel deterministic(double delay) { return {Deterministic{delay}}; }
    static DurationModel mixture(std::vector<double> w, std::vector<DurationModel> comps) {
        return {FiniteMixture{std::move(w), std::move(comps)}};
    }
    static DurationModel min_of(std::vector<DurationModel> comps) {
        return {MinOf{std::move(comps)}};
    }
};

inline double duration_cdf(const DurationModel& m, double t);

namespace detail {
struct DurationCdf {
    double t;
    double operator()(const Exponential& e) const {
        return t <= 0.0 ? 0.0 : -std::expm1(-e.rate * t);
    }
    double operator()(const Deterministic& d) const { return t >= d.delay ? 1.0 : 0.0; }
    double operator()(const FiniteMixture& mix) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < mix.components.size(); ++k)
            acc += mix.weights[k] * duration_cdf(mix.components[k], t);
        return acc;
    }
    double operator()(const MinOf& m) const {
        double survive = 1.0;
        for (const auto& c : m.components) survive *= 1.0 - duration_cdf(c, t);
        return 1.0 - survive;
    }
};
}  // namespace detail

inline double duration_cdf(const DurationModel& m, double t) {
    if (t <= 0.0) return 0.0;  // all admitted laws live on (0, inf)
    return std::visit(detail::DurationCdf{t}, m.law);
}

inline double sample_duration(const DurationModel& m, Rng& rng);

namespace detail {
struct DurationSample {
    Rng& rng;
    double operator()(const Exponential& e) const {
        return -std::log1p(-uniform01(rng)) / e.rate;
    }
    double operator()(const Deterministic& d) const { return d.delay; }
    double operator()(const FiniteMixture& mix) const {
        double u = uniform01(rng);
        double acc = 0.0;
        for (std::size_t k = 0; k < mix.components.size(); ++k) {
            acc += mix.weights[k];
            if (u < acc || k + 1 == mix.components.size())
                return sample_duration(mix.components[k], rng);
        }
        return sample_duration(mix.components.back(), rng);
    }
    double operator()(const MinOf& m) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : m.components) best = std::min(best, sample_duration(c, rng));
        return best;
    }
};
}  // namespace detail

inline double sample_duration(const DurationModel& m, Rng& rng) {
    return std::visit(detail::DurationSample{rng}, m.law);
}

inline void check_duration_model(const DurationModel& m) {
    struct Check {
        void operator()(const Exponential& e) const {
            if (!(e.rate > 0.0) || !std::isfinite(e.rate))
                throw std::invalid_argument("exponential rate must be positive and finite");
        }
        void operator()(const Deterministic& d) const {
            if (!(d.delay > 0.0) || !std::isfinite(d.delay))
                throw std::invalid_argument("deterministic delay must be positive and finite");
        }
        void operator()(const FiniteMixture& mix) const {
            if (mix.weights.size() != mix.components.size() || mix.components.empty())
                throw std::invalid_argument("mixture needs matching nonempty weights and components");
            double sum = 0.0;
            for (double w : mix.weights) {
                if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("mixture weights must sum to 1");
            for (const auto& c : mix.components) check_duration_model(c);
        }
        void operator()(const MinOf& m) const {
            if (m.components.empty())
                throw std::invalid_argument("min-of law needs at least one component");
            for (const auto& c : m.components) check_duration_model(c);
        }
    };
    std::visit(Check{}, m.law);
}

// ---------------------------------------------------------------------------
// Normal helpers for the truncated-normal cost family.

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) * 0.3989422804014326779;
}

// Acklam's rational approximation with one Halley refinement.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal quantile needs p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cost priors.  virtual_cost is c + F(c)/f(c); allocation treats it as the
// effective unit price of a bidder, so every model used in an auction must
// have it nondecreasing on its support (regularity).

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

struct TruncatedNormal {
    double mu = 0.0;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

struct CostModel;

struct CostMixture {
    std::vector<double> weights;
    std::vector<CostModel> components;
};

struct CostModel {
    std::variant<Uniform, TruncatedNormal, CostMixture> law;

    static CostModel uniform(double lo, double hi) { return {Uniform{lo, hi}}; }
    static CostModel truncated_normal(double mu, double sigma, double lo, double hi) {
        return {TruncatedNormal{mu, sigma, lo, hi}};
    }
    static CostModel mixture(std::vector<double> w, std::vector<CostModel> comps) {
        return {CostMixture{std::move(w), std::move(comps)}};
    }
};

inline double cost_support_lo(const CostModel& m);
inline double cost_support_hi(const CostModel& m);
inline double cost_cdf(const CostModel& m, double c);
inline double cost_density(const CostModel& m, double c);

namespace detail {

inline double tn_mass(const TruncatedNormal& t) {
    return normal_cdf((t.hi - t.mu) / t.sigma) - normal_cdf((t.lo - t.mu) / t.sigma);
}

struct CostLo {
    double operator()(const Uniform& u) const { return u.lo; }
    double operator()(const TruncatedNormal& t) const { return t.lo; }
    double operator()(const CostMixture& m) const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& c : m.components) lo = std::min(lo, cost_support_lo(c));
        return lo;
    }
};

struct CostHi {
    double operator()(const Uniform& u) const { return u.hi; }
    double operator()(const TruncatedNormal& t) const { return t.hi; }
    double operator()(const CostMixture& m) const {
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& c : m.components) hi = std::max(hi, cost_support_hi(c));
        return hi;
    }
};

struct CostCdf {
    double c;
    double operator()(const Uniform& u) const {
        if (c <= u.lo) return 0.0;
        if (c >= u.hi) return 1.0;
        return (c - u.lo) / (u.hi - u.lo);
    }
    double operator()(const TruncatedNormal& t) const {
        if (c <= t.lo) return 0.0;
        if (c >= t.hi) return 1.0;
        double z = normal_cdf((c - t.mu) / t.sigma) - normal_cdf((t.lo - t.mu) / t.sigma);
        return z / tn_mass(t);
    }
    double operator()(const CostMixture& m) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < m.components.size(); ++k)
            acc += m.weights[k] * cost_cdf(m.components[k], c);
        return acc;
    }
};

struct CostPdf {
    double c;
    double operator()(const Uniform& u) const {
        return (c < u.lo || c > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo);
    }
    double operator()(const TruncatedNormal& t) const {
        if (c < t.lo || c > t.hi) return 0.0;
        return normal_pdf((c - t.mu) / t.sigma) / (t.sigma * tn_mass(t));
    }
    double operator()(const CostMixture& m) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < m.components.size(); ++k)
            acc += m.weights[k] * cost_density(m.components[k], c);
        return acc;
    }
};

struct CostSample {
    Rng& rng;
    double operator()(const Uniform& u) const {
        return u.lo + uniform01(rng) * (u.hi - u.lo);
    }
    double operator()(const TruncatedNormal& t) const {
        double flo = normal_cdf((t.lo - t.mu) / t.sigma);
        double fhi = normal_cdf((t.hi - t.mu) / t.sigma);
        double u = flo + uniform01(rng) * (fhi - flo);
        u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
        double x = t.mu + t.sigma * normal_quantile(u);
        return std::clamp(x, t.lo, t.hi);
    }
    double operator()(const CostMixture& m) const {
        double u = uniform01(rng);
        double acc = 0.0;
        for (std::size_t k = 0; k < m.components.size(); ++k) {
            acc += m.weights[k];
            if (u < acc || k + 1 == m.components.size())
                return sample_cost_impl(m.components[k]);
        }
        return sample_cost_impl(m.components.back());
    }
    double sample_cost_impl(const CostModel& m) const { return std::visit(*this, m.law); }
};

}  // namespace detail

inline double cost_support_lo(const CostModel& m) { return std::visit(detail::CostLo{}, m.law); }
inline double cost_support_hi(const CostModel& m) { return std::visit(detail::CostHi{}, m.law); }
inline double cost_cdf(const CostModel& m, double c) { return std::visit(detail::CostCdf{c}, m.law); }
inline double cost_density(const CostModel& m, double c) { return std::visit(detail::CostPdf{c}, m.law); }
inline double sample_cost(const CostModel& m, Rng& rng) {
    return std::visit(detail::CostSample{rng}, m.law);
}

inline void check_cost_model(const CostModel& m) {
    struct Check {
        void operator()(const Uniform& u) const {
            if (!(u.lo >= 0.0) || !(u.hi > u.lo) || !std::isfinite(u.hi))
                throw std::invalid_argument("uniform cost support needs 0 <= lo < hi");
        }
        void operator()(const TruncatedNormal& t) const {
            if (!(t.sigma > 0.0) || !std::isfinite(t.sigma) || !std::isfinite(t.mu))
                throw std::invalid_argument("truncated normal needs finite mu and positive sigma");
            if (!(t.lo >= 0.0) || !(t.hi > t.lo) || !std::isfinite(t.hi))
                throw std::invalid_argument("truncated normal support needs 0 <= lo < hi");
        }
        void operator()(const CostMixture& m) const {
            if (m.weights.size() != m.components.size() || m.components.empty())
                throw std::invalid_argument("cost mixture needs matching nonempty weights and components");
            double sum = 0.0;
            for (double w : m.weights) {
                if (!(w > 0.0)) throw std::invalid_argument("cost mixture weights must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("cost mixture weights must sum to 1");
            for (const auto& c : m.components) check_cost_model(c);
        }
    };
    std::visit(Check{}, m.law);
}

// Virtual (information-rent adjusted) cost c + F(c)/f(c).
inline double virtual_cost(const CostModel& m, double c) {
    double f = cost_density(m, c);
    if (!(f > 0.0))
        throw std::domain_error("virtual cost undefined where the cost density vanishes");
    return c + cost_cdf(m, c) / f;
}

// True iff virtual cost is nondecreasing across a uniform grid on the support.
// Points with zero density (possible in mixtures with gaps) count as failures.
inline bool check_regularity(const CostModel& m, int grid_size = 1024) {
    if (grid_size < 2) throw std::invalid_argument("regularity grid needs at least 2 points");
    double lo = cost_support_lo(m), hi = cost_support_hi(m);
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_size; ++k) {
        double c = lo + (hi - lo) * (k + 0.5) / grid_size;
        double phi;
        try {
            phi = virtual_cost(m, c);
        } catch (const std::domain_error&) {
            return false;
        }
        if (phi < prev - 1e-9 * (1.0 + std::abs(prev))) return false;
        prev = phi;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Providers and environment

struct Provider {
    int id = 0;  // 1-based, contiguous
    DurationModel duration;
    CostModel cost_model;
    double true_cost = 0.0;
};

struct Environment {
    Task task;
    std::vector<Provider> providers;

    int size() const { return static_cast<int>(providers.size()); }
    const Provider& provider(int id) const { return providers.at(static_cast<std::size_t>(id) - 1); }
};

inline Environment make_environment(Task task, std::vector<Provider> providers) {
    check_task(task);
    if (providers.empty()) throw std::invalid_argument("environment needs at least one provider");
    for (std::size_t k = 0; k < providers.size(); ++k) {
        const Provider& p = providers[k];
        if (p.id != static_cast<int>(k) + 1)
            throw std::invalid_argument("provider ids must be contiguous starting at 1");
        check_duration_model(p.duration);
        check_cost_model(p.cost_model);
        if (!check_regularity(p.cost_model))
            throw std::invalid_argument("cost model of provider " + std::to_string(p.id) +
                                        " is not regular (virtual cost decreases)");
        double lo = cost_support_lo(p.cost_model), hi = cost_support_hi(p.cost_model);
        if (!(p.true_cost >= lo && p.true_cost <= hi))
            throw std::invalid_argument("true cost of provider " + std::to_string(p.id) +
                                        " lies outside its cost support");
    }
    return Environment{task, std::move(providers)};
}

// ---------------------------------------------------------------------------
// Recruitment strategies and bids

struct StrategyEntry {
    int provider = 0;  // provider id
    double time = 0.0; // invocation time, relative to auction start
};

struct RecruitmentStrategy {
    std::vector<StrategyEntry> entries;  // sorted by time, earliest first

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
    bool contains(int id) const {
        for (const auto& e : entries)
            if (e.provider == id) return true;
        return false;
    }
};

inline RecruitmentStrategy make_strategy(std::vector<StrategyEntry> entries, const Environment& env) {
    double prev = 0.0;
    std::vector<char> seen(static_cast<std::size_t>(env.size()) + 1, 0);
    for (const auto& e : entries) {
        if (e.provider < 1 || e.provider > env.size())
            throw std::invalid_argument("strategy references unknown provider id");
        if (seen[static_cast<std::size_t>(e.provider)]++)
            throw std::invalid_argument("strategy recruits provider " + std::to_string(e.provider) + " twice");
        if (!(e.time >= prev))
            throw std::invalid_argument("strategy times must be nondecreasing");
        if (!(e.time <= env.task.deadline))
            throw std::invalid_argument("strategy time exceeds the deadline");
        prev = e.time;
    }
    return RecruitmentStrategy{std::move(entries)};
}

using BidVector = std::vector<double>;

inline void check_bids(const BidVector& bids, const Environment& env) {
    if (static_cast<int>(bids.size()) != env.size())
        throw std::invalid_argument("bid vector length must equal the number of providers");
    for (int i = 1; i <= env.size(); ++i) {
        const CostModel& m = env.provider(i).cost_model;
        double b = bids[static_cast<std::size_t>(i) - 1];
        if (!(b >= cost_support_lo(m) && b <= cost_support_hi(m)))
            throw std::invalid_argument("bid of provider " + std::to_string(i) +
                                        " lies outside its cost support");
    }
}

}  // namespace wgpa
