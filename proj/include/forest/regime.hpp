#pragma once

// Decidable regime predicates: the sustainability certificate, the two
// decline hypotheses built on the quartic F1 and quadratic F2, the
// decline-in-expectation threshold test, and a combined classifier with
// parameter sweeps over h and sigma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forest/model.hpp"

namespace forest {

// F1(x) = f^2 x^4 + 2f(sigma^2+h-c-f) x^3
//         + ((c+f-h)^2 - 2 rho f - 2(c+f) sigma^2) x^2
//         + 2 rho (c+f-h) x + rho^2
inline double f1(double x, const ModelParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double cf = p.c + p.f;
    const double a4 = p.f * p.f;
    const double a3 = 2.0 * p.f * (s2 + p.h - cf);
    const double a2 = (cf - p.h) * (cf - p.h) - 2.0 * p.rho * p.f - 2.0 * cf * s2;
    const double a1 = 2.0 * p.rho * (cf - p.h);
    return (((a4 * x + a3) * x + a2) * x + a1) * x + p.rho * p.rho;
}

// F2(x) = f x^2 - (c+f+h) x + rho
inline double f2(double x, const ModelParams& p) {
    return (p.f * x - (p.c + p.f + p.h)) * x + p.rho;
}

namespace detail {

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, with Newton polish.
inline std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
    std::vector<double> roots;
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale == 0.0) return roots;
    if (std::abs(c3) < 1e-14 * scale) {
        // quadratic (or lower) degenerate case
        if (std::abs(c2) < 1e-14 * scale) {
            if (std::abs(c1) >= 1e-14 * scale) roots.push_back(-c0 / c1);
            return roots;
        }
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
            roots.push_back(q / c2);
            if (q != 0.0) roots.push_back(c0 / q);
            else roots.push_back(0.0);
        }
        return roots;
    }
    const double p = c2 / c3, q = c1 / c3, r = c0 / c3;
    // depressed cubic t^3 + pt t + qt, x = t - p/3
    const double pt = q - p * p / 3.0;
    const double qt = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    const double disc = qt * qt / 4.0 + pt * pt * pt / 27.0;
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double u = std::cbrt(-qt / 2.0 + sq);
        const double w = std::cbrt(-qt / 2.0 - sq);
        roots.push_back(u + w - p / 3.0);
    } else if (disc == 0.0) {
        const double u = std::cbrt(-qt / 2.0);
        roots.push_back(2.0 * u - p / 3.0);
        roots.push_back(-u - p / 3.0);
    } else {
        const double m = 2.0 * std::sqrt(-pt / 3.0);
        const double theta = std::acos(std::clamp(3.0 * qt / (pt * m), -1.0, 1.0)) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) - p / 3.0);
    }
    for (double& x : roots) {
        for (int it = 0; it < 3; ++it) {
            const double fx = ((c3 * x + c2) * x + c1) * x + c0;
            const double dfx = (3.0 * c3 * x + 2.0 * c2) * x + c1;
            if (dfx != 0.0) x -= fx / dfx;
        }
    }
    return roots;
}

// Roots of F1'(x) = 4 f^2 x^3 + 3 a3 x^2 + 2 a2 x + a1.
inline std::vector<double> f1_critical_points(const ModelParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double cf = p.c + p.f;
    const double a3 = 2.0 * p.f * (s2 + p.h - cf);
    const double a2 = (cf - p.h) * (cf - p.h) - 2.0 * p.rho * p.f - 2.0 * cf * s2;
    const double a1 = 2.0 * p.rho * (cf - p.h);
    return real_cubic_roots(4.0 * p.f * p.f, 3.0 * a3, 2.0 * a2, a1);
}

}  // namespace detail

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(lo < hi); }
};

struct SustainabilityCertificate {
    bool holds = false;
    std::optional<Interval> kappa_interval;
    std::optional<double> kappa_witness;
    std::optional<double> epsilon_witness;
};

namespace detail {

// Quadrant nonnegativity of F(u,v) = A u^2 + 2B uv + C v^2 on u,v >= 0.
inline bool quadrant_psd(double A, double B, double C) {
    if (A < 0.0 || C < 0.0) return false;
    return B >= 0.0 || B * B <= A * C;
}

// Coefficients of the certificate form F at weight kappa and margin eps:
//   F(u,v) = (2(kf-c-f-ab^2)-eps) u^2
//          + 2(k(kf-c-f-ab^2)+(rho-kh)-k eps) uv
//          + (2k(rho-kh)-k^2 sigma^2-k^2 eps) v^2
inline void certificate_form(const ModelParams& p, double kappa, double eps,
                             double& A, double& B, double& C) {
    const double g = kappa * p.f - p.c - p.f - p.a * p.b * p.b;
    A = 2.0 * g - eps;
    B = kappa * g + (p.rho - kappa * p.h) - kappa * eps;
    C = 2.0 * kappa * (p.rho - kappa * p.h) - kappa * kappa * p.sigma * p.sigma
        - kappa * kappa * eps;
}

}  // namespace detail

// Evaluate the certificate quadratic form at a quadrant point.
inline double certificate_form_value(const ModelParams& p, double kappa, double eps,
                                     double u, double v) {
    double A, B, C;
    detail::certificate_form(p, kappa, eps, A, B, C);
    return A * u * u + 2.0 * B * u * v + C * v * v;
}

// Sustainability holds iff h < rho f/(a b^2+c+f) and sigma^2 < 2(rho f/(a b^2+c+f) - h).
// When it holds, the admissible kappa interval is
//   ( (a b^2+c+f)/f , min(rho/h, 2 rho/(sigma^2+2h)) ),
// the witness is its midpoint, and the epsilon witness is the largest eps >= 0
// keeping the certificate form nonnegative on the quadrant (found by bisection;
// feasibility is monotone in eps since the form loses eps (u+kappa v)^2).
inline SustainabilityCertificate sustainability_check(const ModelParams& p) {
    SustainabilityCertificate cert;
    const double h_lower = p.rho * p.f / (p.a * p.b * p.b + p.c + p.f);
    cert.holds = (p.h < h_lower) && (p.sigma * p.sigma < 2.0 * (h_lower - p.h));
    if (!cert.holds) return cert;

    const double lo = (p.a * p.b * p.b + p.c + p.f) / p.f;
    const double denom = p.sigma * p.sigma + 2.0 * p.h;
    double hi = std::numeric_limits<double>::infinity();
    if (p.h > 0.0) hi = p.rho / p.h;
    if (denom > 0.0) hi = std::min(hi, 2.0 * p.rho / denom);
    cert.kappa_interval = Interval{lo, hi};
    const double kappa = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    cert.kappa_witness = kappa;

    double eps_hi = 2.0 * (p.rho - kappa * p.h) / kappa;
    double A, B, C;
    detail::certificate_form(p, kappa, 0.0, A, B, C);
    if (!detail::quadrant_psd(A, B, C)) {
        cert.epsilon_witness = 0.0;
        return cert;
    }
    double feas = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (feas + eps_hi);
        detail::certificate_form(p, kappa, mid, A, B, C);
        if (detail::quadrant_psd(A, B, C)) feas = mid;
        else eps_hi = mid;
    }
    cert.epsilon_witness = feas;
    return cert;
}

enum class DeclineBranch { CF, AB, None };

struct DeclineExpectation {
    bool fires = false;
    DeclineBranch branch = DeclineBranch::None;
    double h_threshold = 0.0;  // the binding minimum
};

// Fires iff h >= min{ rho f/(c+f), f(rho + 2ab M*)/(a b^2+c+f) }, M* = max{u0, M0}.
inline DeclineExpectation decline_expectation_check(const ModelParams& p, double u0) {
    const double m_star = std::max(u0, m0(p));
    const double t_cf = p.rho * p.f / (p.c + p.f);
    const double t_ab = p.f * (p.rho + 2.0 * p.a * p.b * m_star)
                        / (p.a * p.b * p.b + p.c + p.f);
    DeclineExpectation r;
    r.h_threshold = std::min(t_cf, t_ab);
    r.fires = p.h >= r.h_threshold;
    if (r.fires) r.branch = (t_cf <= t_ab) ? DeclineBranch::CF : DeclineBranch::AB;
    return r;
}

struct Hypothesis1Result {
    bool holds = false;
    double inf_value = 0.0;
    double argmin = 0.0;
};

// inf F1 over the open interval (0, (c+f)/f), via critical points of the
// quartic plus endpoint limits. The interval is open, but by continuity the
// infimum over it equals the minimum over the closure, and a strictly
// negative endpoint limit already forces negative interior values.
inline Hypothesis1Result hypothesis1_check(const ModelParams& p) {
    const double hi = (p.c + p.f) / p.f;
    Hypothesis1Result r;
    r.inf_value = f1(0.0, p);  // = rho^2
    r.argmin = 0.0;
    const double at_hi = f1(hi, p);
    if (at_hi < r.inf_value) { r.inf_value = at_hi; r.argmin = hi; }
    for (double x : detail::f1_critical_points(p)) {
        if (x > 0.0 && x < hi) {
            const double y = f1(x, p);
            if (y < r.inf_value) { r.inf_value = y; r.argmin = x; }
        }
    }
    r.holds = r.inf_value < 0.0;
    return r;
}

struct Hypothesis2Result {
    bool holds = false;
    bool interval_empty = true;
    double sup_f1 = std::numeric_limits<double>::quiet_NaN();
    double inf_f2 = std::numeric_limits<double>::quiet_NaN();
};

// Over (2 rho/(sigma^2+2h), (c+f)/f): holds iff sup F1 > 0 and inf F2 < 0.
inline Hypothesis2Result hypothesis2_check(const ModelParams& p) {
    Hypothesis2Result r;
    const double denom = p.sigma * p.sigma + 2.0 * p.h;
    const double hi = (p.c + p.f) / p.f;
    if (denom <= 0.0) return r;  // lower endpoint at infinity
    const double lo = 2.0 * p.rho / denom;
    if (lo >= hi) return r;
    r.interval_empty = false;

    r.sup_f1 = std::max(f1(lo, p), f1(hi, p));
    for (double x : detail::f1_critical_points(p))
        if (x > lo && x < hi) r.sup_f1 = std::max(r.sup_f1, f1(x, p));

    r.inf_f2 = std::min(f2(lo, p), f2(hi, p));
    const double vertex = 0.5 * (p.c + p.f + p.h) / p.f;
    if (vertex > lo && vertex < hi) r.inf_f2 = std::min(r.inf_f2, f2(vertex, p));

    r.holds = (r.sup_f1 > 0.0) && (r.inf_f2 < 0.0);
    return r;
}

// sigma^2 > (rho+c-h)^2/(2c); algebraically equivalent to f1(1) < 0.
inline bool large_noise_check(const ModelParams& p) {
    const double d = p.rho + p.c - p.h;
    return p.sigma * p.sigma > d * d / (2.0 * p.c);
}

enum class Verdict { Sustainable, DeclineInExpectation, DeclineAlmostSure, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Sustainable: return "Sustainable";
        case Verdict::DeclineInExpectation: return "DeclineInExpectation";
        case Verdict::DeclineAlmostSure: return "DeclineAlmostSure";
        default: return "Indeterminate";
    }
}

inline const char* to_string(DeclineBranch b) {
    switch (b) {
        case DeclineBranch::CF: return "CF";
        case DeclineBranch::AB: return "AB";
        default: return "none";
    }
}

struct RegimeReport {
    Verdict verdict = Verdict::Indeterminate;
    SustainabilityCertificate sustainability;
    DeclineExpectation decline_expectation;
    Hypothesis1Result hypothesis1;
    Hypothesis2Result hypothesis2;
    bool large_noise = false;
    bool inconsistent = false;  // sustainable and decline predicates co-fired
};

inline RegimeReport classify_regime(const ModelParams& p, double u0) {
    p.validate();
    if (u0 < 0.0) throw std::invalid_argument("classify_regime: u0 must be >= 0");
    RegimeReport rep;
    rep.sustainability = sustainability_check(p);
    rep.decline_expectation = decline_expectation_check(p, u0);
    rep.hypothesis1 = hypothesis1_check(p);
    rep.hypothesis2 = hypothesis2_check(p);
    rep.large_noise = large_noise_check(p);

    const bool decline_as = rep.hypothesis1.holds || rep.hypothesis2.holds;
    const bool decline_any = decline_as || rep.decline_expectation.fires;
    if (rep.sustainability.holds && decline_any) {
        rep.verdict = Verdict::Indeterminate;
        rep.inconsistent = true;
    } else if (rep.sustainability.holds) {
        rep.verdict = Verdict::Sustainable;
    } else if (decline_as) {
        rep.verdict = Verdict::DeclineAlmostSure;
    } else if (rep.decline_expectation.fires) {
        rep.verdict = Verdict::DeclineInExpectation;
    }
    return rep;
}

struct SweepAxis {
    std::string name;  // "h" or "sigma"
    double min = 0.0;
    double max = 0.0;
    int steps = 1;
};

struct SweepResult {
    SweepAxis axis1, axis2;
    std::vector<double> axis1_values, axis2_values;
    std::vector<RegimeReport> grid;  // row-major: axis1 rows, axis2 columns

    const RegimeReport& at(int i, int j) const {
        return grid[static_cast<size_t>(i) * axis2_values.size() + j];
    }
};

namespace detail {

inline std::vector<double> axis_values(const SweepAxis& ax) {
    if (ax.steps < 1) throw std::invalid_argument("sweep: steps must be >= 1");
    std::vector<double> v;
    v.reserve(ax.steps);
    if (ax.steps == 1) { v.push_back(ax.min); return v; }
    for (int i = 0; i < ax.steps; ++i)
        v.push_back(ax.min + (ax.max - ax.min) * i / (ax.steps - 1));
    return v;
}

inline void apply_axis(ModelParams& p, const std::string& name, double value) {
    if (name == "h") p.h = value;
    else if (name == "sigma") p.sigma = value;
    else throw std::invalid_argument("sweep: axis must be one of {h, sigma}, got " + name);
}

}  // namespace detail

// Row-major grid of classify_regime over two of {h, sigma}.
inline SweepResult sweep(const ModelParams& tmpl, const SweepAxis& axis1,
                         const SweepAxis& axis2, double u0) {
    if (axis1.name == axis2.name)
        throw std::invalid_argument("sweep: axes must name distinct parameters");
    SweepResult r;
    r.axis1 = axis1;
    r.axis2 = axis2;
    r.axis1_values = detail::axis_values(axis1);
    r.axis2_values = detail::axis_values(axis2);
    r.grid.reserve(r.axis1_values.size() * r.axis2_values.size());
    for (double x1 : r.axis1_values) {
        for (double x2 : r.axis2_values) {
            ModelParams p = tmpl;
            detail::apply_axis(p, axis1.name, x1);
            detail::apply_axis(p, axis2.name, x2);
            r.grid.push_back(classify_regime(p, u0));
        }
    }
    return r;
}

}  // namespace forest
