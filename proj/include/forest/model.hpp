#pragma once

// Two-age-class forest model: parameters, closed-form derived quantities,
// stationary points of the deterministic skeleton, and the infinitesimal
// generator of the diffusion.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace forest {

struct ModelParams {
    double rho;    // reproduction rate
    double a;      // mortality curvature
    double b;      // old-tree density minimizing young mortality
    double c;      // baseline young mortality
    double f;      // aging rate
    double h;      // old-tree mortality
    double sigma;  // noise intensity

    void validate() const {
        auto require = [](bool ok, const char* name, const char* what) {
            if (!ok) throw std::invalid_argument(std::string("ModelParams: ") + name + " " + what);
        };
        require(std::isfinite(rho), "rho", "must be finite");
        require(std::isfinite(a), "a", "must be finite");
        require(std::isfinite(b), "b", "must be finite");
        require(std::isfinite(c), "c", "must be finite");
        require(std::isfinite(f), "f", "must be finite");
        require(std::isfinite(h), "h", "must be finite");
        require(std::isfinite(sigma), "sigma", "must be finite");
        require(rho > 0.0, "rho", "must be > 0");
        require(a > 0.0, "a", "must be > 0");
        require(b > 0.0, "b", "must be > 0");
        require(c > 0.0, "c", "must be > 0");
        require(f > 0.0, "f", "must be > 0");
        require(h >= 0.0, "h", "must be >= 0");
        require(sigma >= 0.0, "sigma", "must be >= 0");
    }
};

inline ModelParams make_params(double rho, double a, double b, double c,
                               double f, double h, double sigma) {
    ModelParams p{rho, a, b, c, f, h, sigma};
    p.validate();
    return p;
}

struct State {
    double u;  // young-tree density
    double v;  // old-tree density
};

using Vec2 = std::array<double, 2>;

// gamma(v) = a (v-b)^2 + c, the young-tree mortality curve.
inline double gamma_mortality(double v, const ModelParams& p) {
    const double d = v - p.b;
    return p.a * d * d + p.c;
}

// M0 = sup_{v>0} rho v / (gamma(v) + f), closed form.
inline double m0(const ModelParams& p) {
    const double k = p.a * p.b * p.b + p.c + p.f;
    const double sk = std::sqrt(k);
    const double sa = std::sqrt(p.a);
    const double d = sk - sa * p.b;
    return p.rho * sk / (sa * (d * d + p.c + p.f));
}

struct Thresholds {
    double h_lower;  // rho f / (a b^2 + c + f)
    double h_upper;  // rho f / (c + f)
    double m0;
};

inline Thresholds thresholds(const ModelParams& p) {
    return {p.rho * p.f / (p.a * p.b * p.b + p.c + p.f),
            p.rho * p.f / (p.c + p.f),
            m0(p)};
}

enum class PointLabel { O, Pminus, Pplus };
enum class Stability { Stable, Unstable, GloballyAsymptoticallyStable, NotApplicable };

struct StationaryPoint {
    PointLabel label;
    State state;
    Stability stability;
};

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "Stable";
        case Stability::Unstable: return "Unstable";
        case Stability::GloballyAsymptoticallyStable: return "GloballyAsymptoticallyStable";
        default: return "NotApplicable";
    }
}

inline const char* to_string(PointLabel l) {
    switch (l) {
        case PointLabel::O: return "O";
        case PointLabel::Pminus: return "P-";
        default: return "P+";
    }
}

// Drift of the system: (rho v - (gamma(v)+f) u, f u - h v).
inline Vec2 drift(const State& s, const ModelParams& p) {
    return {p.rho * s.v - (gamma_mortality(s.v, p) + p.f) * s.u,
            p.f * s.u - p.h * s.v};
}

// Diffusion vector (0, sigma v); noise enters only the old-tree equation.
inline Vec2 diffusion(const State& s, const ModelParams& p) {
    return {0.0, p.sigma * s.v};
}

struct VectorField {
    Vec2 drift;
    Vec2 diffusion;
};

inline VectorField vector_field(const State& s, const ModelParams& p) {
    return {drift(s, p), diffusion(s, p)};
}

// Jacobian of the drift, row-major [ [d a_u/du, d a_u/dv], [d a_v/du, d a_v/dv] ].
inline std::array<double, 4> drift_jacobian(const State& s, const ModelParams& p) {
    return {-(gamma_mortality(s.v, p) + p.f),
            p.rho - 2.0 * p.a * (s.v - p.b) * s.u,
            p.f,
            -p.h};
}

namespace detail {

inline bool near_rel(double x, double y, double tol) {
    return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
}

// Max real part of the eigenvalues of a 2x2 matrix.
inline double max_eigen_real_part(const std::array<double, 4>& j) {
    const double tr = j[0] + j[3];
    const double det = j[0] * j[3] - j[1] * j[2];
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) return 0.5 * (tr + std::sqrt(disc));
    return 0.5 * tr;
}

}  // namespace detail

// Stationary points of the deterministic skeleton with Table-1 stability
// labels. Labels are assigned only for h strictly inside an interval of the
// table; at the boundaries h_lower and h_upper the classification is
// NotApplicable.
inline std::vector<StationaryPoint> stationary_points(const ModelParams& p) {
    p.validate();
    if (p.h == 0.0)
        throw std::domain_error("stationary_points: h must be positive");
    const Thresholds thr = thresholds(p);
    constexpr double boundary_tol = 1e-12;
    const bool at_lower = detail::near_rel(p.h, thr.h_lower, boundary_tol);
    const bool at_upper = detail::near_rel(p.h, thr.h_upper, boundary_tol);

    std::vector<StationaryPoint> pts;

    Stability o_stab = Stability::NotApplicable;
    if (!at_lower && !at_upper) {
        if (p.h < thr.h_lower) o_stab = Stability::Unstable;
        else if (p.h < thr.h_upper) o_stab = Stability::Stable;
        else o_stab = Stability::GloballyAsymptoticallyStable;
    }
    pts.push_back({PointLabel::O, {0.0, 0.0}, o_stab});

    const double disc = p.rho * p.f - p.h * (p.c + p.f);
    if (disc >= -boundary_tol * p.rho * p.f) {
        const double s = std::sqrt(std::max(disc, 0.0) / (p.a * p.h));
        const double v_plus = p.b + s;
        pts.push_back({PointLabel::Pplus,
                       {p.h * v_plus / p.f, v_plus},
                       at_upper ? Stability::NotApplicable : Stability::Stable});
        const double v_minus = p.b - s;
        if (v_minus >= -boundary_tol * p.b) {
            Stability m_stab = (at_lower || at_upper) ? Stability::NotApplicable
                                                      : Stability::Unstable;
            pts.push_back({PointLabel::Pminus,
                           {p.h * std::max(v_minus, 0.0) / p.f, std::max(v_minus, 0.0)},
                           m_stab});
        }
    }
    return pts;
}

// Caller-supplied partial derivatives of a test function V at a point.
struct Partials {
    double du;   // dV/du
    double dv;   // dV/dv
    double dvv;  // d2V/dv2
};

// Infinitesimal generator: L V = 1/2 sigma^2 v^2 V_vv + a_u V_u + a_v V_v.
inline double apply_generator(const State& s, const ModelParams& p, const Partials& d) {
    const Vec2 a = drift(s, p);
    return 0.5 * p.sigma * p.sigma * s.v * s.v * d.dvv + a[0] * d.du + a[1] * d.dv;
}

// L applied to Q(u,v) = log(u + kappa v), in the closed form
//   ((kappa f - c - f) u + (rho - kappa h) v) / (u + kappa v)
//   - sigma^2 kappa^2 v^2 / (2 (u + kappa v)^2)
//   - a u (v - b)^2 / (u + kappa v).
inline double generator_logQ(const State& s, double kappa, const ModelParams& p) {
    const double w = s.u + kappa * s.v;
    if (w == 0.0)
        throw std::domain_error("generator_logQ: u + kappa v must be nonzero");
    const double d = s.v - p.b;
    return ((kappa * p.f - p.c - p.f) * s.u + (p.rho - kappa * p.h) * s.v) / w
           - 0.5 * p.sigma * p.sigma * kappa * kappa * s.v * s.v / (w * w)
           - p.a * s.u * d * d / w;
}

}  // namespace forest
