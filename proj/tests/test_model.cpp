#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "forest/model.hpp"
#include "test_support.hpp"

using namespace forest;

namespace {

const ModelParams kFig2 = make_params(5.0, 2.0, 1.0, 2.5, 4.0, 1.0, 0.5);

// Independent supremum oracle for M0 = sup_{v>0} rho v / (gamma(v)+f).
double m0_grid_oracle(const ModelParams& p, double step) {
    auto neg = [&p](double v) {
        return -(p.rho * v / (gamma_mortality(v, p) + p.f));
    };
    const double hi = p.b + 10.0 * std::sqrt((p.rho + p.c + p.f) / p.a);
    return -testsupport::grid_minimize(neg, step, hi, step);
}

double residual_inf_norm(const State& s, const ModelParams& p) {
    const Vec2 d = drift(s, p);
    return std::max(std::abs(d[0]), std::abs(d[1]));
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(make_params(-1, 2, 1, 2.5, 4, 1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_params(5, 0, 1, 2.5, 4, 1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_params(5, 2, 1, 2.5, 4, -0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_params(5, 2, 1, 2.5, 4, 1, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_params(std::nan(""), 2, 1, 2.5, 4, 1, 0.5), std::invalid_argument);
    CHECK_NOTHROW(make_params(5, 2, 1, 2.5, 4, 0, 0));
}

TEST_CASE("mortality curve") {
    CHECK(gamma_mortality(kFig2.b, kFig2) == doctest::Approx(2.5));
    const ModelParams p1 = make_params(5, 2, 1, 2.5, 4, 1, 0.5);
    CHECK(gamma_mortality(0.0, p1) == doctest::Approx(4.5));
    const ModelParams p2 = make_params(7, 3, 4, 5, 6, 2, 4);
    CHECK(gamma_mortality(4.0, p2) == doctest::Approx(5.0));

    // minimized exactly at v=b, never below c
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        const ModelParams p = testsupport::random_params(rng);
        const double v = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
        CHECK(gamma_mortality(v, p) >= p.c);
    }
}

TEST_CASE("m0 closed form vs grid oracle, frozen examples") {
    const ModelParams pa = make_params(5, 2, 1, 2.5, 4, 1, 0.5);
    CHECK(m0(pa) == doctest::Approx(1.17752).epsilon(1e-4));
    const ModelParams pb = make_params(7, 3, 4, 5, 6, 2, 4);
    CHECK(m0(pb) == doctest::Approx(2.68379).epsilon(1e-4));
    // fine-grid oracle on the frozen examples
    CHECK(m0(pa) == doctest::Approx(m0_grid_oracle(pa, 1e-5)).epsilon(1e-6));
    CHECK(m0(pb) == doctest::Approx(m0_grid_oracle(pb, 1e-5)).epsilon(1e-6));
}

TEST_CASE("m0 oracle agreement on random draws and rho-linearity") {
    std::mt19937 rng(11);
    for (int i = 0; i < 100; ++i) {
        const ModelParams p = testsupport::random_params(rng);
        CHECK(m0(p) == doctest::Approx(m0_grid_oracle(p, 1e-3)).epsilon(1e-6));
        ModelParams doubled = p;
        doubled.rho *= 2.0;
        CHECK(m0(doubled) == doctest::Approx(2.0 * m0(p)).epsilon(1e-14));
    }
}

TEST_CASE("thresholds") {
    const Thresholds t1 = thresholds(make_params(5, 2, 1, 2.5, 4, 1, 0.5));
    CHECK(t1.h_lower == doctest::Approx(20.0 / 8.5).epsilon(1e-12));
    CHECK(t1.h_upper == doctest::Approx(20.0 / 6.5).epsilon(1e-12));
    const Thresholds t2 = thresholds(make_params(7, 3, 4, 5, 6, 2, 4));
    CHECK(t2.h_upper == doctest::Approx(42.0 / 11.0).epsilon(1e-12));

    std::mt19937 rng(13);
    for (int i = 0; i < 200; ++i) {
        const Thresholds t = thresholds(testsupport::random_params(rng));
        CHECK(t.h_lower < t.h_upper);
        CHECK(t.h_lower > 0.0);
        CHECK(t.m0 > 0.0);
    }
}

TEST_CASE("stationary points: Fig-2 parameters") {
    const auto pts = stationary_points(kFig2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].label == PointLabel::O);
    CHECK(pts[0].stability == Stability::Unstable);
    CHECK(pts[1].label == PointLabel::Pplus);
    CHECK(pts[1].state.u == doctest::Approx(0.899519).epsilon(1e-5));
    CHECK(pts[1].state.v == doctest::Approx(3.598076).epsilon(1e-5));
    CHECK(pts[1].stability == Stability::Stable);
    for (const auto& pt : pts) CHECK(residual_inf_norm(pt.state, kFig2) < 1e-10);
}

TEST_CASE("stationary points: large h leaves only the origin") {
    ModelParams p = kFig2;
    p.h = 5.0;  // above h_upper = 20/6.5
    const auto pts = stationary_points(p);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].label == PointLabel::O);
    CHECK(pts[0].stability == Stability::GloballyAsymptoticallyStable);
}

TEST_CASE("stationary points: boundary h = h_upper merges the pair") {
    ModelParams p = kFig2;
    p.h = thresholds(kFig2).h_upper;
    const auto pts = stationary_points(p);
    REQUIRE(pts.size() == 3);
    for (const auto& pt : pts) {
        if (pt.label == PointLabel::O) continue;
        CHECK(pt.state.v == doctest::Approx(p.b).epsilon(1e-6));
        CHECK(pt.state.u == doctest::Approx(p.h * p.b / p.f).epsilon(1e-6));
        CHECK(pt.stability == Stability::NotApplicable);
    }
}

TEST_CASE("stationary points: h = 0 rejected") {
    ModelParams p = kFig2;
    p.h = 0.0;
    CHECK_THROWS_AS(stationary_points(p), std::domain_error);
}

TEST_CASE("stationary points: residuals and eigenvalue-consistent labels") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    int checked = 0;
    for (int i = 0; i < 30; ++i) {
        ModelParams p = testsupport::random_params(rng);
        const Thresholds t = thresholds(p);
        const double hs[3] = {t.h_lower * frac(rng),
                              t.h_lower + (t.h_upper - t.h_lower) * frac(rng),
                              t.h_upper * (1.0 + frac(rng))};
        for (double h : hs) {
            p.h = h;
            for (const auto& pt : stationary_points(p)) {
                CHECK(residual_inf_norm(pt.state, p) < 1e-10);
                if (pt.stability == Stability::NotApplicable) continue;
                const double re = detail::max_eigen_real_part(drift_jacobian(pt.state, p));
                if (pt.stability == Stability::Unstable) {
                    CHECK(re > 1e-9);
                } else {
                    CHECK(re < -1e-9);
                }
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("vector field") {
    const auto vf0 = vector_field({0.0, 0.0}, kFig2);
    CHECK(vf0.drift[0] == 0.0);
    CHECK(vf0.drift[1] == 0.0);
    CHECK(vf0.diffusion[0] == 0.0);
    CHECK(vf0.diffusion[1] == 0.0);

    const auto vf = vector_field({2.0, 1.0}, kFig2);
    CHECK(vf.drift[0] == doctest::Approx(-8.0));
    CHECK(vf.drift[1] == doctest::Approx(7.0));
    CHECK(vf.diffusion[0] == 0.0);
    CHECK(vf.diffusion[1] == doctest::Approx(0.5));

    std::mt19937 rng(19);
    std::uniform_real_distribution<double> coord(0.0, 20.0);
    for (int i = 0; i < 100; ++i) {
        const ModelParams p = testsupport::random_params(rng);
        CHECK(diffusion({coord(rng), coord(rng)}, p)[0] == 0.0);
    }
}

TEST_CASE("generator on caller-supplied partials") {
    CHECK(apply_generator({3.0, 2.0}, kFig2, {0.0, 0.0, 0.0}) == 0.0);
    // V = v at (2,1)
    CHECK(apply_generator({2.0, 1.0}, kFig2, {0.0, 1.0, 0.0}) == doctest::Approx(7.0));
    // V = log(u + 3v) at (1,1)
    const double w = 1.0 + 3.0 * 1.0;
    const Partials d{1.0 / w, 3.0 / w, -9.0 / (w * w)};
    CHECK(apply_generator({1.0, 1.0}, kFig2, d) == doctest::Approx(1.8046875).epsilon(1e-12));
}

TEST_CASE("generator_logQ closed form") {
    CHECK(generator_logQ({1.0, 1.0}, 3.0, kFig2) == doctest::Approx(1.8046875).epsilon(1e-12));
    CHECK_THROWS_AS(generator_logQ({0.0, 0.0}, 3.0, kFig2), std::domain_error);

    // dominant-term limit for large u
    const double v = 2.0, kappa = 3.0;
    const double limit = kappa * kFig2.f - kFig2.c - kFig2.f
                         - kFig2.a * (v - kFig2.b) * (v - kFig2.b);
    CHECK(generator_logQ({1e9, v}, kappa, kFig2) == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("generator_logQ agrees with apply_generator on analytic partials") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> coord(0.01, 20.0);
    std::uniform_real_distribution<double> kap(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const ModelParams p = testsupport::random_params(rng);
        const State s{coord(rng), coord(rng)};
        const double kappa = kap(rng);
        const double w = s.u + kappa * s.v;
        const Partials d{1.0 / w, kappa / w, -kappa * kappa / (w * w)};
        const double via_generator = apply_generator(s, p, d);
        const double closed = generator_logQ(s, kappa, p);
        CHECK(closed == doctest::Approx(via_generator).epsilon(1e-12));
    }
}
