#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "driftlab/dynamics.hpp"
#include "driftlab/perturbation.hpp"
#include "driftlab/qpoly.hpp"
#include "driftlab/state.hpp"

using namespace driftlab;

TEST_CASE("angle wrapping") {
    CHECK(wrap_2pi(0.0) == 0.0);
    CHECK(wrap_2pi(two_pi) == doctest::Approx(0.0));
    CHECK(wrap_2pi(-0.1) == doctest::Approx(two_pi - 0.1));
    CHECK(wrap_2pi(7.0 * two_pi + 1.25) == doctest::Approx(1.25));
    CHECK(wrap_pi(3.5) == doctest::Approx(3.5 - two_pi));
    CHECK(angular_dist(0.1, two_pi - 0.1) == doctest::Approx(0.2));
    CHECK(angular_dist(1.0, 1.0 + 19.0 * two_pi) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("trig polynomial evaluation and derivative") {
    QPolynomial g(0.5, {1.0, -0.25, 0.0}, {0.0, 2.0, 0.125});
    for (double q : {0.0, 0.3, 1.7, -2.9, 10.0}) {
        double ref = 0.5 + std::cos(q) - 0.25 * std::cos(2 * q) + 2.0 * std::sin(2 * q) +
                     0.125 * std::sin(3 * q);
        CHECK(g.eval(q) == doctest::Approx(ref).epsilon(1e-14));
    }
    QPolynomial dg = g.derivative();
    for (double q : {0.2, 1.1, -0.7}) {
        double h = 1e-6;
        double fd = (g.eval(q + h) - g.eval(q - h)) / (2 * h);
        CHECK(dg.eval(q) == doctest::Approx(fd).epsilon(1e-8));
        CHECK(std::fabs(dg.eval(q)) <= g.lipschitz_bound());
        CHECK(std::fabs(g.eval(q)) <= g.max_abs_bound());
    }
    CHECK(QPolynomial().is_zero());
    CHECK(QPolynomial::constant(0.0).is_zero());
    CHECK_FALSE(g.is_zero());
    CHECK(g.scaled(2.0).eval(0.4) == doctest::Approx(2.0 * g.eval(0.4)));
}

TEST_CASE("one minus cos profile") {
    QPolynomial g = QPolynomial::one_minus_cos();
    CHECK(g.eval(0.0) == doctest::Approx(0.0));
    CHECK(g.eval(M_PI) == doctest::Approx(2.0));
    QPolynomial dg = g.derivative();
    CHECK(dg.eval(M_PI / 2) == doctest::Approx(1.0));  // d/dq (1 - cos q) = sin q
}

TEST_CASE("pendulum energy landmarks") {
    CHECK(pendulum_energy(0.0, 0.0) == 0.0);
    CHECK(pendulum_energy(M_PI, 2.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(pendulum_energy(M_PI, 0.0) == doctest::Approx(-2.0));
    CHECK(pendulum_energy(0.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("separatrix parametrization") {
    double q, p;
    separatrix_state(0.0, q, p);
    CHECK(q == doctest::Approx(M_PI).epsilon(1e-15));
    CHECK(p == doctest::Approx(2.0).epsilon(1e-15));
    for (double t : {-3.0, -1.0, 0.5, 1.0, 2.5, 6.0}) {
        separatrix_state(t, q, p);
        CHECK(1.0 - std::cos(q) == doctest::Approx(2.0 / (std::cosh(t) * std::cosh(t))).epsilon(1e-12));
        CHECK(p == doctest::Approx(2.0 / std::cosh(t)).epsilon(1e-15));
        CHECK(pendulum_energy(q, p) == doctest::Approx(0.0).epsilon(1e-14));
    }
    separatrix_state(800.0, q, p);
    CHECK(q == two_pi);
    CHECK(p == 0.0);
    separatrix_state(-800.0, q, p);
    CHECK(q == 0.0);
    CHECK(p == 0.0);
}

TEST_CASE("mode order norms") {
    std::vector<int> n{1, -2};
    CHECK(mode_order(n, 3, ModeNorm::L1) == 6.0);
    CHECK(mode_order(n, 3, ModeNorm::L2) == doctest::Approx(std::sqrt(14.0)));
    CHECK(mode_order(n, 3, ModeNorm::Linf) == 3.0);
    CHECK(mode_norm_from_string("l2") == ModeNorm::L2);
    CHECK(to_string(ModeNorm::Linf) == "linf");
    CHECK_THROWS_AS(mode_norm_from_string("sup"), ConfigError);
}

TEST_CASE("classic example perturbation") {
    TrigPerturbation f = TrigPerturbation::arnold();
    REQUIRE(f.dim() == 1);
    CHECK(f.order() == 1);
    CHECK(f.modes().size() == 2);
    // (1 - cos q)(cos phi + cos t)
    CHECK(f.value({0.0}, M_PI, 0.0) == doctest::Approx(4.0));
    CHECK(f.value({M_PI / 2}, M_PI, 0.0) == doctest::Approx(2.0));
    CHECK(f.value({0.3}, 0.0, 0.9) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(f.value({0.4}, 1.0, 2.0) ==
          doctest::Approx((1 - std::cos(1.0)) * (std::cos(0.4) + std::cos(2.0))));
    CHECK_FALSE(f.empty());
    CHECK(f.sup_bound() == doctest::Approx(4.0));
    CHECK(f.grad_phi_bound()[0] == doctest::Approx(2.0));
}

TEST_CASE("perturbation derivatives match finite differences") {
    TrigPerturbation f(2, 3, ModeNorm::L1,
                       {{{1, 0}, 0, QPolynomial::one_minus_cos()},
                        {{1, -1}, 1, QPolynomial(0.3, {0.2}, {-0.7})},
                        {{0, 2}, -1, QPolynomial(1.0, {0.0, 0.5}, {0.1, 0.0})},
                        {{0, 0}, 2, QPolynomial::constant(0.25)}});
    std::vector<double> phi{0.7, -1.3};
    double q = 2.1, t = 0.55, h = 1e-6;

    std::vector<double> grad;
    f.grad_phi(phi, q, t, grad);
    for (int j = 0; j < 2; ++j) {
        auto ph = phi, pl = phi;
        ph[j] += h;
        pl[j] -= h;
        double fd = (f.value(ph, q, t) - f.value(pl, q, t)) / (2 * h);
        CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK(f.dq(phi, q, t) ==
          doctest::Approx((f.value(phi, q + h, t) - f.value(phi, q - h, t)) / (2 * h)).epsilon(1e-7));
    CHECK(f.dt(phi, q, t) ==
          doctest::Approx((f.value(phi, q, t + h) - f.value(phi, q, t - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("perturbation validation") {
    using M = std::vector<PertMode>;
    QPolynomial g = QPolynomial::one_minus_cos();
    CHECK_THROWS_AS(TrigPerturbation(0, 1, ModeNorm::L1, {}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(1, 1, ModeNorm::L1, M{{{-1}, 0, g}}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(1, 1, ModeNorm::L1, M{{{0}, -1, g}}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(2, 1, ModeNorm::L1, M{{{0, -1}, 2, g}}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(1, 1, ModeNorm::L1, M{{{1, 0}, 0, g}}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(1, 1, ModeNorm::L1, M{{{1}, 1, g}}), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation(1, 2, ModeNorm::L1, M{{{1}, 0, g}, {{1}, 0, g}}), ConfigError);
    CHECK_NOTHROW(TrigPerturbation(1, 2, ModeNorm::L1, M{{{1}, 1, g}, {{1}, -1, g}}));
    CHECK_NOTHROW(TrigPerturbation(1, 1, ModeNorm::Linf, M{{{1}, 1, g}}));
    CHECK_NOTHROW(TrigPerturbation(1, 1, ModeNorm::L1, M{{{0}, 0, g}}));
}

TEST_CASE("perturbation JSON round trip is bit exact") {
    TrigPerturbation f(2, 4, ModeNorm::L2,
                       {{{1, 0}, 0, QPolynomial(0.1, {1.0 / 3.0, -2.5e-17}, {0.0, 7.1})},
                        {{2, -1}, 3, QPolynomial(-0.0625, {}, {})}});
    std::string text = f.json_text();
    TrigPerturbation g = TrigPerturbation::from_json_text(text);
    CHECK(g.dim() == f.dim());
    CHECK(g.order() == f.order());
    CHECK(g.norm_kind() == f.norm_kind());
    REQUIRE(g.modes().size() == f.modes().size());
    for (std::size_t k = 0; k < f.modes().size(); ++k) {
        CHECK(g.modes()[k].n == f.modes()[k].n);
        CHECK(g.modes()[k].l == f.modes()[k].l);
        CHECK(g.modes()[k].g == f.modes()[k].g);  // exact double equality
    }
    CHECK(g.json_text() == text);

    CHECK_THROWS_AS(TrigPerturbation::from_json_text("{"), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation::from_json_text("{\"d\":1}"), ConfigError);
    CHECK_THROWS_AS(TrigPerturbation::load("/nonexistent/pert.json"), ConfigError);
}

TEST_CASE("phase state checks") {
    PhaseState s({0.5}, {1.0}, 3.0, -0.2, 7.0);
    CHECK(s.dim() == 1);
    CHECK(s.q_wrapped() == doctest::Approx(3.0));
    CHECK_THROWS_AS(PhaseState({}, {}, 0, 0), ConfigError);
    CHECK_THROWS_AS(PhaseState({0.0}, {}, 0, 0), ConfigError);
    CHECK_THROWS_AS(PhaseState({0.0}, {std::nan("")}, 0, 0), ConfigError);
    PhaseState w({0.0}, {0.0}, 3.0 * two_pi + 0.5, 0.0);
    CHECK(w.winding() == 3);
    CHECK(w.q_wrapped() == doctest::Approx(0.5));
}

TEST_CASE("vector field and Hamiltonian") {
    System sys(TrigPerturbation::arnold(), 0.02);
    PhaseState s({0.4}, {0.9}, 2.0, 1.1, 0.3);
    PhaseDeriv d;
    sys.vector_field(s, d);
    CHECK(d.dphi[0] == 0.9);
    CHECK(d.dq == 1.1);
    // I' = -mu df/dphi, p' = sin q - mu df/dq
    CHECK(d.daction[0] == doctest::Approx(-0.02 * (1 - std::cos(2.0)) * -std::sin(0.4)));
    CHECK(d.dp == doctest::Approx(std::sin(2.0) - 0.02 * std::sin(2.0) * (std::cos(0.4) + std::cos(0.3))));

    double h = sys.hamiltonian(s);
    CHECK(h == doctest::Approx(0.5 * 0.81 + pendulum_energy(2.0, 1.1) +
                               0.02 * sys.perturbation().value({0.4}, 2.0, 0.3)));

    System free(TrigPerturbation::arnold(), 0.0);
    free.vector_field(s, d);
    CHECK(d.daction[0] == 0.0);
    CHECK(d.dp == doctest::Approx(std::sin(2.0)));
}
