#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdelab/builtins.hpp"
#include "sdelab/conditions.hpp"
#include "sdelab/errors.hpp"

using namespace sdelab;

namespace {

bool holds(const std::vector<ExponentCheck>& checks,
           const std::string& relation) {
    for (const ExponentCheck& c : checks)
        if (c.relation == relation) return c.holds;
    FAIL("relation not present: ", relation);
    return false;
}

}  // namespace

TEST_CASE("exponent relations per regime") {
    ConditionParams p;
    p.d = 2;
    p.q = 5.0;
    p.s = 2.0;
    p.p = 3.0;

    const auto c1 = check_exponents(p, "C1");
    CHECK(holds(c1, "d >= 2"));
    CHECK(holds(c1, "q > d/2"));
    CHECK(holds(c1, "q >= 2"));
    CHECK(holds(c1, "s > d/2"));
    CHECK(holds(c1, "p > d"));
    CHECK(holds(c1, "1/q + 1/s < 2/d"));  // 0.2 + 0.5 < 1

    const auto c3 = check_exponents(p, "C3");
    CHECK(holds(c3, "q > d+1"));   // 5 > 3
    CHECK(holds(c3, "p == d+1"));  // 3 == 3

    const auto c = check_exponents(p, "C");
    CHECK(holds(c, "q > d+1"));

    // Violations flip to false.
    ConditionParams bad = p;
    bad.s = 0.9;
    CHECK(!holds(check_exponents(bad, "C1"), "s > d/2"));
    bad = p;
    bad.q = 3.0;
    CHECK(!holds(check_exponents(bad, "C"), "q > d+1"));

    // Infinite q: 1/q treated as 0.
    ConditionParams inf_q = p;
    inf_q.q = std::numeric_limits<double>::infinity();
    CHECK(holds(check_exponents(inf_q, "C1"), "1/q + 1/s < 2/d"));

    CHECK_THROWS_AS(check_exponents(p, "C9"), ConfigError);
}

TEST_CASE("ellipticity sampling") {
    const SdeSpec ou = make_ou(2);
    Ball ball;
    ball.center = Vec::Zero(2);
    ball.radius = 2.0;
    const EllipticityReport rep = check_ellipticity(ou.coeffs, ball, 100);
    CHECK(rep.lambda_B == doctest::Approx(2.0));
    CHECK(rep.Lambda_B == doctest::Approx(2.0));
    CHECK(rep.violations.empty());

    // Discontinuous diagonal: eigenvalues live in [1, 2], still elliptic.
    const SdeSpec dd = make_discont_diag();
    const EllipticityReport rep2 = check_ellipticity(dd.coeffs, ball, 200);
    CHECK(rep2.lambda_B >= 1.0);
    CHECK(rep2.Lambda_B <= 2.0);
    CHECK(rep2.violations.empty());
}

TEST_CASE("non-explosion Lyapunov sampling: linear drift passes") {
    const SdeSpec ou = make_ou(2);
    NonExplosionParams p;
    p.shells = {2.0, 4.0, 8.0, 16.0};
    const NonExplosionReport rep = check_nonexplosion(ou.coeffs, p);
    CHECK(rep.passed);
    CHECK(rep.max_violation <= 0.0);
    CHECK(rep.n_samples == 4 * 64);
}

TEST_CASE("non-explosion Lyapunov sampling: cubic drift fails loudly") {
    const SdeSpec q = make_quartic(2);
    NonExplosionParams p;
    p.shells = {4.0};
    const NonExplosionReport rep = check_nonexplosion(q.coeffs, p);
    CHECK(!rep.passed);
    // On |x| = 4: drift term |x|^4 = 256 dominates; A = Id contributes
    // trace/2 - radial = 0. Bound: 16 (ln 4 + 1) = 38.18...
    CHECK(rep.worst_lhs == doctest::Approx(256.0).epsilon(1e-9));
    CHECK(rep.worst_rhs ==
          doctest::Approx(16.0 * (std::log(4.0) + 1.0)).epsilon(1e-12));
    CHECK(rep.max_violation > 100.0);

    NonExplosionParams bad;
    bad.shells = {0.5};  // below N0
    CHECK_THROWS_AS(check_nonexplosion(q.coeffs, bad), ConfigError);
}

TEST_CASE("psi^q quadrature: flat weight reproduces the ball area") {
    const SdeSpec b = make_brownian(2);
    Ball ball;
    ball.center = Vec::Zero(2);
    ball.radius = 1.0;
    const IntegrabilityReport rep =
        check_psi_integrability(b.coeffs, 2.0, ball, 32);
    CHECK(!rep.diverged);
    CHECK(rep.integral_estimate ==
          doctest::Approx(std::numbers::pi).epsilon(0.02));
}

TEST_CASE("psi^q quadrature: radial weight with closed form") {
    // 1/psi = |x|^alpha. With alpha = 0.5, q = 2:
    // int_{B_2} |x|^{-1} dx = 2 pi int_0^2 dr = 4 pi.
    const SdeSpec g = make_girsanov(0.5, 2);
    Ball ball;
    ball.center = Vec::Zero(2);
    ball.radius = 2.0;
    const IntegrabilityReport rep =
        check_psi_integrability(g.coeffs, 2.0, ball, 32);
    CHECK(!rep.diverged);
    CHECK(rep.integral_estimate ==
          doctest::Approx(4.0 * std::numbers::pi).epsilon(0.05));
}

TEST_CASE("psi^q quadrature flags divergence") {
    // alpha = 1.5, q = 2: the integrand is r^{-3} against r dr, divergent.
    const SdeSpec g = make_girsanov(1.5, 2);
    Ball ball;
    ball.center = Vec::Zero(2);
    ball.radius = 2.0;
    const IntegrabilityReport rep =
        check_psi_integrability(g.coeffs, 2.0, ball, 32);
    CHECK(rep.diverged);
    CHECK_THROWS_AS(check_psi_integrability(
                        g.coeffs, std::numeric_limits<double>::infinity(),
                        ball, 32),
                    ConfigError);
}

TEST_CASE("local bounds sampling") {
    const SdeSpec g = make_girsanov(1.0, 2);
    Ball ball;
    ball.center = Vec::Zero(2);
    ball.radius = 1.0;
    const LocalBoundsReport rep = check_local_bounds(g.coeffs, ball, 100);
    CHECK(rep.sup_inv_psi <= 1.0);  // 1/psi = |x| on the unit ball
    CHECK(rep.sup_inv_psi > 0.5);
    CHECK(rep.sup_Hhat_norm == 0.0);
    CHECK(rep.n_samples + rep.singular_skipped == 100);

    const SdeSpec pw = make_piecewise_inv_psi();
    Ball big;
    big.center = Vec::Zero(2);
    big.radius = 3.0;
    CHECK(check_local_bounds(pw.coeffs, big, 200).sup_inv_psi ==
          doctest::Approx(2.25));
}
