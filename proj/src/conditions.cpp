#include "sdelab/conditions.hpp"

#include <cmath>
#include <limits>

#include "sdelab/errors.hpp"

namespace sdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inv_or_zero(double v) { return std::isinf(v) ? 0.0 : 1.0 / v; }

}  // namespace

std::vector<ExponentCheck> check_exponents(const ConditionParams& params,
                                           const std::string& regime) {
    const double d = params.d;
    std::vector<ExponentCheck> out;
    out.push_back({"d >= 2", params.d >= 2});
    if (regime == "C") {
        out.push_back({"q > d+1", params.q > d + 1.0});
        return out;
    }
    if (regime == "C1") {
        out.push_back({"q > d/2", params.q > d / 2.0});
        out.push_back({"q >= 2", params.q >= 2.0});
        out.push_back({"s > d/2", params.s > d / 2.0 && params.s < kInf});
        out.push_back({"p > d", params.p > d});
        out.push_back({"1/q + 1/s < 2/d",
                       inv_or_zero(params.q) + inv_or_zero(params.s) < 2.0 / d});
        return out;
    }
    if (regime == "C3") {
        auto c1 = check_exponents(params, "C1");
        out.insert(out.end(), c1.begin() + 1, c1.end());
        out.push_back({"q > d+1", params.q > d + 1.0});
        out.push_back({"p == d+1", params.p == d + 1.0});
        return out;
    }
    throw ConfigError("unknown exponent regime '" + regime + "'");
}

EllipticityReport check_ellipticity(const CoefficientSet& coeffs,
                                    const Ball& ball, int n) {
    if (n < 1) throw ConfigError("check_ellipticity needs n >= 1");
    EllipticityReport rep;
    rep.ball = ball;
    rep.n_samples = n;
    rep.lambda_B = kInf;
    rep.Lambda_B = -kInf;
    for (const Vec& x : ball_points(ball, n)) {
        const Vec eig = symmetric_eigenvalues(coeffs.A.eval(x));
        const double lo = eig(0);
        const double hi = eig(eig.size() - 1);
        if (lo < rep.lambda_B) rep.lambda_B = lo;
        if (hi > rep.Lambda_B) rep.Lambda_B = hi;
        if (!(lo > 0.0)) rep.violations.push_back(x);
    }
    return rep;
}

NonExplosionReport check_nonexplosion(const CoefficientSet& coeffs,
                                      const NonExplosionParams& params) {
    if (params.shells.empty()) {
        throw ConfigError("check_nonexplosion needs at least one shell");
    }
    for (double r : params.shells) {
        if (!(r > params.N0)) {
            throw ConfigError("all shell radii must exceed N0");
        }
    }
    NonExplosionReport rep;
    rep.max_violation = -kInf;
    Vec center = Vec::Zero(coeffs.dim);
    for (double radius : params.shells) {
        for (const Vec& x : sphere_points(center, radius, params.samples_per_shell)) {
            double m;
            try {
                m = inv_psi_at(coeffs, x);
            } catch (const SingularPointError&) {
                ++rep.singular_skipped;
                continue;
            }
            const Mat a = coeffs.A.eval(x);
            const double nrm2 = x.squaredNorm();
            const double lhs = -(m * (a * x).dot(x)) / nrm2 +
                               0.5 * m * a.trace() +
                               coeffs.H_hat.eval(x).dot(x);
            const double nrm = std::sqrt(nrm2);
            const double rhs = params.M * nrm2 * (std::log(nrm) + 1.0);
            ++rep.n_samples;
            const double violation = lhs - rhs;
            if (violation > rep.max_violation) {
                rep.max_violation = violation;
                rep.worst_point = x;
                rep.worst_lhs = lhs;
                rep.worst_rhs = rhs;
            }
        }
    }
    rep.passed = rep.max_violation <= 0.0;
    return rep;
}

namespace {

// Midpoint-rule estimate of int_ball psi^q over cells whose centers fall in
// the ball. Returns +inf as soon as a center hits a zero of 1/psi.
double psi_power_integral(const CoefficientSet& coeffs, double q,
                          const Ball& ball, int grid_n) {
    const int d = static_cast<int>(ball.center.size());
    const double h = 2.0 * ball.radius / grid_n;

    // Stagger: shift the grid origin when any declared singular point would
    // land exactly on a cell center.
    Vec lo = ball.center.array() - ball.radius;
    for (const auto& s : coeffs.singular_points) {
        if (s.point.size() != d) continue;
        for (int axis = 0; axis < d; ++axis) {
            const double offset = (s.point(axis) - lo(axis)) / h - 0.5;
            if (std::fabs(offset - std::round(offset)) < 1e-9) {
                lo(axis) += 1e-3 * h;
            }
        }
    }

    const double r2 = ball.radius * ball.radius;
    const double cell_volume = std::pow(h, d);
    std::vector<int> idx(d, 0);
    Vec x(d);
    double total = 0.0;
    for (;;) {
        for (int i = 0; i < d; ++i) x(i) = lo(i) + (idx[i] + 0.5) * h;
        if ((x - ball.center).squaredNorm() <= r2) {
            const double m = inv_psi_at(coeffs, x);
            if (m == 0.0) return kInf;
            total += std::pow(1.0 / m, q);
        }
        int axis = 0;
        while (axis < d && ++idx[axis] == grid_n) {
            idx[axis] = 0;
            ++axis;
        }
        if (axis == d) break;
    }
    return total * cell_volume;
}

}  // namespace

IntegrabilityReport check_psi_integrability(const CoefficientSet& coeffs,
                                            double q, const Ball& ball,
                                            int grid_n) {
    validate_ball(ball);
    if (grid_n < 16) throw ConfigError("grid_n must be >= 16");
    if (!(q > 0.0) || std::isinf(q)) {
        throw ConfigError("integrability exponent q must be finite positive");
    }
    IntegrabilityReport rep;
    for (int level = 0; level < 3; ++level) {
        rep.estimates.push_back(
            psi_power_integral(coeffs, q, ball, grid_n << level));
    }
    rep.integral_estimate = rep.estimates.back();
    const double r1 = rep.estimates[1] / rep.estimates[0];
    const double r2 = rep.estimates[2] / rep.estimates[1];
    rep.diverged = !std::isfinite(rep.integral_estimate) || r1 > 2.0 || r2 > 2.0;
    return rep;
}

LocalBoundsReport check_local_bounds(const CoefficientSet& coeffs,
                                     const Ball& ball, int n) {
    if (n < 1) throw ConfigError("check_local_bounds needs n >= 1");
    LocalBoundsReport rep;
    for (const Vec& x : ball_points(ball, n)) {
        double m;
        try {
            m = inv_psi_at(coeffs, x);
        } catch (const SingularPointError&) {
            ++rep.singular_skipped;
            continue;
        }
        ++rep.n_samples;
        if (m > rep.sup_inv_psi) rep.sup_inv_psi = m;
        const double hn = coeffs.H_hat.eval(x).norm();
        if (hn > rep.sup_Hhat_norm) rep.sup_Hhat_norm = hn;
    }
    return rep;
}

}  // namespace sdelab
