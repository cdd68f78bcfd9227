#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdelab/fields.hpp"
#include "sdelab/sampling.hpp"

namespace sdelab {

// All checks here are sampling certificates over finitely many points,
// never proofs: the underlying hypotheses are almost-everywhere statements.

struct ConditionParams {
    int d = 2;
    double q = std::numeric_limits<double>::infinity();
    double s = std::numeric_limits<double>::infinity();
    double p = std::numeric_limits<double>::infinity();
};

struct ExponentCheck {
    std::string relation;
    bool holds = false;
};

// Relations required of (d, q, s, p) by the base hypotheses. Regime "C1":
// q in (d/2, inf], q >= 2, s in (d/2, inf), p in (d, inf), 1/q + 1/s < 2/d.
// Regime "C3": additionally q in (d+1, inf] and p = d+1. Regime "C":
// q in (d+1, inf].
std::vector<ExponentCheck> check_exponents(const ConditionParams& params,
                                           const std::string& regime);

struct EllipticityReport {
    Ball ball;
    double lambda_B = 0.0;  // sampled min eigenvalue of A over the ball
    double Lambda_B = 0.0;  // sampled max eigenvalue
    int n_samples = 0;
    std::vector<Vec> violations;  // points where A is not SPD
};

EllipticityReport check_ellipticity(const CoefficientSet& coeffs,
                                    const Ball& ball, int n);

struct NonExplosionParams {
    int N0 = 1;
    double M = 1.0;
    std::vector<double> shells;  // radii, all > N0
    int samples_per_shell = 64;
};

struct NonExplosionReport {
    double max_violation = 0.0;  // max over samples of LHS - RHS
    Vec worst_point;
    double worst_lhs = 0.0;
    double worst_rhs = 0.0;
    int n_samples = 0;
    int singular_skipped = 0;
    bool passed = false;  // max_violation <= 0
};

// Samples the radial Lyapunov inequality
//   -<(1/psi)A x, x>/|x|^2 + trace((1/psi)A)/2 + <H_hat, x>
//     <= M |x|^2 (ln|x| + 1)
// on spheres of the given shell radii.
NonExplosionReport check_nonexplosion(const CoefficientSet& coeffs,
                                      const NonExplosionParams& params);

struct IntegrabilityReport {
    double integral_estimate = 0.0;  // finest-grid estimate of int psi^q
    bool diverged = false;
    std::vector<double> estimates;   // at grid_n, 2*grid_n, 4*grid_n
};

// Midpoint quadrature of int_ball psi^q dx on a grid staggered so cell
// centers never coincide with declared singular points. diverged is set
// when the estimate fails to stabilize under refinement (successive ratio
// above 2) or becomes non-finite.
IntegrabilityReport check_psi_integrability(const CoefficientSet& coeffs,
                                            double q, const Ball& ball,
                                            int grid_n);

struct LocalBoundsReport {
    double sup_inv_psi = 0.0;
    double sup_Hhat_norm = 0.0;
    int n_samples = 0;
    int singular_skipped = 0;
};

LocalBoundsReport check_local_bounds(const CoefficientSet& coeffs,
                                     const Ball& ball, int n);

}  // namespace sdelab
