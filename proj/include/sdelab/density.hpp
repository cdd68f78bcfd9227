#pragma once

#include <cstdint>
#include <vector>

#include "sdelab/fields.hpp"
#include "sdelab/sampling.hpp"

namespace sdelab {

struct GridSpec {
    Vec lo, hi;          // axis-aligned box
    std::vector<int> n;  // cells per axis
};

// Cell-centered density on a box. values is row-major with the last axis
// fastest. The box may be staggered (shifted by <= 1e-3 h) so no declared
// singular point lands on a cell or face center.
struct DensityGrid {
    Vec lo, hi;
    Vec h;
    std::vector<int> n;
    std::vector<double> values;
    double normalization = 1.0;  // the enforced value of int rho psi dx
    double min_value = 0.0;
    double linear_residual = 0.0;  // inf-norm residual of the solved system
    Vec stagger_shift;

    int dim() const { return static_cast<int>(n.size()); }
    std::int64_t size() const {
        std::int64_t s = 1;
        for (int ni : n) s *= ni;
        return s;
    }
    Vec center(const std::vector<int>& iv) const;
    bool contains(const Vec& x) const;

    // Multilinear interpolation of cell-center values; constant continuation
    // over the half-cell margin, OutOfBoxError beyond the box.
    double value_at(const Vec& x) const;
    // Central differences of the interpolant (one-sided near the boundary).
    Vec grad_at(const Vec& x) const;
};

// Solves the zero-total-flux discretization of
//   div( (1/2)(A + C^T) grad rho - rho psi H ) = 0
// on the box with no-flux boundary faces. One flux-balance row is traded
// for the normalization row sum(rho psi vol) = 1 (the dropped row is the sum
// of all others, so nothing is lost). Throws NonPositiveSolutionError when
// any cell comes out <= 0 and SingularSystemError when the solve fails.
DensityGrid solve_rho(const CoefficientSet& coeffs, const GridSpec& grid);

// beta(x) = (1/2) inv_psi(x) div A(x) + (1/2) (inv_psi(x)/rho(x)) A(x)^T
// grad rho(x), with grid interpolation for rho.
Vec beta_at(const CoefficientSet& coeffs, const DensityGrid& rho,
            const Vec& x);

// The drift G of the Kolmogorov operator, taken from H when the set carries
// one and from H_hat otherwise.
Vec drift_g_at(const CoefficientSet& coeffs, const Vec& x);

// B = G - beta, the vector field whose weak divergence against rho psi dx
// should vanish; exported for inspection.
VectorField b_drift_field(const CoefficientSet& coeffs,
                          const DensityGrid& rho);

// Smooth radial bump exp(1 - 1/(1 - |x-c|^2/s^2)) on |x-c| < s, zero
// outside; the gradient is analytic.
struct Bump {
    Vec center;
    double scale = 1.0;
};

double bump_value(const Bump& b, const Vec& x);
Vec bump_grad(const Bump& b, const Vec& x);

// A family of >= `count` bumps with varied centers and scales, all supported
// strictly inside the grid box.
std::vector<Bump> default_bumps(const DensityGrid& rho, int count = 12);

struct ResidualReport {
    std::int64_t test_functions = 0;
    double max_abs_residual = 0.0;
    std::vector<double> residuals;
};

// Midpoint quadrature of int <G - beta, grad phi> rho psi dx per bump phi.
ResidualReport helm_residual(const CoefficientSet& coeffs,
                             const DensityGrid& rho,
                             const std::vector<Bump>& bumps);

struct C2Report {
    double s = 0.0;
    double integral = 0.0;          // int_ball |G|^s rho psi dx, midpoint
    double integral_refined = 0.0;  // same on 2^d subcells per cell
    bool stable = false;            // relative change < 10%
};

C2Report c2_posteriori_check(const CoefficientSet& coeffs,
                             const DensityGrid& rho, double s,
                             const Ball& ball);

}  // namespace sdelab
