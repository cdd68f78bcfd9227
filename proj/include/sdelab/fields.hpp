#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdelab/linalg.hpp"

namespace sdelab {

// Coefficient fields are plain evaluator bundles. Evaluation must be pure
// and reentrant; a field may be shared read-only across worker threads.
// Optional analytic derivative slots take precedence over finite differences.

struct ScalarField {
    int dim = 0;
    bool constant = false;
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;  // optional
};

struct VectorField {
    int dim = 0;
    bool constant = false;
    std::function<Vec(const Vec&)> eval;
};

struct MatrixField {
    int dim = 0;
    bool constant = false;
    std::function<Mat(const Vec&)> eval;
    std::function<Vec(const Vec&)> row_div;  // optional analytic divergence
};

ScalarField constant_scalar_field(int dim, double value);
VectorField constant_vector_field(int dim, const Vec& value);
MatrixField constant_matrix_field(int dim, const Mat& value);

// A location where some coefficient is undefined or degenerate by
// declaration. If inv_psi_limit is set, 1/psi resolves to that value there;
// otherwise evaluating 1/psi at the point is an error.
struct SingularPoint {
    Vec point;
    std::optional<double> inv_psi_limit;
};

// Regularity attributes that cannot be checked pointwise (function-space
// memberships, VMO moduli). Recorded verbatim from the config, never used
// in computation.
struct DeclaredAttributes {
    std::optional<double> q;
    std::optional<double> s;
    std::optional<double> p;
    bool vmo = false;
    std::vector<std::string> notes;
};

struct CoefficientSet {
    int dim = 0;
    MatrixField A;                    // diffusion matrix, symmetric
    std::optional<MatrixField> C;     // anti-symmetric part, optional
    ScalarField inv_psi;              // the multiplier 1/psi, >= 0 pointwise
    VectorField H_hat;                // drift of the simulated equation
    std::optional<MatrixField> sigma; // explicit dispersion factor, optional
    std::optional<VectorField> H;     // divergence-form drift, optional
    std::vector<SingularPoint> singular_points;
    DeclaredAttributes declared;

    const SingularPoint* find_singular(const Vec& x) const;
};

// 1/psi at x, resolving declared singular points through their limit value.
// Throws SingularPointError when x is declared singular with no limit, and
// DomainError when the field returns a negative value.
double inv_psi_at(const CoefficientSet& coeffs, const Vec& x);

enum class DriftMode {
    FromHhat,  // G(x) = H_hat(x) verbatim
    FromH,     // G(x) = (1/2) * inv_psi(x) * div(A + C)(x) + H(x)
};

struct SdeSpec {
    std::string name;
    CoefficientSet coeffs;
    FactorizationMethod factorization = FactorizationMethod::Cholesky;
    std::vector<double> degeneracy_eps_ladder;  // strictly decreasing, > 0
    double explode_radius = 1e6;
    // Analytic-transition-law tag for oracle families ("brownian", "ou",
    // "gaussian_const"); empty otherwise.
    std::string family;
    std::uint64_t spec_hash = 0;
};

void validate_spec(const SdeSpec& spec);

// Row divergence (div B)_i = sum_j d_j b_ij at x, analytic when the field
// declares it, otherwise central differences with h = 1e-5 * (1 + |x|).
// Declared singular points are refused.
Vec divergence_matrix(const MatrixField& B, const Vec& x,
                      std::span<const SingularPoint> singular = {});

// The drift G entering the Kolmogorov operator L = (1/2) tr((1/psi) A D^2)
// + <G, grad>.
Vec assemble_drift_G(const CoefficientSet& coeffs, DriftMode mode,
                     const Vec& x);

// Dispersion sigma_hat(x) = sqrt(inv_psi(x)) * sigma(x) where
// sigma sigma^T = A. Exactly the zero matrix when inv_psi(x) == 0; the
// factorization is not even attempted there.
Mat sigma_hat(const SdeSpec& spec, const Vec& x);

}  // namespace sdelab
