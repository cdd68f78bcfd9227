#include "sdelab/fields.hpp"

#include <cmath>

#include "sdelab/errors.hpp"

namespace sdelab {

ScalarField constant_scalar_field(int dim, double value) {
    ScalarField f;
    f.dim = dim;
    f.constant = true;
    f.eval = [value](const Vec&) { return value; };
    f.grad = [dim](const Vec&) { return Vec::Zero(dim).eval(); };
    return f;
}

VectorField constant_vector_field(int dim, const Vec& value) {
    VectorField f;
    f.dim = dim;
    f.constant = true;
    f.eval = [value](const Vec&) { return value; };
    return f;
}

MatrixField constant_matrix_field(int dim, const Mat& value) {
    MatrixField f;
    f.dim = dim;
    f.constant = true;
    f.eval = [value](const Vec&) { return value; };
    f.row_div = [dim](const Vec&) { return Vec::Zero(dim).eval(); };
    return f;
}

const SingularPoint* CoefficientSet::find_singular(const Vec& x) const {
    for (const auto& s : singular_points) {
        if (s.point.size() == x.size() && s.point == x) return &s;
    }
    return nullptr;
}

double inv_psi_at(const CoefficientSet& coeffs, const Vec& x) {
    double m;
    if (const SingularPoint* s = coeffs.find_singular(x)) {
        if (!s->inv_psi_limit) {
            throw SingularPointError(
                "1/psi undefined at a declared singular point");
        }
        m = *s->inv_psi_limit;
    } else {
        m = coeffs.inv_psi.eval(x);
    }
    if (std::isnan(m)) throw DomainError("1/psi evaluated to NaN");
    if (m < 0.0) throw DomainError("1/psi is negative at a queried point");
    return m;
}

void validate_spec(const SdeSpec& spec) {
    const auto& ladder = spec.degeneracy_eps_ladder;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0)) {
            throw ConfigError("eps ladder entries must be positive");
        }
        if (i > 0 && !(ladder[i] < ladder[i - 1])) {
            throw ConfigError("eps ladder must be strictly decreasing");
        }
    }
    if (!(spec.explode_radius > 0.0)) {
        throw ConfigError("explode_radius must be positive");
    }
    if (spec.factorization == FactorizationMethod::ExplicitSigma &&
        !spec.coeffs.sigma) {
        throw MissingFieldError(
            "factorization 'explicit' requires a sigma field");
    }
    if (spec.coeffs.dim < 1) throw ConfigError("dimension must be >= 1");
}

Vec divergence_matrix(const MatrixField& B, const Vec& x,
                      std::span<const SingularPoint> singular) {
    for (const auto& s : singular) {
        if (s.point.size() == x.size() && s.point == x) {
            throw SingularPointError(
                "divergence requested at a declared singular point");
        }
    }
    if (B.row_div) return B.row_div(x);

    const int d = static_cast<int>(x.size());
    const double h = 1e-5 * (1.0 + x.norm());
    Vec out = Vec::Zero(d);
    Vec xp = x, xm = x;
    for (int j = 0; j < d; ++j) {
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        const Mat bp = B.eval(xp);
        const Mat bm = B.eval(xm);
        for (int i = 0; i < d; ++i) {
            out(i) += (bp(i, j) - bm(i, j)) / (2.0 * h);
        }
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return out;
}

namespace {

// A + C as a single matrix field, preserving analytic divergences.
MatrixField sum_field(const MatrixField& a, const std::optional<MatrixField>& c) {
    if (!c) return a;
    MatrixField out;
    out.dim = a.dim;
    out.constant = a.constant && c->constant;
    const MatrixField cf = *c;
    const MatrixField af = a;
    out.eval = [af, cf](const Vec& x) { return (af.eval(x) + cf.eval(x)).eval(); };
    if (a.row_div && cf.row_div) {
        out.row_div = [af, cf](const Vec& x) {
            return (af.row_div(x) + cf.row_div(x)).eval();
        };
    }
    return out;
}

}  // namespace

Vec assemble_drift_G(const CoefficientSet& coeffs, DriftMode mode,
                     const Vec& x) {
    if (mode == DriftMode::FromHhat) {
        return coeffs.H_hat.eval(x);
    }
    if (!coeffs.H) {
        throw MissingFieldError("drift mode FromH requires an H field");
    }
    const double m = inv_psi_at(coeffs, x);
    const MatrixField ac = sum_field(coeffs.A, coeffs.C);
    const Vec div_ac = divergence_matrix(ac, x, coeffs.singular_points);
    return 0.5 * m * div_ac + coeffs.H->eval(x);
}

Mat sigma_hat(const SdeSpec& spec, const Vec& x) {
    const CoefficientSet& coeffs = spec.coeffs;
    const int d = coeffs.dim;
    const double m = inv_psi_at(coeffs, x);
    if (m == 0.0) {
        return Mat::Zero(d, d);
    }
    Mat factor;
    if (spec.factorization == FactorizationMethod::ExplicitSigma) {
        if (!coeffs.sigma) {
            throw MissingFieldError(
                "factorization 'explicit' requires a sigma field");
        }
        factor = coeffs.sigma->eval(x);
    } else {
        factor = factorize(coeffs.A.eval(x), spec.factorization);
    }
    return std::sqrt(m) * factor;
}

}  // namespace sdelab
