#include "sdelab/builtins.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "sdelab/errors.hpp"
#include "sdelab/exprlang.hpp"

namespace sdelab {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

SdeSpec finish(SdeSpec spec, const std::string& tag) {
    spec.name = spec.name.empty() ? spec.family : spec.name;
    spec.spec_hash = fnv1a(tag);
    validate_spec(spec);
    return spec;
}

std::vector<double> default_ladder() { return {0.2, 0.1, 0.05, 0.02, 0.01}; }

// |x|^alpha with the cheap exponents special-cased; the simulation loop
// evaluates this every step.
std::function<double(const Vec&)> norm_power(double alpha) {
    if (alpha == 1.0) return [](const Vec& x) { return x.norm(); };
    if (alpha == 2.0) return [](const Vec& x) { return x.squaredNorm(); };
    return [alpha](const Vec& x) { return std::pow(x.norm(), alpha); };
}

}  // namespace

SdeSpec make_brownian(int dim) {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    SdeSpec spec;
    spec.family = "brownian";
    spec.coeffs.dim = dim;
    spec.coeffs.A = constant_matrix_field(dim, Mat::Identity(dim, dim));
    spec.coeffs.inv_psi = constant_scalar_field(dim, 1.0);
    spec.coeffs.H_hat = constant_vector_field(dim, Vec::Zero(dim));
    spec.coeffs.declared.q = std::numeric_limits<double>::infinity();
    spec.coeffs.declared.vmo = true;
    spec.degeneracy_eps_ladder = default_ladder();
    return finish(std::move(spec), "brownian;d=" + std::to_string(dim));
}

SdeSpec make_ou(int dim) {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    SdeSpec spec;
    spec.family = "ou";
    spec.coeffs.dim = dim;
    spec.coeffs.A = constant_matrix_field(dim, 2.0 * Mat::Identity(dim, dim));
    spec.coeffs.inv_psi = constant_scalar_field(dim, 1.0);
    spec.coeffs.H_hat.dim = dim;
    spec.coeffs.H_hat.eval = [](const Vec& x) { return Vec(-x); };
    spec.coeffs.declared.q = std::numeric_limits<double>::infinity();
    spec.coeffs.declared.vmo = true;
    spec.degeneracy_eps_ladder = default_ladder();
    return finish(std::move(spec), "ou;d=" + std::to_string(dim));
}

SdeSpec make_gaussian_const(const Mat& A) {
    const int dim = static_cast<int>(A.rows());
    if (dim < 1 || A.cols() != A.rows())
        throw ConfigError("A must be a square matrix");
    if (!A.isApprox(A.transpose()))
        throw ConfigError("A must be symmetric");
    factorize(A, FactorizationMethod::Cholesky);  // reject non-SPD up front
    SdeSpec spec;
    spec.family = "gaussian_const";
    spec.coeffs.dim = dim;
    spec.coeffs.A = constant_matrix_field(dim, A);
    spec.coeffs.inv_psi = constant_scalar_field(dim, 1.0);
    spec.coeffs.H_hat = constant_vector_field(dim, Vec::Zero(dim));
    spec.coeffs.declared.q = std::numeric_limits<double>::infinity();
    spec.coeffs.declared.vmo = true;
    spec.degeneracy_eps_ladder = default_ladder();
    std::string tag = "gaussian_const;d=" + std::to_string(dim) + ";A=";
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            tag += std::to_string(A(i, j)) + ",";
    return finish(std::move(spec), tag);
}

SdeSpec make_example512(const Example512Params& params) {
    const int d = params.dim;
    if (d < 2) throw ConfigError("dim must be >= 2");
    if (!(params.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (params.gamma < 0.0) throw ConfigError("gamma must be >= 0");

    Mat a_mat = params.A.size() > 0 ? params.A : Mat(Mat::Identity(d, d));
    if (a_mat.rows() != d || a_mat.cols() != d)
        throw ConfigError("A must be a d x d matrix");
    if (!a_mat.isApprox(a_mat.transpose()))
        throw ConfigError("A must be symmetric");
    factorize(a_mat, FactorizationMethod::Cholesky);

    SdeSpec spec;
    spec.family = "example512";
    spec.coeffs.dim = d;
    spec.coeffs.A = constant_matrix_field(d, a_mat);
    spec.coeffs.H_hat = constant_vector_field(d, Vec::Zero(d));

    spec.coeffs.inv_psi.dim = d;
    auto radial = norm_power(params.alpha);
    if (params.phi_expr == "1") {
        spec.coeffs.inv_psi.eval = radial;
    } else {
        ScalarField phi = expr::compile(params.phi_expr, d);
        spec.coeffs.inv_psi.eval = [radial, phi](const Vec& x) {
            return radial(x) * phi.eval(x);
        };
    }

    SingularPoint origin;
    origin.point = Vec::Zero(d);
    origin.inv_psi_limit = params.gamma * params.gamma;
    spec.coeffs.singular_points.push_back(origin);

    // Exponent picks mirroring the bounded-drift route: p = d + 1, s = d,
    // and q midway in (d+1, d/alpha) when that interval is nonempty.
    spec.coeffs.declared.p = d + 1;
    spec.coeffs.declared.s = d;
    if (params.alpha * (d + 1) < d)
        spec.coeffs.declared.q = 0.5 * ((d + 1) + d / params.alpha);
    spec.coeffs.declared.vmo = true;

    spec.degeneracy_eps_ladder = default_ladder();
    std::string tag = "example512;d=" + std::to_string(d) +
                      ";alpha=" + std::to_string(params.alpha) +
                      ";phi=" + params.phi_expr +
                      ";gamma=" + std::to_string(params.gamma) + ";A=";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) tag += std::to_string(a_mat(i, j)) + ",";
    return finish(std::move(spec), tag);
}

SdeSpec make_girsanov(double alpha, int dim) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw ConfigError("alpha must lie in (0, 2)");
    Example512Params params;
    params.dim = dim;
    params.alpha = alpha;
    params.phi_expr = "1";
    params.gamma = 0.0;
    SdeSpec spec = make_example512(params);
    spec.family = "girsanov";
    spec.name = "girsanov";
    std::string tag = "girsanov;d=" + std::to_string(dim) +
                      ";alpha=" + std::to_string(alpha);
    return finish(std::move(spec), tag);
}

SdeSpec make_discont_diag() {
    const int d = 2;
    SdeSpec spec;
    spec.family = "discont_diag";
    spec.coeffs.dim = d;
    spec.coeffs.A.dim = d;
    spec.coeffs.A.eval = [](const Vec& x) {
        Mat a = Mat::Zero(2, 2);
        a(0, 0) = x[1] >= 0.0 ? 2.0 : 1.0;
        a(1, 1) = x[0] >= 0.0 ? 2.0 : 1.0;
        return a;
    };
    // a11 depends only on x2 and a22 only on x1, so the row divergence
    // vanishes identically despite the jumps.
    spec.coeffs.A.row_div = [](const Vec&) { return Vec::Zero(2).eval(); };
    spec.coeffs.inv_psi = constant_scalar_field(d, 1.0);
    spec.coeffs.H_hat = constant_vector_field(d, Vec::Zero(d));
    spec.coeffs.declared.vmo = true;
    spec.coeffs.declared.notes.push_back(
        "diagonal entries are bounded, discontinuous, not weakly "
        "differentiable; div A = 0 in the distributional sense");
    spec.degeneracy_eps_ladder = default_ladder();
    return finish(std::move(spec), "discont_diag;d=2");
}

SdeSpec make_piecewise_inv_psi() {
    const int d = 2;
    SdeSpec spec;
    spec.family = "piecewise_inv_psi";
    spec.coeffs.dim = d;
    spec.coeffs.A = constant_matrix_field(d, Mat::Identity(d, d));
    spec.coeffs.inv_psi.dim = d;
    spec.coeffs.inv_psi.eval = [](const Vec& x) {
        const double r = x.norm();
        if (r < 1.0) return 0.25;
        if (r < 2.0) return 1.0;
        return 2.25;
    };
    spec.coeffs.H_hat = constant_vector_field(d, Vec::Zero(d));
    spec.coeffs.declared.q = std::numeric_limits<double>::infinity();
    spec.coeffs.declared.vmo = true;
    spec.degeneracy_eps_ladder = default_ladder();
    return finish(std::move(spec), "piecewise_inv_psi;d=2");
}

SdeSpec make_quartic(int dim) {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    SdeSpec spec;
    spec.family = "quartic";
    spec.coeffs.dim = dim;
    spec.coeffs.A = constant_matrix_field(dim, Mat::Identity(dim, dim));
    spec.coeffs.inv_psi = constant_scalar_field(dim, 1.0);
    spec.coeffs.H_hat.dim = dim;
    spec.coeffs.H_hat.eval = [](const Vec& x) {
        return Vec(x * x.squaredNorm());
    };
    spec.coeffs.declared.vmo = true;
    spec.degeneracy_eps_ladder = default_ladder();
    return finish(std::move(spec), "quartic;d=" + std::to_string(dim));
}

}  // namespace sdelab
