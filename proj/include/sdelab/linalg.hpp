#pragma once

#include <Eigen/Dense>

namespace sdelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class FactorizationMethod {
    Cholesky,       // lower-triangular L with L L^T = A
    SymmetricSqrt,  // symmetric S with S S = A
    ExplicitSigma,  // user-supplied factor field, no factorization performed
};

// Smallest eigenvalue a matrix may have and still count as positive definite.
inline constexpr double kSpdEigenvalueFloor = 1e-12;

// Eigenvalues of a symmetric matrix, ascending.
Vec symmetric_eigenvalues(const Mat& a);

// Factor a symmetric positive definite matrix so that factor * factor^T = a.
// Throws NotPositiveDefiniteError when the smallest eigenvalue is at or
// below kSpdEigenvalueFloor. ExplicitSigma is not a valid method here.
Mat factorize(const Mat& a, FactorizationMethod method);

// Sum values[0..n) with pairwise splitting: the result depends only on the
// order of the input slots, never on thread scheduling, and the rounding
// error grows like log(n) instead of n.
double pairwise_sum(const double* values, std::size_t n);
double pairwise_sum(const std::vector<double>& values);

struct MeanCi {
    double mean = 0.0;
    double sd = 0.0;
    double ci95 = 0.0;  // 1.959964 * sd / sqrt(n)
    std::size_t n = 0;
};

// Sample mean with normal-approximation 95% half-width. Propagates +inf.
MeanCi mean_ci(const std::vector<double>& values);

}  // namespace sdelab
