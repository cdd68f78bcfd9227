#include "sdelab/linalg.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "sdelab/errors.hpp"

namespace sdelab {

Vec symmetric_eigenvalues(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es;
    if (a.rows() <= 3) {
        es.computeDirect(a, Eigen::EigenvaluesOnly);
    } else {
        es.compute(a, Eigen::EigenvaluesOnly);
    }
    return es.eigenvalues();
}

Mat factorize(const Mat& a, FactorizationMethod method) {
    if (method == FactorizationMethod::ExplicitSigma) {
        throw Error("factorize: ExplicitSigma supplies its own factor field");
    }
    if (a.rows() != a.cols()) {
        throw Error("factorize: matrix is not square");
    }

    Eigen::SelfAdjointEigenSolver<Mat> es;
    if (a.rows() <= 3) {
        es.computeDirect(a);
    } else {
        es.compute(a);
    }
    const double min_eig = es.eigenvalues()(0);
    if (!(min_eig > kSpdEigenvalueFloor)) {
        throw NotPositiveDefiniteError(
            "factorize: smallest eigenvalue " + std::to_string(min_eig) +
            " is not above " + std::to_string(kSpdEigenvalueFloor));
    }

    if (method == FactorizationMethod::Cholesky) {
        Eigen::LLT<Mat> llt(a);
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefiniteError("factorize: Cholesky failed");
        }
        return llt.matrixL();
    }
    // SymmetricSqrt: V sqrt(diag) V^T.
    return es.eigenvectors() *
           es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

double pairwise_sum(const double* values, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = values[0];
        for (std::size_t i = 1; i < n; ++i) s += values[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

double pairwise_sum(const std::vector<double>& values) {
    return pairwise_sum(values.data(), values.size());
}

MeanCi mean_ci(const std::vector<double>& values) {
    MeanCi out;
    out.n = values.size();
    if (out.n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(out.n);
    if (!std::isfinite(out.mean)) {
        out.sd = std::numeric_limits<double>::infinity();
        out.ci95 = std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    const double var =
        out.n > 1 ? pairwise_sum(sq) / static_cast<double>(out.n - 1) : 0.0;
    out.sd = std::sqrt(var);
    out.ci95 = 1.959964 * out.sd / std::sqrt(static_cast<double>(out.n));
    return out;
}

}  // namespace sdelab
