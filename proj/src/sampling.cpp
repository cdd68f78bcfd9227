#include "sdelab/sampling.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include "sdelab/errors.hpp"

namespace sdelab {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                           23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t k, int base) {
    double inv = 1.0 / base;
    double scale = inv;
    double out = 0.0;
    while (k > 0) {
        out += static_cast<double>(k % base) * scale;
        k /= base;
        scale *= inv;
    }
    return out;
}

}  // namespace

void validate_ball(const Ball& ball) {
    if (!(ball.radius > 0.0)) throw ConfigError("ball radius must be > 0");
    if (ball.center.size() < 1) throw ConfigError("ball center is empty");
}

Vec halton_point(std::uint64_t k, int dim) {
    if (dim > static_cast<int>(std::size(kPrimes))) {
        throw ConfigError("Halton sampling supports dimension <= 16");
    }
    Vec out(dim);
    for (int i = 0; i < dim; ++i) {
        out(i) = radical_inverse(k, kPrimes[i]);
    }
    return out;
}

std::vector<Vec> ball_points(const Ball& ball, int n) {
    validate_ball(ball);
    const int d = static_cast<int>(ball.center.size());
    std::vector<Vec> out;
    out.reserve(n);
    const double r2 = ball.radius * ball.radius;
    for (std::uint64_t k = 1; static_cast<int>(out.size()) < n; ++k) {
        const Vec u = halton_point(k, d);
        Vec p(d);
        for (int i = 0; i < d; ++i) {
            p(i) = ball.center(i) + ball.radius * (2.0 * u(i) - 1.0);
        }
        if ((p - ball.center).squaredNorm() <= r2) out.push_back(std::move(p));
    }
    return out;
}

std::vector<Vec> sphere_points(const Vec& center, double radius, int n) {
    const int d = static_cast<int>(center.size());
    std::vector<Vec> out;
    out.reserve(n);
    for (std::uint64_t k = 1; static_cast<int>(out.size()) < n; ++k) {
        const Vec u = halton_point(k, d);
        Vec dir(d);
        for (int i = 0; i < d; ++i) {
            // clamp away from 0/1 so the quantile stays finite
            const double p = std::min(std::max(u(i), 1e-12), 1.0 - 1e-12);
            dir(i) = normal_quantile(p);
        }
        const double norm = dir.norm();
        if (norm < 1e-12) continue;
        out.push_back(center + (radius / norm) * dir);
    }
    return out;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile requires p in (0,1)");
    }
    // Acklam's rational approximation...
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    // ...then one Halley step against the exact CDF.
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) *
                     std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw ConfigError("gauss_hermite needs n >= 1");
    Mat jacobi = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double v = std::sqrt(i / 2.0);
        jacobi(i - 1, i) = v;
        jacobi(i, i - 1) = v;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    GaussHermite out;
    out.nodes.resize(n);
    out.weights.resize(n);
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        out.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        out.weights[i] = sqrt_pi * v0 * v0;
    }
    return out;
}

double gaussian_expectation(const std::function<double(const Vec&)>& f,
                            const Vec& mean, const Mat& cov, int n) {
    const int d = static_cast<int>(mean.size());
    const GaussHermite gh = gauss_hermite(n);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("gaussian_expectation: covariance");
    }
    const Mat L = llt.matrixL();
    const double norm = std::pow(std::numbers::pi, -0.5 * d);

    std::vector<int> idx(d, 0);
    Vec u(d), x(d);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
            u(i) = gh.nodes[idx[i]];
            w *= gh.weights[idx[i]];
        }
        x = mean + std::numbers::sqrt2 * (L * u);
        total += w * f(x);
        int axis = 0;
        while (axis < d && ++idx[axis] == n) {
            idx[axis] = 0;
            ++axis;
        }
        if (axis == d) break;
    }
    return norm * total;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double fa, double b, double fb, double m, double fm,
                     double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
           adaptive_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = simpson(f, a, fa, b, fb, m, fm);
    return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace sdelab
