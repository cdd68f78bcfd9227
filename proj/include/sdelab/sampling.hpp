#pragma once

#include <vector>

#include "sdelab/linalg.hpp"

namespace sdelab {

struct Ball {
    Vec center;
    double radius = 0.0;
};

void validate_ball(const Ball& ball);

// k-th Halton point in [0,1)^d (k >= 1), bases = first d primes.
Vec halton_point(std::uint64_t k, int dim);

// First n points of the Halton sequence mapped into the ball by rejection
// from the bounding cube. Deterministic, and the first n points of a longer
// run are a prefix of it, which makes sampled extrema monotone under
// refinement.
std::vector<Vec> ball_points(const Ball& ball, int n);

// n deterministic low-discrepancy directions scaled to the sphere of the
// given radius around center.
std::vector<Vec> sphere_points(const Vec& center, double radius, int n);

// Inverse standard normal CDF, |error| < 1e-13 after one refinement step.
double normal_quantile(double p);

struct GaussHermite {
    std::vector<double> nodes;    // roots of the physicists' Hermite H_n
    std::vector<double> weights;  // sum of weights = sqrt(pi)
};

GaussHermite gauss_hermite(int n);

// E[f(X)] for X ~ N(mean, cov) by tensorized Gauss-Hermite quadrature with
// n nodes per axis. cov must be symmetric positive definite.
double gaussian_expectation(const std::function<double(const Vec&)>& f,
                            const Vec& mean, const Mat& cov, int n);

// Adaptive Simpson quadrature on [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-10, int max_depth = 40);

}  // namespace sdelab
