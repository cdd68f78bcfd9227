#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdelab/simulate.hpp"

namespace sdelab {

struct EmpiricalLaw {
    int dim = 0;
    double t = 0.0;            // grid time actually used
    double requested_t = 0.0;
    double snap_offset = 0.0;  // t - requested_t
    std::int64_t n = 0;
    std::int64_t n_excluded = 0;  // exploded-before-t paths dropped
    std::vector<double> samples;  // flat, n rows of dim
    std::string source;

    Eigen::Map<const Vec> sample(std::int64_t i) const {
        return Eigen::Map<const Vec>(
            samples.data() + static_cast<std::size_t>(i) * dim, dim);
    }
};

// The time is snapped to the nearest grid point; every non-exploded path
// contributes one sample. Throws EmptyLawError when nothing survives.
EmpiricalLaw marginal(const Ensemble& ens, double t);

enum class TwoSampleMethod {
    KSPerCoordinate,
    KSRadial,
    EnergyDistancePermutation,
};

struct TwoSampleResult {
    TwoSampleMethod method = TwoSampleMethod::KSPerCoordinate;
    int coordinate = -1;  // KSPerCoordinate only
    double statistic = 0.0;
    double p_value = 0.0;
    std::int64_t n1 = 0, n2 = 0;          // law sizes
    std::int64_t n_used1 = 0, n_used2 = 0; // after subsampling
    // Energy decomposition (mean pairwise distances), zero for KS:
    double within_a = 0.0, within_b = 0.0, cross = 0.0;
    int n_perm = 0;
    std::uint64_t subsample_seed = 0;
};

enum class Projection { Coordinate, Radial };

// Two-sample Kolmogorov-Smirnov on a scalar projection with the asymptotic
// p-value; exactly symmetric in (a, b).
TwoSampleResult ks_two_sample(const EmpiricalLaw& a, const EmpiricalLaw& b,
                              Projection projection, int coordinate = 0);

// The Kolmogorov tail sum Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2
// lambda^2}, with the small-sample adjustment lambda = (sqrt(en) + 0.12 +
// 0.11/sqrt(en)) D, en = n1 n2 / (n1 + n2).
double ks_asymptotic_p(double d_stat, std::int64_t n1, std::int64_t n2);

struct EnergyOptions {
    int n_perm = 500;                 // >= 200
    std::int64_t max_per_side = 2000; // quadratic-cost cap
    std::uint64_t seed = 0x5de1ab;    // subsample + permutation stream
};

// Multivariate energy statistic 2 E|X-Y| - E|X-X'| - E|Y-Y'| over empirical
// (sub)samples, with label-permutation p-value (1 + #{E_perm >= E_obs}) /
// (n_perm + 1). Exactly zero on identical sample lists.
TwoSampleResult energy_distance_test(const EmpiricalLaw& a,
                                     const EmpiricalLaw& b,
                                     const EnergyOptions& opts = {});

struct UniquenessRow {
    double t = 0.0;
    std::vector<TwoSampleResult> tests;
    bool passed = false;
};

struct UniquenessReport {
    std::vector<UniquenessRow> rows;
    bool passed = false;
    double p_threshold = 0.01;
    std::uint64_t seed_a = 0, seed_b = 0;
    std::string factorization_a, factorization_b;
    std::int64_t n_excluded_a = 0, n_excluded_b = 0;
};

// Same A = sigma sigma^T realized through two different square roots
// (Cholesky vs symmetric sqrt), independent seeds. If the law is a function
// of A alone, per-coordinate KS and the energy test should not distinguish
// the ensembles: the report passes when every p-value exceeds the threshold.
UniquenessReport uniqueness_experiment(const SdeSpec& spec,
                                       const SimConfig& cfg,
                                       const std::vector<double>& times,
                                       const EnergyOptions& energy = {},
                                       double p_threshold = 0.01);

struct NonuniquenessReport {
    double alpha = 0.0;
    double delta = 0.0;
    double dt = 0.0;
    double t_end = 0.0;
    std::vector<OccupationEntry> trivial_occupation;
    std::vector<OccupationEntry> perturbed_occupation;
    TwoSampleResult energy;  // trivial law vs perturbed law at t_end
    std::string narrative;
};

// The Girsanov-type SDE from the origin: the zero path solves it and the
// scheme reproduces it exactly, while a delta-perturbed start diffuses.
// Occupation of the degenerate set tells the two laws apart (t_end vs near
// zero), and the energy test rejects equality. Requires cfg.y == 0.
NonuniquenessReport nonuniqueness_demo(double alpha, const SimConfig& cfg,
                                       double delta = 1e-3,
                                       const EnergyOptions& energy = {});

struct KolmogorovResult {
    double mc = 0.0;
    double se = 0.0;
    std::optional<double> reference;  // analytic families only
    std::int64_t n = 0;
    std::int64_t n_excluded = 0;
};

// MC estimate of E_y[f(X_t)] against the closed-form Gaussian transition
// law when the spec family has one (brownian / ou / gaussian_const).
KolmogorovResult kolmogorov_consistency(const SdeSpec& spec,
                                        const ScalarField& f, const Vec& y,
                                        double t, SimConfig cfg);

}  // namespace sdelab
