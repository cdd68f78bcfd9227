#include "sdelab/laws.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "sdelab/builtins.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/rng.hpp"
#include "sdelab/sampling.hpp"

namespace sdelab {

namespace {

std::vector<double> project(const EmpiricalLaw& law, Projection proj,
                            int coordinate) {
    if (proj == Projection::Coordinate &&
        (coordinate < 0 || coordinate >= law.dim))
        throw IndexOutOfRangeError("projection coordinate out of range");
    std::vector<double> out(static_cast<std::size_t>(law.n));
    for (std::int64_t i = 0; i < law.n; ++i) {
        const auto x = law.sample(i);
        out[static_cast<std::size_t>(i)] =
            proj == Projection::Coordinate ? x[coordinate] : x.norm();
    }
    return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double f1 = 0.0, f2 = 0.0, d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v1 = a[i], v2 = b[j];
        if (v1 <= v2) f1 = static_cast<double>(++i) / n1;
        if (v2 <= v1) f2 = static_cast<double>(++j) / n2;
        d = std::max(d, std::abs(f1 - f2));
    }
    return d;
}

// Partial Fisher-Yates: the first `take` entries of a shuffled 0..n-1.
std::vector<std::int64_t> subsample_indices(std::int64_t n, std::int64_t take,
                                            CounterRng& rng) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (std::int64_t i = 0; i < take; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(
                    rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(take));
    return idx;
}

const char* factorization_name(FactorizationMethod m) {
    switch (m) {
        case FactorizationMethod::Cholesky: return "cholesky";
        case FactorizationMethod::SymmetricSqrt: return "symmetric_sqrt";
        case FactorizationMethod::ExplicitSigma: return "explicit_sigma";
    }
    return "?";
}

}  // namespace

EmpiricalLaw marginal(const Ensemble& ens, double t) {
    const int d = ens.spec.coeffs.dim;
    if (ens.cfg.store == StoreMode::FunctionalsOnly)
        throw Error("ensemble stored no states");
    if (t < 0.0 || t > ens.t_end + 0.5 * ens.cfg.dt)
        throw ConfigError("marginal time outside the simulated horizon");

    std::int64_t k = std::llround(t / ens.cfg.dt);
    k = std::clamp<std::int64_t>(k, 0, ens.n_steps);

    std::int64_t slot = -1;
    if (ens.cfg.store == StoreMode::Marginals) {
        for (std::size_t i = 0; i < ens.marginal_steps.size(); ++i)
            if (ens.marginal_steps[i] == k) {
                slot = static_cast<std::int64_t>(i);
                break;
            }
        if (slot < 0)
            throw ConfigError("no marginal was recorded at the requested time");
    }

    EmpiricalLaw law;
    law.dim = d;
    law.t = static_cast<double>(k) * ens.cfg.dt;
    law.requested_t = t;
    law.snap_offset = law.t - t;
    law.source = ens.spec.name;
    law.samples.reserve(ens.paths.size() * static_cast<std::size_t>(d));
    for (const PathRecord& rec : ens.paths) {
        if (rec.exploded() && rec.explode_step <= k) {
            ++law.n_excluded;
            continue;
        }
        const double* src =
            ens.cfg.store == StoreMode::FullPaths
                ? rec.states.data() + static_cast<std::size_t>(k) * d
                : rec.marginals.data() + static_cast<std::size_t>(slot) * d;
        law.samples.insert(law.samples.end(), src, src + d);
        ++law.n;
    }
    if (law.n == 0) throw EmptyLawError("every path exploded before t");
    return law;
}

double ks_asymptotic_p(double d_stat, std::int64_t n1, std::int64_t n2) {
    if (d_stat <= 0.0) return 1.0;
    const double en = static_cast<double>(n1) * static_cast<double>(n2) /
                      static_cast<double>(n1 + n2);
    const double sq = std::sqrt(en);
    const double lambda = (sq + 0.12 + 0.11 / sq) * d_stat;
    // Alternating tail sum; falls back to 1 when it fails to settle, which
    // only happens for tiny lambda where the limit is 1 anyway.
    const double a2 = -2.0 * lambda * lambda;
    double sum = 0.0, fac = 2.0, termbf = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = fac * std::exp(a2 * k * k);
        sum += term;
        if (std::abs(term) <= 0.001 * termbf ||
            std::abs(term) <= 1e-8 * std::abs(sum))
            return std::clamp(sum, 0.0, 1.0);
        fac = -fac;
        termbf = std::abs(term);
    }
    return 1.0;
}

TwoSampleResult ks_two_sample(const EmpiricalLaw& a, const EmpiricalLaw& b,
                              Projection projection, int coordinate) {
    if (a.dim != b.dim) throw ConfigError("law dimensions differ");
    if (a.n < 100 || b.n < 100)
        throw ConfigError("ks_two_sample needs at least 100 samples per side");
    TwoSampleResult res;
    res.method = projection == Projection::Coordinate
                     ? TwoSampleMethod::KSPerCoordinate
                     : TwoSampleMethod::KSRadial;
    res.coordinate = projection == Projection::Coordinate ? coordinate : -1;
    res.n1 = res.n_used1 = a.n;
    res.n2 = res.n_used2 = b.n;
    res.statistic = ks_statistic(project(a, projection, coordinate),
                                 project(b, projection, coordinate));
    res.p_value = ks_asymptotic_p(res.statistic, a.n, b.n);
    return res;
}

TwoSampleResult energy_distance_test(const EmpiricalLaw& a,
                                     const EmpiricalLaw& b,
                                     const EnergyOptions& opts) {
    if (a.dim != b.dim) throw ConfigError("law dimensions differ");
    if (opts.n_perm < 200)
        throw ConfigError("energy test needs at least 200 permutations");
    if (opts.max_per_side < 2)
        throw ConfigError("max_per_side must be at least 2");
    if (a.n < 2 || b.n < 2)
        throw ConfigError("energy test needs at least 2 samples per side");

    const int d = a.dim;
    const std::int64_t m1 = std::min<std::int64_t>(a.n, opts.max_per_side);
    const std::int64_t m2 = std::min<std::int64_t>(b.n, opts.max_per_side);

    // Pooled point block: rows 0..m1-1 from a, m1..m1+m2-1 from b.
    const std::int64_t n_tot = m1 + m2;
    std::vector<double> pts(static_cast<std::size_t>(n_tot) * d);
    {
        CounterRng rng_a(opts.seed, 1), rng_b(opts.seed, 2);
        const std::vector<std::int64_t> ia = subsample_indices(a.n, m1, rng_a);
        const std::vector<std::int64_t> ib = subsample_indices(b.n, m2, rng_b);
        for (std::int64_t i = 0; i < m1; ++i)
            std::memcpy(pts.data() + static_cast<std::size_t>(i) * d,
                        a.samples.data() +
                            static_cast<std::size_t>(ia[static_cast<std::size_t>(i)]) * d,
                        sizeof(double) * static_cast<std::size_t>(d));
        for (std::int64_t i = 0; i < m2; ++i)
            std::memcpy(pts.data() + static_cast<std::size_t>(m1 + i) * d,
                        b.samples.data() +
                            static_cast<std::size_t>(ib[static_cast<std::size_t>(i)]) * d,
                        sizeof(double) * static_cast<std::size_t>(d));
    }

    // Dense pairwise distances in float: 4000^2 entries is 64 MB.
    const std::size_t n = static_cast<std::size_t>(n_tot);
    std::vector<float> dist(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = pts.data() + i * d;
        dist[i * n + i] = 0.0f;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* xj = pts.data() + j * d;
            double s = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = xi[c] - xj[c];
                s += diff * diff;
            }
            const float v = static_cast<float>(std::sqrt(s));
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }

    const std::size_t u1 = static_cast<std::size_t>(m1);
    const double fn1 = static_cast<double>(m1), fn2 = static_cast<double>(m2);

    // Full ordered sums with identical traversal shape, so two identical
    // sample lists give bitwise-equal sums and an exactly zero statistic.
    auto block_sum = [&](std::size_t r0, std::size_t r1, std::size_t c0,
                         std::size_t c1) {
        double s = 0.0;
        for (std::size_t i = r0; i < r1; ++i) {
            const float* row = dist.data() + i * n;
            double row_sum = 0.0;
            for (std::size_t j = c0; j < c1; ++j) row_sum += row[j];
            s += row_sum;
        }
        return s;
    };
    const double s_aa = block_sum(0, u1, 0, u1);
    const double s_bb = block_sum(u1, n, u1, n);
    const double s_ab = block_sum(0, u1, u1, n);
    const double e_obs = std::max(
        0.0, 2.0 * s_ab / (fn1 * fn2) - s_aa / (fn1 * fn1) - s_bb / (fn2 * fn2));

    const double s_all = block_sum(0, n, 0, n);
    std::vector<std::uint32_t> labels(n);
    std::iota(labels.begin(), labels.end(), 0u);
    int n_ge = 0;
    for (int r = 1; r <= opts.n_perm; ++r) {
        CounterRng rng(opts.seed, 1000 + static_cast<std::uint64_t>(r));
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j =
                static_cast<std::size_t>(rng.next_below(i + 1));
            std::swap(labels[i], labels[j]);
        }
        double p_aa = 0.0, p_bb = 0.0;
        for (std::size_t i = 0; i < u1; ++i) {
            const float* row = dist.data() + labels[i] * n;
            double row_sum = 0.0;
            for (std::size_t j = 0; j < u1; ++j) row_sum += row[labels[j]];
            p_aa += row_sum;
        }
        for (std::size_t i = u1; i < n; ++i) {
            const float* row = dist.data() + labels[i] * n;
            double row_sum = 0.0;
            for (std::size_t j = u1; j < n; ++j) row_sum += row[labels[j]];
            p_bb += row_sum;
        }
        const double p_ab2 = s_all - p_aa - p_bb;  // both orders of the cross block
        const double e_perm = p_ab2 / (fn1 * fn2) - p_aa / (fn1 * fn1) -
                              p_bb / (fn2 * fn2);
        if (e_perm >= e_obs) ++n_ge;
    }

    TwoSampleResult res;
    res.method = TwoSampleMethod::EnergyDistancePermutation;
    res.statistic = e_obs;
    res.p_value = (1.0 + n_ge) / (opts.n_perm + 1.0);
    res.n1 = a.n;
    res.n2 = b.n;
    res.n_used1 = m1;
    res.n_used2 = m2;
    res.within_a = s_aa / (fn1 * fn1);
    res.within_b = s_bb / (fn2 * fn2);
    res.cross = s_ab / (fn1 * fn2);
    res.n_perm = opts.n_perm;
    res.subsample_seed = opts.seed;
    return res;
}

UniquenessReport uniqueness_experiment(const SdeSpec& spec,
                                       const SimConfig& cfg,
                                       const std::vector<double>& times,
                                       const EnergyOptions& energy,
                                       double p_threshold) {
    if (times.empty()) throw ConfigError("uniqueness_experiment needs times");
    if (spec.factorization == FactorizationMethod::ExplicitSigma)
        throw ConfigError(
            "uniqueness_experiment varies the factorization itself");

    SdeSpec spec_a = spec;
    spec_a.factorization = FactorizationMethod::Cholesky;
    SdeSpec spec_b = spec;
    spec_b.factorization = FactorizationMethod::SymmetricSqrt;

    SimConfig run_cfg = cfg;
    run_cfg.store = StoreMode::Marginals;
    run_cfg.marginal_times = times;

    UniquenessReport report;
    report.p_threshold = p_threshold;
    report.seed_a = cfg.seed;
    report.seed_b = cfg.seed + 1;
    report.factorization_a = factorization_name(spec_a.factorization);
    report.factorization_b = factorization_name(spec_b.factorization);

    SimConfig cfg_a = run_cfg;
    cfg_a.seed = report.seed_a;
    SimConfig cfg_b = run_cfg;
    cfg_b.seed = report.seed_b;
    const Ensemble ens_a = euler_maruyama(spec_a, cfg_a);
    const Ensemble ens_b = euler_maruyama(spec_b, cfg_b);

    report.passed = true;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        const EmpiricalLaw law_a = marginal(ens_a, t);
        const EmpiricalLaw law_b = marginal(ens_b, t);
        report.n_excluded_a += law_a.n_excluded;
        report.n_excluded_b += law_b.n_excluded;

        UniquenessRow row;
        row.t = law_a.t;
        row.passed = true;
        for (int c = 0; c < spec.coeffs.dim; ++c)
            row.tests.push_back(
                ks_two_sample(law_a, law_b, Projection::Coordinate, c));
        EnergyOptions eopts = energy;
        eopts.seed = energy.seed + ti;
        row.tests.push_back(energy_distance_test(law_a, law_b, eopts));
        for (const TwoSampleResult& res : row.tests)
            if (!(res.p_value > p_threshold)) row.passed = false;
        report.passed = report.passed && row.passed;
        report.rows.push_back(std::move(row));
    }
    return report;
}

NonuniquenessReport nonuniqueness_demo(double alpha, const SimConfig& cfg,
                                       double delta,
                                       const EnergyOptions& energy) {
    const int d = cfg.y.size() > 0 ? static_cast<int>(cfg.y.size()) : 2;
    if (d < 2) throw ConfigError("the demo needs dimension >= 2");
    if (cfg.y.size() > 0 && cfg.y.norm() != 0.0)
        throw ConfigError("the demo starts at the origin");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");

    const SdeSpec spec = make_girsanov(alpha, d);

    SimConfig base = cfg;
    base.y = Vec::Zero(d);
    base.store = StoreMode::Marginals;
    base.marginal_times = {base.T};

    SimConfig perturbed = base;
    perturbed.y = Vec::Zero(d);
    perturbed.y[0] = delta;
    perturbed.seed = base.seed + 1;

    const Ensemble ens_trivial = euler_maruyama(spec, base);
    const Ensemble ens_delta = euler_maruyama(spec, perturbed);

    NonuniquenessReport report;
    report.alpha = alpha;
    report.delta = delta;
    report.dt = base.dt;
    report.t_end = ens_trivial.t_end;
    report.trivial_occupation = occupation_profile(ens_trivial);
    report.perturbed_occupation = occupation_profile(ens_delta);
    report.energy = energy_distance_test(marginal(ens_trivial, base.T),
                                         marginal(ens_delta, base.T), energy);
    report.narrative =
        "Both ensembles discretize the same degenerate equation. Started "
        "exactly at the origin the scheme reproduces the trivial solution, "
        "which spends all of [0,T] at the zero of sqrt(1/psi); started a "
        "distance delta away it reproduces the diffusing solution, which "
        "spends almost no time there. The two laws at t = T are "
        "statistically distinct, so equality in law fails unless solutions "
        "are required to spend zero time at the zeros of sqrt(1/psi) - that "
        "occupation-time side condition is exactly what selects the "
        "diffusing law.";
    return report;
}

KolmogorovResult kolmogorov_consistency(const SdeSpec& spec,
                                        const ScalarField& f, const Vec& y,
                                        double t, SimConfig cfg) {
    if (f.dim != spec.coeffs.dim)
        throw ConfigError("observable dimension does not match the system");
    if (t < 0.0) throw ConfigError("t must be >= 0");

    KolmogorovResult res;

    cfg.y = y;
    if (t > 0.0) {
        cfg.T = t;
        cfg.store = StoreMode::Marginals;
        cfg.marginal_times = {t};
        const Ensemble ens = euler_maruyama(spec, cfg);
        const EmpiricalLaw law = marginal(ens, t);
        std::vector<double> values(static_cast<std::size_t>(law.n));
        for (std::int64_t i = 0; i < law.n; ++i)
            values[static_cast<std::size_t>(i)] = f.eval(law.sample(i));
        const MeanCi mc = mean_ci(values);
        res.mc = mc.mean;
        res.se = mc.sd / std::sqrt(static_cast<double>(mc.n));
        res.n = law.n;
        res.n_excluded = law.n_excluded;
    } else {
        res.mc = f.eval(y);
        res.se = 0.0;
        res.n = cfg.n_paths;
    }

    const int d = spec.coeffs.dim;
    Vec mean;
    Mat cov;
    bool have_oracle = true;
    if (spec.family == "brownian") {
        mean = y;
        cov = t * Mat::Identity(d, d);
    } else if (spec.family == "ou") {
        mean = std::exp(-t) * y;
        cov = (1.0 - std::exp(-2.0 * t)) * Mat::Identity(d, d);
    } else if (spec.family == "gaussian_const") {
        mean = y;
        cov = t * spec.coeffs.A.eval(y);
    } else {
        have_oracle = false;
    }
    if (have_oracle)
        res.reference =
            t > 0.0 ? gaussian_expectation(f.eval, mean, cov, 40) : f.eval(y);
    return res;
}

}  // namespace sdelab
