#include "sdelab/density.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sdelab/errors.hpp"

namespace sdelab {

namespace {

std::vector<std::int64_t> make_strides(const std::vector<int>& n) {
    std::vector<std::int64_t> stride(n.size());
    std::int64_t s = 1;
    for (int j = static_cast<int>(n.size()) - 1; j >= 0; --j) {
        stride[static_cast<std::size_t>(j)] = s;
        s *= n[static_cast<std::size_t>(j)];
    }
    return stride;
}

bool advance(std::vector<int>& iv, const std::vector<int>& n) {
    for (int j = static_cast<int>(n.size()) - 1; j >= 0; --j) {
        if (++iv[static_cast<std::size_t>(j)] < n[static_cast<std::size_t>(j)])
            return true;
        iv[static_cast<std::size_t>(j)] = 0;
    }
    return false;
}

bool near_integer(double t) {
    return std::abs(t - std::round(t)) < 1e-9;
}

// True when the point sits on a cell center or a face center of the lattice.
bool collides(const Vec& p, const Vec& lo, const Vec& h) {
    const int d = static_cast<int>(p.size());
    int on_line = 0, on_center = 0;
    for (int j = 0; j < d; ++j) {
        const double t = (p[j] - lo[j]) / h[j];
        if (near_integer(t)) ++on_line;           // face coordinate
        if (near_integer(t - 0.5)) ++on_center;   // center coordinate
    }
    if (on_center == d) return true;               // cell center
    return on_line == 1 && on_center == d - 1;     // face center
}

// psi H at x expressed through the simulated drift:
//   H = H_hat - (1/2) inv_psi div(A + C)  =>  psi H = psi H_hat - (1/2)
//   div(A + C). The second form stays finite at zeros of inv_psi as long as
//   H_hat vanishes there.
struct PsiHEvaluator {
    const CoefficientSet* coeffs;
    bool div_is_zero;

    explicit PsiHEvaluator(const CoefficientSet& c) : coeffs(&c) {
        div_is_zero = c.A.constant && (!c.C || c.C->constant) &&
                      !c.A.row_div && (!c.C || !c.C->row_div);
    }

    Vec div_ac(const Vec& x) const {
        if (div_is_zero) return Vec::Zero(coeffs->dim);
        Vec v = divergence_matrix(coeffs->A, x, coeffs->singular_points);
        if (coeffs->C)
            v += divergence_matrix(*coeffs->C, x, coeffs->singular_points);
        return v;
    }

    Vec operator()(const Vec& x) const {
        if (coeffs->H) {
            const Vec hv = coeffs->H->eval(x);
            if (hv.isZero(0.0)) return Vec::Zero(coeffs->dim);
            const double m = inv_psi_at(*coeffs, x);
            if (m <= 0.0)
                throw DomainError("psi is infinite where H is nonzero");
            return Vec(hv / m);
        }
        const Vec hhat = coeffs->H_hat.eval(x);
        Vec out = Vec(-0.5 * div_ac(x));
        if (!hhat.isZero(0.0)) {
            const double m = inv_psi_at(*coeffs, x);
            if (m <= 0.0)
                throw DomainError("psi is infinite where H_hat is nonzero");
            out += hhat / m;
        }
        return out;
    }
};

double psi_weight(const CoefficientSet& coeffs, const Vec& x) {
    const double m = inv_psi_at(coeffs, x);
    if (m <= 0.0)
        throw DomainError("psi is infinite at a quadrature point; "
                          "stagger the grid or shrink the box");
    return 1.0 / m;
}

}  // namespace

Vec DensityGrid::center(const std::vector<int>& iv) const {
    Vec x(dim());
    for (int j = 0; j < dim(); ++j)
        x[j] = lo[j] + (iv[static_cast<std::size_t>(j)] + 0.5) * h[j];
    return x;
}

bool DensityGrid::contains(const Vec& x) const {
    for (int j = 0; j < dim(); ++j)
        if (x[j] < lo[j] || x[j] > hi[j]) return false;
    return true;
}

double DensityGrid::value_at(const Vec& x) const {
    if (!contains(x)) throw OutOfBoxError("point outside the density box");
    const int d = dim();
    std::vector<int> base(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const double u = (x[j] - lo[j]) / h[j] - 0.5;
        double fl = std::floor(u);
        fl = std::clamp(fl, 0.0, static_cast<double>(n[static_cast<std::size_t>(j)] - 2));
        base[static_cast<std::size_t>(j)] = static_cast<int>(fl);
        frac[static_cast<std::size_t>(j)] = std::clamp(u - fl, 0.0, 1.0);
    }
    const std::vector<std::int64_t> stride = make_strides(n);
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::int64_t idx = 0;
        for (int j = 0; j < d; ++j) {
            const int bit = (corner >> j) & 1;
            w *= bit ? frac[static_cast<std::size_t>(j)]
                     : 1.0 - frac[static_cast<std::size_t>(j)];
            idx += (base[static_cast<std::size_t>(j)] + bit) *
                   stride[static_cast<std::size_t>(j)];
        }
        acc += w * values[static_cast<std::size_t>(idx)];
    }
    return acc;
}

Vec DensityGrid::grad_at(const Vec& x) const {
    if (!contains(x)) throw OutOfBoxError("point outside the density box");
    const int d = dim();
    Vec g(d);
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] = std::min(x[j] + h[j], hi[j]);
        xm[j] = std::max(x[j] - h[j], lo[j]);
        g[j] = (value_at(xp) - value_at(xm)) / (xp[j] - xm[j]);
    }
    return g;
}

DensityGrid solve_rho(const CoefficientSet& coeffs, const GridSpec& grid) {
    const int d = coeffs.dim;
    if (grid.lo.size() != d || grid.hi.size() != d ||
        static_cast<int>(grid.n.size()) != d)
        throw ConfigError("grid dimension does not match the coefficients");
    for (int j = 0; j < d; ++j) {
        if (!(grid.hi[j] > grid.lo[j])) throw ConfigError("empty box axis");
        if (grid.n[static_cast<std::size_t>(j)] < 4)
            throw ConfigError("need at least 4 cells per axis");
    }

    DensityGrid out;
    out.lo = grid.lo;
    out.hi = grid.hi;
    out.n = grid.n;
    out.h = Vec(d);
    out.stagger_shift = Vec::Zero(d);
    for (int j = 0; j < d; ++j)
        out.h[j] = (grid.hi[j] - grid.lo[j]) /
                   grid.n[static_cast<std::size_t>(j)];

    // Stagger so declared singular points avoid every cell and face center.
    for (int attempt = 0; attempt < 8; ++attempt) {
        bool clash = false;
        for (const SingularPoint& s : coeffs.singular_points)
            clash = clash || collides(s.point, out.lo, out.h);
        if (!clash) break;
        if (attempt == 7)
            throw ConfigError("could not stagger the grid off the "
                              "singular points");
        for (int j = 0; j < d; ++j) {
            const double shift = 1e-3 * out.h[j];
            out.lo[j] += shift;
            out.hi[j] += shift;
            out.stagger_shift[j] += shift;
        }
    }

    const std::vector<std::int64_t> stride = make_strides(out.n);
    const std::int64_t N = out.size();
    double cell_vol = 1.0;
    for (int j = 0; j < d; ++j) cell_vol *= out.h[j];

    const PsiHEvaluator psi_h(coeffs);
    const bool const_d_matrix = coeffs.A.constant && (!coeffs.C || coeffs.C->constant);
    Mat d_const;
    if (const_d_matrix) {
        const Vec probe = out.center(std::vector<int>(static_cast<std::size_t>(d), 0));
        d_const = 0.5 * coeffs.A.eval(probe);
        if (coeffs.C) d_const += 0.5 * coeffs.C->eval(probe).transpose();
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(N) * (4 * d + 1));

    std::vector<int> iv(static_cast<std::size_t>(d), 0);
    std::vector<std::pair<std::int64_t, double>> form;
    do {
        for (int j = 0; j < d; ++j) {
            if (iv[static_cast<std::size_t>(j)] + 1 >=
                out.n[static_cast<std::size_t>(j)])
                continue;  // no +j interior face for the last cell slab
            std::int64_t left = 0;
            for (int k = 0; k < d; ++k)
                left += iv[static_cast<std::size_t>(k)] *
                        stride[static_cast<std::size_t>(k)];
            const std::int64_t right = left + stride[static_cast<std::size_t>(j)];

            Vec xf = out.center(iv);
            xf[j] += 0.5 * out.h[j];

            Mat dm;
            if (const_d_matrix) {
                dm = d_const;
            } else {
                dm = 0.5 * coeffs.A.eval(xf);
                if (coeffs.C) dm += 0.5 * coeffs.C->eval(xf).transpose();
            }
            const Vec w = psi_h(xf);

            // F_j(face) as a linear form over cell values.
            form.clear();
            form.emplace_back(right, dm(j, j) / out.h[j]);
            form.emplace_back(left, -dm(j, j) / out.h[j]);
            for (int k = 0; k < d; ++k) {
                if (k == j || dm(j, k) == 0.0) continue;
                const double inv_hk = 1.0 / out.h[k];
                // Both face cells share the k index, so neighbor existence
                // in k is common to the two sides.
                const int ik = iv[static_cast<std::size_t>(k)];
                const bool has_m = ik > 0;
                const bool has_p = ik + 1 < out.n[static_cast<std::size_t>(k)];
                for (const std::int64_t side : {left, right}) {
                    const std::int64_t sk = stride[static_cast<std::size_t>(k)];
                    if (has_m && has_p) {
                        form.emplace_back(side + sk, dm(j, k) * 0.25 * inv_hk);
                        form.emplace_back(side - sk, -dm(j, k) * 0.25 * inv_hk);
                    } else if (has_p) {
                        form.emplace_back(side + sk, dm(j, k) * 0.5 * inv_hk);
                        form.emplace_back(side, -dm(j, k) * 0.5 * inv_hk);
                    } else if (has_m) {
                        form.emplace_back(side, dm(j, k) * 0.5 * inv_hk);
                        form.emplace_back(side - sk, -dm(j, k) * 0.5 * inv_hk);
                    }
                }
            }
            if (w[j] != 0.0) {
                form.emplace_back(left, -0.5 * w[j]);
                form.emplace_back(right, -0.5 * w[j]);
            }

            const double area = cell_vol / out.h[j];
            for (const auto& [col, coeff] : form) {
                trips.emplace_back(static_cast<int>(left),
                                   static_cast<int>(col), coeff * area);
                trips.emplace_back(static_cast<int>(right),
                                   static_cast<int>(col), -coeff * area);
            }
        }
    } while (advance(iv, out.n));

    // Swap the center cell's balance row (it is minus the sum of all the
    // others) for the normalization row.
    std::vector<int> center_iv(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        center_iv[static_cast<std::size_t>(j)] =
            out.n[static_cast<std::size_t>(j)] / 2;
    std::int64_t norm_row = 0;
    for (int k = 0; k < d; ++k)
        norm_row += center_iv[static_cast<std::size_t>(k)] *
                    stride[static_cast<std::size_t>(k)];

    trips.erase(std::remove_if(trips.begin(), trips.end(),
                               [norm_row](const Eigen::Triplet<double>& t) {
                                   return t.row() == norm_row;
                               }),
                trips.end());

    std::fill(iv.begin(), iv.end(), 0);
    do {
        std::int64_t c = 0;
        for (int k = 0; k < d; ++k)
            c += iv[static_cast<std::size_t>(k)] *
                 stride[static_cast<std::size_t>(k)];
        const double w = psi_weight(coeffs, out.center(iv)) * cell_vol;
        trips.emplace_back(static_cast<int>(norm_row), static_cast<int>(c), w);
    } while (advance(iv, out.n));

    Eigen::SparseMatrix<double> mat(static_cast<int>(N), static_cast<int>(N));
    mat.setFromTriplets(trips.begin(), trips.end());
    mat.makeCompressed();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
    b[norm_row] = 1.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.analyzePattern(mat);
    solver.factorize(mat);
    if (solver.info() != Eigen::Success)
        throw SingularSystemError("flux-balance system is singular");
    const Eigen::VectorXd rho = solver.solve(b);
    if (solver.info() != Eigen::Success)
        throw SingularSystemError("flux-balance solve failed");

    out.linear_residual = (mat * rho - b).cwiseAbs().maxCoeff();
    out.values.assign(rho.data(), rho.data() + N);

    std::int64_t worst = 0;
    double worst_value = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < N; ++i)
        if (out.values[static_cast<std::size_t>(i)] < worst_value) {
            worst_value = out.values[static_cast<std::size_t>(i)];
            worst = i;
        }
    out.min_value = worst_value;
    if (!(worst_value > 0.0))
        throw NonPositiveSolutionError(
            "density cell " + std::to_string(worst) + " is " +
                std::to_string(worst_value) +
                "; grid too coarse or box too small",
            worst, worst_value);
    return out;
}

Vec drift_g_at(const CoefficientSet& coeffs, const Vec& x) {
    return assemble_drift_G(
        coeffs, coeffs.H ? DriftMode::FromH : DriftMode::FromHhat, x);
}

Vec beta_at(const CoefficientSet& coeffs, const DensityGrid& rho,
            const Vec& x) {
    if (!rho.contains(x)) throw OutOfBoxError("point outside the density box");
    const double m = inv_psi_at(coeffs, x);
    Vec div_a = divergence_matrix(coeffs.A, x, coeffs.singular_points);
    const double r = rho.value_at(x);
    const Vec grad = rho.grad_at(x);
    return Vec(0.5 * m * div_a +
               (0.5 * m / r) * (coeffs.A.eval(x).transpose() * grad));
}

VectorField b_drift_field(const CoefficientSet& coeffs,
                          const DensityGrid& rho) {
    VectorField f;
    f.dim = coeffs.dim;
    f.constant = false;
    const DensityGrid* grid = &rho;
    const CoefficientSet* cs = &coeffs;
    f.eval = [grid, cs](const Vec& x) {
        return Vec(drift_g_at(*cs, x) - beta_at(*cs, *grid, x));
    };
    return f;
}

double bump_value(const Bump& b, const Vec& x) {
    const double u2 = (x - b.center).squaredNorm() / (b.scale * b.scale);
    if (u2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u2));
}

Vec bump_grad(const Bump& b, const Vec& x) {
    const Vec dx = x - b.center;
    const double s2 = b.scale * b.scale;
    const double u2 = dx.squaredNorm() / s2;
    if (u2 >= 1.0) return Vec::Zero(x.size());
    const double w = 1.0 - u2;
    return Vec(bump_value(b, x) * (-2.0 / (s2 * w * w)) * dx);
}

std::vector<Bump> default_bumps(const DensityGrid& rho, int count) {
    if (count < 10) count = 10;
    const int d = rho.dim();
    const Vec mid = 0.5 * (rho.lo + rho.hi);
    const Vec half = 0.5 * (rho.hi - rho.lo);
    const double reach = half.minCoeff();

    std::vector<Bump> bumps;
    bumps.push_back({mid, 0.8 * reach});
    bumps.push_back({mid, 0.4 * reach});
    for (int i = 0; static_cast<int>(bumps.size()) < count; ++i) {
        // Deterministic ring of centers at two radii, three scales; radius
        // plus scale stays below 0.9 reach so supports never touch the box.
        const double angle = 2.39996322972865332 * (i + 1);  // golden angle
        const double radius = (i % 2 == 0 ? 0.3 : 0.5) * reach;
        Vec c = mid;
        c[0] += radius * std::cos(angle);
        if (d > 1) c[1] += radius * std::sin(angle);
        const double scale = (0.2 + 0.08 * (i % 3)) * reach;
        bumps.push_back({c, scale});
    }
    return bumps;
}

ResidualReport helm_residual(const CoefficientSet& coeffs,
                             const DensityGrid& rho,
                             const std::vector<Bump>& bumps) {
    const int d = rho.dim();
    for (const Bump& b : bumps) {
        for (int j = 0; j < d; ++j)
            if (b.center[j] - b.scale < rho.lo[j] ||
                b.center[j] + b.scale > rho.hi[j])
                throw ConfigError("bump support leaves the density box");
        if (!(b.scale > 0.0)) throw ConfigError("bump scale must be positive");
    }

    double cell_vol = 1.0;
    for (int j = 0; j < d; ++j) cell_vol *= rho.h[j];

    ResidualReport report;
    report.test_functions = static_cast<std::int64_t>(bumps.size());
    report.residuals.assign(bumps.size(), 0.0);

    std::vector<int> iv(static_cast<std::size_t>(d), 0);
    std::int64_t flat = 0;
    do {
        const Vec xc = rho.center(iv);
        bool touched = false;
        for (const Bump& b : bumps)
            if ((xc - b.center).squaredNorm() < b.scale * b.scale) {
                touched = true;
                break;
            }
        if (touched) {
            const Vec field = drift_g_at(coeffs, xc) - beta_at(coeffs, rho, xc);
            const double weight = rho.values[static_cast<std::size_t>(flat)] *
                                  psi_weight(coeffs, xc) * cell_vol;
            for (std::size_t bi = 0; bi < bumps.size(); ++bi) {
                const Vec g = bump_grad(bumps[bi], xc);
                if (!g.isZero(0.0))
                    report.residuals[bi] += field.dot(g) * weight;
            }
        }
        ++flat;
    } while (advance(iv, rho.n));

    for (double r : report.residuals)
        report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
    return report;
}

C2Report c2_posteriori_check(const CoefficientSet& coeffs,
                             const DensityGrid& rho, double s,
                             const Ball& ball) {
    if (!(s > 0.0)) throw ConfigError("exponent s must be positive");
    validate_ball(ball);
    const int d = rho.dim();

    auto integrate = [&](int split) {
        double cell_vol = 1.0;
        for (int j = 0; j < d; ++j) cell_vol *= rho.h[j] / split;
        double total = 0.0;
        std::vector<int> iv(static_cast<std::size_t>(d), 0);
        std::vector<int> sub(static_cast<std::size_t>(d), 0);
        do {
            const Vec base = rho.center(iv);
            std::fill(sub.begin(), sub.end(), 0);
            do {
                Vec xc = base;
                for (int j = 0; j < d; ++j)
                    xc[j] += (sub[static_cast<std::size_t>(j)] + 0.5) *
                                 rho.h[j] / split -
                             0.5 * rho.h[j];
                if ((xc - ball.center).norm() > ball.radius) continue;
                const double g_norm = drift_g_at(coeffs, xc).norm();
                const double val = std::pow(g_norm, s) * rho.value_at(xc) *
                                   psi_weight(coeffs, xc) * cell_vol;
                total += val;
            } while ([&] {
                for (int j = d - 1; j >= 0; --j) {
                    if (++sub[static_cast<std::size_t>(j)] < split) return true;
                    sub[static_cast<std::size_t>(j)] = 0;
                }
                return false;
            }());
        } while (advance(iv, rho.n));
        return total;
    };

    C2Report report;
    report.s = s;
    report.integral = integrate(1);
    report.integral_refined = integrate(2);
    const double scale = std::max(std::abs(report.integral), 1e-300);
    report.stable =
        std::isfinite(report.integral) && std::isfinite(report.integral_refined) &&
        std::abs(report.integral_refined - report.integral) / scale < 0.1;
    return report;
}

}  // namespace sdelab
