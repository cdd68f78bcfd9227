#pragma once

#include <string>

#include "sdelab/fields.hpp"

namespace sdelab {

// Built-in coefficient families. Each returns a fully validated SdeSpec with
// a stable `family` tag; the config layer maps family names in config files
// onto these constructors with parameter overrides.

// dX = dW: A = Id, inv_psi = 1, H_hat = 0.
SdeSpec make_brownian(int dim);

// dX = -X dt + sqrt(2) dW: A = 2 Id, so X_t ~ N(y e^{-t}, (1 - e^{-2t}) Id)
// and the stationary law is N(0, Id).
SdeSpec make_ou(int dim);

// dX = sigma dW with constant A = sigma sigma^T: X_t ~ N(y, t A).
SdeSpec make_gaussian_const(const Mat& A);

struct Example512Params {
    int dim = 2;
    double alpha = 0.5;
    std::string phi_expr = "1";  // scalar field, bounded above/below on balls
    double gamma = 0.0;          // dispersion value pinned at the origin
    Mat A;                       // constant SPD matrix; empty means identity
};

// Dispersion (|x|^{alpha/2} sqrt(phi(x)) + gamma at x = 0) sigma with
// A = sigma sigma^T = Id here; inv_psi = |x|^alpha phi(x) away from 0 and
// gamma^2 at 0 (declared point value).
SdeSpec make_example512(const Example512Params& params);

// The d >= 2 Girsanov-type SDE dX = |X|^{alpha/2} dW: Example512 with
// phi = 1, gamma = 0, H_hat = 0. From x = 0 the zero path solves it.
SdeSpec make_girsanov(double alpha, int dim);

// d = 2, diagonal A with a11 = zeta(x2), a22 = zeta(x1) for a bounded
// discontinuous zeta >= 1 (here 1 + step); div A = 0 identically even though
// the entries have no classical derivatives.
SdeSpec make_discont_diag();

// d = 2, sqrt(inv_psi) piecewise constant on radial shells
// (0.5 / 1.0 / 1.5), strictly positive so there is no degenerate set.
SdeSpec make_piecewise_inv_psi();

// dX = X |X|^2 dt + dW: cubic outward drift, explodes in finite time.
SdeSpec make_quartic(int dim);

}  // namespace sdelab
