#pragma once

#include <string>

#include "sdelab/fields.hpp"

namespace sdelab {

// Builds an SdeSpec from JSON text. Two routes:
//   {"family": "...", "params": {...}}        one of the built-in families
//   {"dim": d, "A": [[...]], "inv_psi": ...}  explicit coefficient fields
// Matrix/vector/scalar entries are numbers or expression strings in the
// coordinate language (x[i], norm(x), if(...), ...). Optional keys: "C",
// "sigma", "H", "H_hat", "div_A", "div_C" (analytic row divergences),
// "singular_points" ([[...]] or [{"point": [...], "inv_psi": v}]),
// "declared" ({"q","s","p","vmo","notes"}), "factorization", "eps_ladder",
// "explode_radius", "name".
SdeSpec spec_from_json_text(const std::string& text);

// Reads the file; a bare family name ("brownian", "ou", "gaussian_const",
// "example512", "girsanov", "discont_diag", "piecewise_inv_psi", "quartic")
// is accepted in place of a path and resolves to that family's defaults.
SdeSpec load_spec(const std::string& path_or_family);

std::uint64_t fnv1a_hash(const std::string& s);

}  // namespace sdelab
