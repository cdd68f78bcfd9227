#include "sdelab/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sdelab/builtins.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/exprlang.hpp"
#include "sdelab/sampling.hpp"

namespace sdelab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double number_maybe_inf(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return kInf;
    }
    throw ConfigError(what + " must be a number or \"inf\"");
}

ScalarField scalar_from_json(const json& j, int dim, const std::string& what) {
    if (j.is_number()) return constant_scalar_field(dim, j.get<double>());
    if (j.is_string()) {
        try {
            return expr::compile(j.get<std::string>(), dim);
        } catch (const Error& e) {
            throw ConfigError(what + ": " + e.what());
        }
    }
    throw ConfigError(what + " must be a number or an expression string");
}

VectorField vector_from_json(const json& j, int dim, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError(what + " must be an array of length dim");
    std::vector<ScalarField> entries;
    bool all_const = true;
    for (int i = 0; i < dim; ++i) {
        entries.push_back(
            scalar_from_json(j[static_cast<std::size_t>(i)], dim,
                             what + "[" + std::to_string(i) + "]"));
        all_const = all_const && entries.back().constant;
    }
    if (all_const) {
        Vec v(dim);
        const Vec zero = Vec::Zero(dim);
        for (int i = 0; i < dim; ++i)
            v[i] = entries[static_cast<std::size_t>(i)].eval(zero);
        return constant_vector_field(dim, v);
    }
    VectorField f;
    f.dim = dim;
    f.constant = false;
    f.eval = [entries, dim](const Vec& x) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i)
            v[i] = entries[static_cast<std::size_t>(i)].eval(x);
        return v;
    };
    return f;
}

MatrixField matrix_from_json(const json& j, int dim, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError(what + " must be a dim x dim array");
    std::vector<ScalarField> entries;
    bool all_const = true;
    for (int r = 0; r < dim; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw ConfigError(what + " must be a dim x dim array");
        for (int c = 0; c < dim; ++c) {
            entries.push_back(scalar_from_json(
                row[static_cast<std::size_t>(c)], dim,
                what + "[" + std::to_string(r) + "][" + std::to_string(c) +
                    "]"));
            all_const = all_const && entries.back().constant;
        }
    }
    if (all_const) {
        Mat m(dim, dim);
        const Vec zero = Vec::Zero(dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                m(r, c) = entries[static_cast<std::size_t>(r * dim + c)].eval(zero);
        return constant_matrix_field(dim, m);
    }
    MatrixField f;
    f.dim = dim;
    f.constant = false;
    f.eval = [entries, dim](const Vec& x) {
        Mat m(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                m(r, c) = entries[static_cast<std::size_t>(r * dim + c)].eval(x);
        return m;
    };
    return f;
}

Mat numeric_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw ConfigError(what + " must be a numeric matrix");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ConfigError(what + " must be rectangular");
        for (int c = 0; c < cols; ++c) {
            const json& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number())
                throw ConfigError(what + " must contain numbers only");
            m(r, c) = cell.get<double>();
        }
    }
    return m;
}

Vec numeric_vector(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " must be a numeric array");
    Vec v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) {
        const json& cell = j[static_cast<std::size_t>(i)];
        if (!cell.is_number())
            throw ConfigError(what + " must contain numbers only");
        v[i] = cell.get<double>();
    }
    return v;
}

SdeSpec family_from_json(const json& root) {
    const std::string family = root.at("family").get<std::string>();
    const json params = root.value("params", json::object());
    const int dim = params.value("dim", 2);

    if (family == "brownian") return make_brownian(dim);
    if (family == "ou") return make_ou(dim);
    if (family == "gaussian_const") {
        Mat a(2, 2);
        a << 2, 1, 1, 2;
        if (params.contains("A")) a = numeric_matrix(params["A"], "params.A");
        return make_gaussian_const(a);
    }
    if (family == "example512") {
        Example512Params p;
        p.dim = dim;
        p.alpha = params.value("alpha", 0.5);
        p.phi_expr = params.value("phi", std::string("1"));
        p.gamma = params.value("gamma", 0.0);
        if (params.contains("A")) p.A = numeric_matrix(params["A"], "params.A");
        return make_example512(p);
    }
    if (family == "girsanov") return make_girsanov(params.value("alpha", 1.0), dim);
    if (family == "discont_diag") return make_discont_diag();
    if (family == "piecewise_inv_psi") return make_piecewise_inv_psi();
    if (family == "quartic") return make_quartic(dim);
    throw ConfigError("unknown family: " + family);
}

// 1/psi resolution over an explicit singular-point list, for drift assembly
// before the CoefficientSet is complete.
double resolve_inv_psi(const ScalarField& inv_psi,
                       const std::vector<SingularPoint>& singular,
                       const Vec& x) {
    for (const SingularPoint& s : singular)
        if (s.point.size() == x.size() && s.point == x) {
            if (s.inv_psi_limit) return *s.inv_psi_limit;
            throw SingularPointError("1/psi undefined at a singular point");
        }
    return inv_psi.eval(x);
}

SdeSpec explicit_from_json(const json& root) {
    if (!root.contains("dim")) throw ConfigError("missing \"dim\"");
    const int dim = root["dim"].get<int>();
    if (dim < 1) throw ConfigError("dim must be >= 1");

    SdeSpec spec;
    CoefficientSet& c = spec.coeffs;
    c.dim = dim;

    if (!root.contains("A")) throw ConfigError("missing \"A\"");
    c.A = matrix_from_json(root["A"], dim, "A");
    if (root.contains("C")) c.C = matrix_from_json(root["C"], dim, "C");
    if (root.contains("sigma"))
        c.sigma = matrix_from_json(root["sigma"], dim, "sigma");

    c.inv_psi = root.contains("inv_psi")
                    ? scalar_from_json(root["inv_psi"], dim, "inv_psi")
                    : constant_scalar_field(dim, 1.0);

    if (root.contains("div_A"))
        c.A.row_div = vector_from_json(root["div_A"], dim, "div_A").eval;
    if (root.contains("div_C")) {
        if (!c.C) throw ConfigError("div_C given without C");
        c.C->row_div = vector_from_json(root["div_C"], dim, "div_C").eval;
    }

    if (root.contains("singular_points")) {
        for (const json& sp : root["singular_points"]) {
            SingularPoint s;
            if (sp.is_array()) {
                s.point = numeric_vector(sp, "singular_points[]");
            } else if (sp.is_object()) {
                s.point = numeric_vector(sp.at("point"),
                                         "singular_points[].point");
                if (sp.contains("inv_psi"))
                    s.inv_psi_limit = sp["inv_psi"].get<double>();
            } else {
                throw ConfigError("singular_points entries must be arrays "
                                  "or objects");
            }
            if (s.point.size() != dim)
                throw ConfigError("singular point dimension mismatch");
            c.singular_points.push_back(std::move(s));
        }
    }

    if (root.contains("H")) c.H = vector_from_json(root["H"], dim, "H");
    if (root.contains("H_hat")) {
        c.H_hat = vector_from_json(root["H_hat"], dim, "H_hat");
    } else if (c.H) {
        // H_hat = (1/2) inv_psi div(A + C) + H, assembled pointwise.
        const MatrixField a_field = c.A;
        const std::optional<MatrixField> c_field = c.C;
        const ScalarField ipsi = c.inv_psi;
        const VectorField h = *c.H;
        const std::vector<SingularPoint> singular = c.singular_points;
        c.H_hat.dim = dim;
        c.H_hat.constant = false;
        c.H_hat.eval = [a_field, c_field, ipsi, h, singular](const Vec& x) {
            Vec div = divergence_matrix(a_field, x, singular);
            if (c_field) div += divergence_matrix(*c_field, x, singular);
            const double m = resolve_inv_psi(ipsi, singular, x);
            return Vec(0.5 * m * div + h.eval(x));
        };
    } else {
        c.H_hat = constant_vector_field(dim, Vec::Zero(dim));
    }
    return spec;
}

void apply_overrides(SdeSpec& spec, const json& root) {
    if (root.contains("name")) spec.name = root["name"].get<std::string>();
    if (spec.name.empty()) spec.name = spec.family.empty() ? "spec" : spec.family;

    if (root.contains("factorization")) {
        const std::string f = root["factorization"].get<std::string>();
        if (f == "cholesky") {
            spec.factorization = FactorizationMethod::Cholesky;
        } else if (f == "symmetric_sqrt") {
            spec.factorization = FactorizationMethod::SymmetricSqrt;
        } else if (f == "explicit") {
            spec.factorization = FactorizationMethod::ExplicitSigma;
        } else {
            throw ConfigError("unknown factorization: " + f);
        }
    }
    if (root.contains("eps_ladder")) {
        spec.degeneracy_eps_ladder.clear();
        for (const json& e : root["eps_ladder"])
            spec.degeneracy_eps_ladder.push_back(e.get<double>());
    }
    if (spec.degeneracy_eps_ladder.empty())
        spec.degeneracy_eps_ladder = {0.2, 0.1, 0.05, 0.02, 0.01};
    if (root.contains("explode_radius"))
        spec.explode_radius = root["explode_radius"].get<double>();

    if (root.contains("declared")) {
        const json& d = root["declared"];
        DeclaredAttributes& a = spec.coeffs.declared;
        if (d.contains("q")) a.q = number_maybe_inf(d["q"], "declared.q");
        if (d.contains("s")) a.s = number_maybe_inf(d["s"], "declared.s");
        if (d.contains("p")) a.p = number_maybe_inf(d["p"], "declared.p");
        if (d.contains("vmo")) a.vmo = d["vmo"].get<bool>();
        if (d.contains("notes"))
            for (const json& note : d["notes"])
                a.notes.push_back(note.get<std::string>());
    }
}

void validate_sampled(const SdeSpec& spec) {
    const CoefficientSet& c = spec.coeffs;
    Ball ball;
    ball.center = Vec::Zero(c.dim);
    ball.radius = 2.0;
    const std::vector<Vec> pts = ball_points(ball, 24);
    for (const Vec& x : pts) {
        if (c.find_singular(x)) continue;
        const Mat a = c.A.eval(x);
        const double a_scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * a_scale)
            throw ConfigError("A is not symmetric at a sampled point");
        if (c.C) {
            const Mat cc = c.C->eval(x);
            const double c_scale = std::max(1.0, cc.cwiseAbs().maxCoeff());
            if ((cc + cc.transpose()).cwiseAbs().maxCoeff() > 1e-12 * c_scale)
                throw ConfigError("C is not anti-symmetric at a sampled point");
        }
        inv_psi_at(c, x);  // throws DomainError when negative or NaN
        if (c.sigma) {
            const Mat s = c.sigma->eval(x);
            const double rel = (s * s.transpose() - a).norm() /
                               std::max(a.norm(), 1e-300);
            if (rel > 1e-10)
                throw ConfigError(
                    "sigma sigma^T does not reproduce A at a sampled point");
        }
    }
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

SdeSpec spec_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    SdeSpec spec = root.contains("family") ? family_from_json(root)
                                           : explicit_from_json(root);
    apply_overrides(spec, root);
    spec.spec_hash = fnv1a_hash(root.dump());
    validate_spec(spec);
    validate_sampled(spec);
    return spec;
}

SdeSpec load_spec(const std::string& path_or_family) {
    static const char* kFamilies[] = {
        "brownian",     "ou",           "gaussian_const",   "example512",
        "girsanov",     "discont_diag", "piecewise_inv_psi", "quartic"};
    for (const char* f : kFamilies)
        if (path_or_family == f)
            return spec_from_json_text("{\"family\":\"" + path_or_family +
                                       "\"}");
    std::ifstream in(path_or_family);
    if (!in) throw ConfigError("cannot read spec file: " + path_or_family);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json_text(buf.str());
}

}  // namespace sdelab
