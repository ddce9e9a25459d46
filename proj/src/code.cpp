#include "stbc/code.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>

#include <nlohmann/json.hpp>

namespace stbc {

using nlohmann::json;

SymbolOrdering SymbolOrdering::identity(int n) {
    SymbolOrdering o;
    o.perm.resize(n);
    std::iota(o.perm.begin(), o.perm.end(), 0);
    return o;
}

bool SymbolOrdering::is_valid(int n) const {
    if (static_cast<int>(perm.size()) != n) return false;
    std::vector<bool> seen(n, false);
    for (int p : perm) {
        if (p < 0 || p >= n || seen[p]) return false;
        seen[p] = true;
    }
    return true;
}

namespace {

std::string canonical_label(const RealSymbol& rs) {
    return (rs.imag ? "Im(s" : "Re(s") + std::to_string(rs.sym + 1) + ")";
}

// Recover the slot layout from labels of the canonical "Re(sK)"/"Im(sK)"
// form; anything else falls back to interleaved order.
std::vector<RealSymbol> layout_from_labels(const std::vector<std::string>& labels, int kappa) {
    static const std::regex pat(R"((Re|Im)\(s(\d+)\))");
    std::vector<RealSymbol> layout;
    std::vector<bool> seen(2 * kappa, false);
    for (const auto& lab : labels) {
        std::smatch m;
        if (!std::regex_match(lab, m, pat)) break;
        const int sym = std::stoi(m[2]) - 1;
        if (sym < 0 || sym >= kappa) break;
        const bool imag = (m[1] == "Im");
        const int slot = 2 * sym + (imag ? 1 : 0);
        if (seen[slot]) break;
        seen[slot] = true;
        layout.push_back({sym, imag});
    }
    if (static_cast<int>(layout.size()) == 2 * kappa) return layout;
    layout.clear();
    for (int p = 0; p < 2 * kappa; ++p) layout.push_back({p / 2, p % 2 == 1});
    return layout;
}

}  // namespace

StbcCode make_code(std::string name, int n_t, int T, int kappa,
                   std::vector<CMatrix> weights,
                   std::vector<std::string> symbol_labels) {
    if (n_t <= 0 || T <= 0 || kappa <= 0)
        throw SchemaError("code dimensions must be positive");
    if (static_cast<int>(weights.size()) != 2 * kappa)
        throw SchemaError("expected " + std::to_string(2 * kappa) + " weight matrices, got " +
                          std::to_string(weights.size()));
    for (size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != n_t || weights[l].cols() != T)
            throw SchemaError("weight matrix " + std::to_string(l + 1) + " is not n_t x T");
        if (!all_finite(weights[l]))
            throw SchemaError("weight matrix " + std::to_string(l + 1) + " has non-finite entries");
    }
    if (symbol_labels.empty()) {
        for (int p = 0; p < 2 * kappa; ++p)
            symbol_labels.push_back(canonical_label({p / 2, p % 2 == 1}));
    }
    if (static_cast<int>(symbol_labels.size()) != 2 * kappa)
        throw SchemaError("expected " + std::to_string(2 * kappa) + " symbol labels");

    StbcCode code;
    code.name = std::move(name);
    code.n_t = n_t;
    code.T = T;
    code.kappa = kappa;
    code.weights = std::move(weights);
    code.symbol_labels = std::move(symbol_labels);
    code.layout = layout_from_labels(code.symbol_labels, kappa);
    code.rank_warning = generator_rank(generator_matrix(code)) < 2 * kappa;
    return code;
}

RVector real_symbol_vector(const StbcCode& code, const CVector& s) {
    if (s.size() != code.kappa)
        throw std::invalid_argument("symbol vector length must be kappa");
    RVector st(code.num_real_symbols());
    for (int p = 0; p < code.num_real_symbols(); ++p) {
        const cplx v = s(code.layout[p].sym);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("non-finite symbol");
        st(p) = code.layout[p].imag ? v.imag() : v.real();
    }
    return st;
}

CMatrix assemble_codeword(const StbcCode& code, const CVector& s) {
    const RVector st = real_symbol_vector(code, s);
    CMatrix x = CMatrix::Zero(code.n_t, code.T);
    for (int p = 0; p < code.num_real_symbols(); ++p)
        x += st(p) * code.weights[p];
    return x;
}

RMatrix generator_matrix(const StbcCode& code) {
    RMatrix g(2 * code.n_t * code.T, code.num_real_symbols());
    for (int p = 0; p < code.num_real_symbols(); ++p) {
        const CMatrix& a = code.weights[p];
        CVector v(code.n_t * code.T);  // column-wise vectorization
        for (int c = 0; c < code.T; ++c)
            for (int r = 0; r < code.n_t; ++r)
                v(c * code.n_t + r) = a(r, c);
        g.col(p) = tilde_vec(v);
    }
    return g;
}

int generator_rank(const RMatrix& g, double tol) {
    // Gram-Schmidt rank detection: count columns that keep a residual above
    // tol relative to their own norm after reduction against earlier ones.
    RMatrix q = g;
    int rank = 0;
    for (Eigen::Index i = 0; i < g.cols(); ++i) {
        const double col_norm = g.col(i).norm();
        for (Eigen::Index j = 0; j < i; ++j) {
            const double qn = q.col(j).norm();
            if (qn > 0.0) q.col(i) -= (q.col(j).dot(q.col(i)) / (qn * qn)) * q.col(j);
        }
        if (q.col(i).norm() > tol * col_norm)
            ++rank;
        else
            q.col(i).setZero();
    }
    return rank;
}

namespace {

StbcCode make_abba() {
    CMatrix a1(2, 2), a2(2, 2), a3(2, 2), a4(2, 2);
    a1 << 1, 0, 0, 1;
    a2 << 0, -1, -1, 0;
    a3 << 0, cplx(0, 1), cplx(0, 1), 0;
    a4 << cplx(0, 1), 0, 0, cplx(0, 1);
    return make_code("abba", 2, 2, 2, {a1, a2, a3, a4},
                     {"Re(s1)", "Im(s1)", "Re(s2)", "Im(s2)"});
}

StbcCode make_silver() {
    const double s7 = 1.0 / std::sqrt(7.0);
    const cplx u11 = s7 * cplx(1, 1);
    const cplx u12 = s7 * cplx(-1, 2);
    const cplx u21 = s7 * cplx(1, 2);
    const cplx u22 = s7 * cplx(1, -1);
    const cplx i1(0, 1);

    CMatrix a1(2, 2), a2(2, 2), a3(2, 2), a4(2, 2);
    a1 << 1, 0, 0, 1;
    a2 << i1, 0, 0, -i1;
    a3 << 0, -1, 1, 0;
    a4 << 0, i1, i1, 0;

    CMatrix a5(2, 2), a6(2, 2), a7(2, 2), a8(2, 2);
    a5 << u11, -std::conj(u21), -u21, -std::conj(u11);
    a6 << i1 * u11, i1 * std::conj(u21), -i1 * u21, i1 * std::conj(u11);
    a7 << u12, -std::conj(u22), -u22, -std::conj(u12);
    a8 << i1 * u12, i1 * std::conj(u22), -i1 * u22, i1 * std::conj(u12);

    return make_code("silver", 2, 2, 4, {a1, a2, a3, a4, a5, a6, a7, a8},
                     {"Re(s1)", "Im(s1)", "Re(s2)", "Im(s2)",
                      "Re(s3)", "Im(s3)", "Re(s4)", "Im(s4)"});
}

StbcCode make_golden() {
    const double sqrt5 = std::sqrt(5.0);
    const double theta = (1.0 + sqrt5) / 2.0;
    const double theta_bar = (1.0 - sqrt5) / 2.0;
    const cplx i1(0, 1);
    const cplx alpha = cplx(1, 1) - i1 * theta;
    const cplx alpha_bar = cplx(1, 1) - i1 * theta_bar;
    const double s5 = 1.0 / sqrt5;

    CMatrix d1(2, 2), d2(2, 2), e(2, 2);
    d1 << alpha, 0, 0, alpha_bar;                      // diag(nu1, sigma(nu1))
    d2 << alpha * theta, 0, 0, alpha_bar * theta_bar;  // diag(nu2, sigma(nu2))
    e << 0, 1, i1, 0;                                  // gamma = i

    // canonical Re/Im-interleaved weights A1..A8, 1/sqrt(5) kept inside
    std::vector<CMatrix> canon = {s5 * d1,       s5 * i1 * d1,
                                  s5 * d2,       s5 * i1 * d2,
                                  s5 * (d1 * e), s5 * i1 * (d1 * e),
                                  s5 * (d2 * e), s5 * i1 * (d2 * e)};
    // paper ordering [Re s1, Re s2, Im s1, Im s2, Re s3, Re s4, Im s3, Im s4]
    const int perm[8] = {0, 2, 1, 3, 4, 6, 5, 7};
    std::vector<CMatrix> weights;
    for (int k : perm) weights.push_back(canon[k]);
    return make_code("golden", 2, 2, 4, std::move(weights),
                     {"Re(s1)", "Re(s2)", "Im(s1)", "Im(s2)",
                      "Re(s3)", "Re(s4)", "Im(s3)", "Im(s4)"});
}

}  // namespace

StbcCode builtin_code(const std::string& name) {
    if (name == "abba") return make_abba();
    if (name == "silver") return make_silver();
    if (name == "golden") return make_golden();
    throw SchemaError("unknown built-in code '" + name + "' (expected abba, silver or golden)");
}

StbcCode apply_ordering(const StbcCode& code, const SymbolOrdering& ord) {
    const int n = code.num_real_symbols();
    if (!ord.is_valid(n))
        throw std::invalid_argument("invalid symbol ordering");
    std::vector<CMatrix> weights(n);
    std::vector<std::string> labels(n);
    for (int k = 0; k < n; ++k) {
        weights[k] = code.weights[ord.perm[k]];
        labels[k] = code.symbol_labels[ord.perm[k]];
    }
    StbcCode out = make_code(code.name, code.n_t, code.T, code.kappa,
                             std::move(weights), std::move(labels));
    // layout must follow the permutation even when labels are free-form
    for (int k = 0; k < n; ++k) out.layout[k] = code.layout[ord.perm[k]];
    return out;
}

StbcCode code_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("top-level JSON value must be an object");
    for (const char* key : {"name", "nt", "T", "kappa", "symbol_labels", "weights"})
        if (!j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
    if (!j["name"].is_string()) throw SchemaError("'name' must be a string");
    if (!j["nt"].is_number_integer() || !j["T"].is_number_integer() ||
        !j["kappa"].is_number_integer())
        throw SchemaError("'nt', 'T' and 'kappa' must be integers");

    const int n_t = j["nt"].get<int>();
    const int T = j["T"].get<int>();
    const int kappa = j["kappa"].get<int>();
    if (n_t <= 0 || T <= 0 || kappa <= 0)
        throw SchemaError("'nt', 'T' and 'kappa' must be positive");

    if (!j["symbol_labels"].is_array() ||
        static_cast<int>(j["symbol_labels"].size()) != 2 * kappa)
        throw SchemaError("'symbol_labels' must be an array of 2*kappa strings");
    std::vector<std::string> labels;
    for (const auto& lab : j["symbol_labels"]) {
        if (!lab.is_string()) throw SchemaError("symbol labels must be strings");
        labels.push_back(lab.get<std::string>());
    }

    if (!j["weights"].is_array() || static_cast<int>(j["weights"].size()) != 2 * kappa)
        throw SchemaError("'weights' must be an array of 2*kappa matrices");
    std::vector<CMatrix> weights;
    for (const auto& wj : j["weights"]) {
        if (!wj.is_array() || static_cast<int>(wj.size()) != n_t)
            throw SchemaError("each weight matrix must have nt rows");
        CMatrix a(n_t, T);
        for (int r = 0; r < n_t; ++r) {
            const auto& row = wj[r];
            if (!row.is_array() || static_cast<int>(row.size()) != T)
                throw SchemaError("each weight matrix row must have T entries");
            for (int c = 0; c < T; ++c) {
                const auto& entry = row[c];
                if (!entry.is_array() || entry.size() != 2 ||
                    !entry[0].is_number() || !entry[1].is_number())
                    throw SchemaError("matrix entries must be [re, im] number pairs");
                const double re = entry[0].get<double>();
                const double im = entry[1].get<double>();
                if (!std::isfinite(re) || !std::isfinite(im))
                    throw SchemaError("matrix entries must be finite");
                a(r, c) = cplx(re, im);
            }
        }
        weights.push_back(std::move(a));
    }
    return make_code(j["name"].get<std::string>(), n_t, T, kappa,
                     std::move(weights), std::move(labels));
}

json code_to_json(const StbcCode& code) {
    json j;
    j["name"] = code.name;
    j["nt"] = code.n_t;
    j["T"] = code.T;
    j["kappa"] = code.kappa;
    j["symbol_labels"] = code.symbol_labels;
    json weights = json::array();
    for (const CMatrix& a : code.weights) {
        json mat = json::array();
        for (int r = 0; r < code.n_t; ++r) {
            json row = json::array();
            for (int c = 0; c < code.T; ++c)
                row.push_back({a(r, c).real(), a(r, c).imag()});
            mat.push_back(std::move(row));
        }
        weights.push_back(std::move(mat));
    }
    j["weights"] = std::move(weights);
    return j;
}

StbcCode load_code(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open code file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("invalid JSON in '" + path + "': " + e.what());
    }
    return code_from_json(j);
}

void save_code(const StbcCode& code, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write code file '" + path + "'");
    out << code_to_json(code).dump(2) << "\n";
}

}  // namespace stbc
