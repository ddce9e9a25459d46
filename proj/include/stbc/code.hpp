#pragma once

#include "stbc/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace stbc {

// Malformed code-definition file or JSON document.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Which real symbol a slot of the real symbol vector carries.
struct RealSymbol {
    int sym;    // complex symbol index, 0-based
    bool imag;  // false = real part, true = imaginary part
};

// Linear STBC given by its 2*kappa weight matrices, in the order the real
// symbol vector is laid out. layout[p] names the real symbol multiplying
// weights[p]; built-ins and files with parseable labels carry the exact
// permutation, everything else defaults to interleaved Re/Im order.
struct StbcCode {
    std::string name;
    int n_t = 0;
    int T = 0;
    int kappa = 0;
    std::vector<CMatrix> weights;           // 2*kappa matrices, each n_t x T
    std::vector<std::string> symbol_labels; // 2*kappa, e.g. "Re(s1)"
    std::vector<RealSymbol> layout;         // 2*kappa
    bool rank_warning = false;              // generator numerically rank deficient

    int num_real_symbols() const { return 2 * kappa; }
    double rate() const { return static_cast<double>(kappa) / T; }
    bool full_rate() const { return kappa == n_t * T; }
};

// Permutation of the real symbol slots: position k of the reordered code
// takes slot perm[k] of the original (0-based).
struct SymbolOrdering {
    std::vector<int> perm;

    static SymbolOrdering identity(int n);
    bool is_valid(int n) const;
};

// Validates dimensions/finiteness, fills canonical labels/layout when not
// given, and runs the generator rank check (warning only).
StbcCode make_code(std::string name, int n_t, int T, int kappa,
                   std::vector<CMatrix> weights,
                   std::vector<std::string> symbol_labels = {});

// Real symbol vector in the code's slot order for a complex symbol vector s.
RVector real_symbol_vector(const StbcCode& code, const CVector& s);

// X = sum_p s_tilde[p] * A_p with s_tilde in the code's slot order; for the
// canonical layout this is X = sum_i Re(s_i) A_{2i-1} + Im(s_i) A_{2i}.
CMatrix assemble_codeword(const StbcCode& code, const CVector& s);

// Column p = tilde_vec(vec(A_p)); satisfies tilde_vec(vec(X)) = G * s_tilde.
RMatrix generator_matrix(const StbcCode& code);

// Gram-Schmidt based column rank with relative tolerance on step norms.
int generator_rank(const RMatrix& g, double tol = 1e-10);

// Built-in codes: "abba", "silver", "golden" (paper orderings).
StbcCode builtin_code(const std::string& name);

StbcCode apply_ordering(const StbcCode& code, const SymbolOrdering& ord);

StbcCode code_from_json(const nlohmann::json& j);
nlohmann::json code_to_json(const StbcCode& code);
StbcCode load_code(const std::string& path);
void save_code(const StbcCode& code, const std::string& path);

}  // namespace stbc
