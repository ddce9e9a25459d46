#pragma once

#include "stbc/code.hpp"
#include "stbc/pattern.hpp"

#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace stbc {

// Relative tolerance for declaring a condition sum zero; built-in codes
// cancel to machine precision, generic pairs miss by O(1).
inline constexpr double kConditionTol = 1e-12;

struct ConditionResult {
    bool holds = false;
    double residual = 0.0;  // max |sum| over the quantified (q, p) range
};

// c1: sum_l Tr(a_ql^(i) conj(a_pl^(j)) + a_pl^(i) conj(a_ql^(j))) = 0
// for all q, p = q..n_t-1 (diagonal included). 0-based i, j.
ConditionResult check_c1(const StbcCode& code, int i, int j);

// c2: sum_l Tr(i [a_ql^(i) conj(a_pl^(j)) - a_pl^(i) conj(a_ql^(j))]) = 0
// for all q, p = q+1..n_t-1 (strictly off-diagonal).
ConditionResult check_c2(const StbcCode& code, int i, int j);

// W = A_i A_j^H + A_j A_i^H; c1 is Re(W) = 0 and c2 is Im(W) = 0, so the
// matrix route and the component route characterize the same property.
bool hr_mutual_orthogonality(const StbcCode& code, int i, int j);

// Columns i and j of H_eq are orthogonal for every channel draw. Requires
// both condition families; either one alone leaves channel-dependent terms
// in <h_i, h_j> (see PairVerdict::printed_or_satisfied for the weaker form).
bool predict_column_orthogonality(const StbcCode& code, int i, int j);

struct PairVerdict {
    int i = 0, j = 0;  // 1-based, report convention
    bool cond_c1 = false;
    bool cond_c2 = false;
    double c1_residual = 0.0;
    double c2_residual = 0.0;
    bool hr_orthogonal = false;            // ||A_i A_j^H + A_j A_i^H|| = 0
    double hrqf_value = 0.0;               // U_ij
    bool predicted_column_orthogonality = false;  // cond_c1 && cond_c2
    bool printed_or_satisfied = false;            // cond_c1 || cond_c2
    // every entrywise product a_ql^(i) * a_pl^(j) vanishes identically
    bool degenerate_overlap = false;
};

PairVerdict pair_verdict(const StbcCode& code, int i, int j);  // 0-based i != j
std::vector<PairVerdict> all_pair_verdicts(const StbcCode& code);

// U_ij = ||A_i A_j^H + A_j A_i^H||_F^2 (squared Frobenius norm), symmetric.
// The diagonal is computed per the formula but carries no structure
// information and is never used for pattern prediction.
RMatrix hrqf_matrix(const StbcCode& code);

// Zero structure the HRQF lemmas can claim: U_ij = 0 seeds propagated
// through the Gram-Schmidt induction.
ZeroPattern hrqf_predicted_pattern(const StbcCode& code);

// 2k x 2k map: '#' diagonal, 'B' both conditions, '1' c1 only, '2' c2 only,
// '.' neither.
std::string verdict_table_ascii(const StbcCode& code);
nlohmann::json verdicts_json(const StbcCode& code);

}  // namespace stbc
