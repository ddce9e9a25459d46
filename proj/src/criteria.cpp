#include "stbc/criteria.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace stbc {

namespace {

void check_pair_indices(const StbcCode& code, int i, int j) {
    const int n = code.num_real_symbols();
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::out_of_range("symbol index out of range");
    if (i == j)
        throw std::invalid_argument("conditions are defined for i != j");
}

// |sum| against the accumulated magnitude of its own addends; an all-zero
// sum passes with any tolerance.
bool sum_is_zero(double sum, double scale) {
    return std::abs(sum) <= kConditionTol * scale;
}

}  // namespace

ConditionResult check_c1(const StbcCode& code, int i, int j) {
    check_pair_indices(code, i, j);
    const CMatrix& ai = code.weights[i];
    const CMatrix& aj = code.weights[j];
    ConditionResult res{true, 0.0};
    for (int q = 0; q < code.n_t; ++q) {
        for (int p = q; p < code.n_t; ++p) {
            double sum = 0.0, scale = 0.0;
            for (int l = 0; l < code.T; ++l) {
                const cplx p1 = ai(q, l) * std::conj(aj(p, l));
                const cplx p2 = ai(p, l) * std::conj(aj(q, l));
                sum += trace_form(p1) + trace_form(p2);
                // product magnitudes, not trace magnitudes: a trace term may
                // itself be a rounding-level cancellation of an O(1) product
                scale += 2.0 * (std::abs(p1) + std::abs(p2));
            }
            res.residual = std::max(res.residual, std::abs(sum));
            if (!sum_is_zero(sum, scale)) res.holds = false;
        }
    }
    return res;
}

ConditionResult check_c2(const StbcCode& code, int i, int j) {
    check_pair_indices(code, i, j);
    const CMatrix& ai = code.weights[i];
    const CMatrix& aj = code.weights[j];
    const cplx iu(0, 1);
    ConditionResult res{true, 0.0};
    for (int q = 0; q < code.n_t; ++q) {
        for (int p = q + 1; p < code.n_t; ++p) {
            double sum = 0.0, scale = 0.0;
            for (int l = 0; l < code.T; ++l) {
                const cplx p1 = ai(q, l) * std::conj(aj(p, l));
                const cplx p2 = ai(p, l) * std::conj(aj(q, l));
                sum += trace_form(iu * (p1 - p2));
                scale += 2.0 * (std::abs(p1) + std::abs(p2));
            }
            res.residual = std::max(res.residual, std::abs(sum));
            if (!sum_is_zero(sum, scale)) res.holds = false;
        }
    }
    return res;
}

bool hr_mutual_orthogonality(const StbcCode& code, int i, int j) {
    check_pair_indices(code, i, j);
    const CMatrix& ai = code.weights[i];
    const CMatrix& aj = code.weights[j];
    const CMatrix p1 = ai * aj.adjoint();
    const CMatrix p2 = aj * ai.adjoint();
    const double scale = p1.norm() + p2.norm();
    return (p1 + p2).norm() <= kConditionTol * scale;
}

bool predict_column_orthogonality(const StbcCode& code, int i, int j) {
    return check_c1(code, i, j).holds && check_c2(code, i, j).holds;
}

PairVerdict pair_verdict(const StbcCode& code, int i, int j) {
    check_pair_indices(code, i, j);
    PairVerdict v;
    v.i = i + 1;
    v.j = j + 1;
    const ConditionResult c1 = check_c1(code, i, j);
    const ConditionResult c2 = check_c2(code, i, j);
    v.cond_c1 = c1.holds;
    v.cond_c2 = c2.holds;
    v.c1_residual = c1.residual;
    v.c2_residual = c2.residual;
    v.hr_orthogonal = hr_mutual_orthogonality(code, i, j);
    const CMatrix w = code.weights[i] * code.weights[j].adjoint() +
                      code.weights[j] * code.weights[i].adjoint();
    v.hrqf_value = w.squaredNorm();
    v.predicted_column_orthogonality = c1.holds && c2.holds;
    v.printed_or_satisfied = c1.holds || c2.holds;

    v.degenerate_overlap = true;
    for (int q = 0; q < code.n_t && v.degenerate_overlap; ++q)
        for (int p = 0; p < code.n_t && v.degenerate_overlap; ++p)
            for (int l = 0; l < code.T; ++l)
                if (std::abs(code.weights[i](q, l) * code.weights[j](p, l)) > 0.0) {
                    v.degenerate_overlap = false;
                    break;
                }
    return v;
}

std::vector<PairVerdict> all_pair_verdicts(const StbcCode& code) {
    std::vector<PairVerdict> out;
    const int n = code.num_real_symbols();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.push_back(pair_verdict(code, i, j));
    return out;
}

RMatrix hrqf_matrix(const StbcCode& code) {
    const int n = code.num_real_symbols();
    RMatrix u(n, n);
    for (int i = 0; i < n; ++i) {
        u(i, i) = (2.0 * code.weights[i] * code.weights[i].adjoint()).squaredNorm();
        for (int j = i + 1; j < n; ++j) {
            const CMatrix w = code.weights[i] * code.weights[j].adjoint() +
                              code.weights[j] * code.weights[i].adjoint();
            u(i, j) = u(j, i) = w.squaredNorm();
        }
    }
    return u;
}

ZeroPattern hrqf_predicted_pattern(const StbcCode& code) {
    const int n = code.num_real_symbols();
    std::vector<std::vector<bool>> orth(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            orth[i][j] = orth[j][i] = hr_mutual_orthogonality(code, i, j);
    return propagate_orthogonality(orth);
}

std::string verdict_table_ascii(const StbcCode& code) {
    const int n = code.num_real_symbols();
    std::string out;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                out += '#';
                continue;
            }
            const bool c1 = check_c1(code, std::min(i, j), std::max(i, j)).holds;
            const bool c2 = check_c2(code, std::min(i, j), std::max(i, j)).holds;
            out += (c1 && c2) ? 'B' : c1 ? '1' : c2 ? '2' : '.';
        }
        out += '\n';
    }
    return out;
}

nlohmann::json verdicts_json(const StbcCode& code) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PairVerdict& v : all_pair_verdicts(code)) {
        arr.push_back({{"i", v.i},
                       {"j", v.j},
                       {"c1", v.cond_c1},
                       {"c2", v.cond_c2},
                       {"c1_residual", v.c1_residual},
                       {"c2_residual", v.c2_residual},
                       {"hr_orthogonal", v.hr_orthogonal},
                       {"hrqf_value", v.hrqf_value},
                       {"column_orthogonal", v.predicted_column_orthogonality},
                       {"c1_or_c2", v.printed_or_satisfied},
                       {"degenerate_overlap", v.degenerate_overlap}});
    }
    return arr;
}

}  // namespace stbc
