#include "stbc/structure.hpp"

#include "stbc/criteria.hpp"
#include "stbc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <unordered_map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace stbc {

namespace {

constexpr double kStructuralZeroTol = 1e-9;  // relative to ||R||_F, all trials
constexpr int kMaxRedrawsPerTrial = 100;
constexpr int kNumericCheckDraws = 20;       // full-rank / E^tE checks

}  // namespace

int worker_threads() {
    static const int n = [] {
        if (const char* env = std::getenv("STBC_FSD_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return 1;
    }();
    return n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_threads(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

CMatrix draw_channel(Rng& rng, int n_r, int n_t) {
    CMatrix h(n_r, n_t);
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_t; ++j)
            h(i, j) = rng.cgaussian();
    return h;
}

RMatrix equivalent_channel(const StbcCode& code, const CMatrix& h) {
    if (h.cols() != code.n_t)
        throw std::invalid_argument("channel matrix must have n_t columns");
    const RMatrix hc = check_realify(h);
    const RMatrix g = generator_matrix(code);
    RMatrix heq(2 * h.rows() * code.T, code.num_real_symbols());
    for (int t = 0; t < code.T; ++t)
        heq.middleRows(2 * h.rows() * t, 2 * h.rows()) =
            hc * g.middleRows(2 * code.n_t * t, 2 * code.n_t);
    return heq;
}

EmpiricalPattern empirical_pattern(const StbcCode& code, const ChannelModel& channel, int trials) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const int n = code.num_real_symbols();
    if (2 * channel.n_r * code.T < n)
        throw UnderDeterminedError("need 2*n_r*T >= 2*kappa (n_r >= kappa / T); got n_r = " +
                                   std::to_string(channel.n_r));

    struct TrialResult {
        RMatrix abs_r;
        double fro = 0.0;
        int redraws = 0;
    };
    std::vector<TrialResult> results(trials);
    parallel_for(trials, [&](int t) {
        Rng rng = Rng::stream(channel.seed, static_cast<std::uint64_t>(t));
        TrialResult& res = results[t];
        for (;;) {
            const CMatrix h = draw_channel(rng, channel.n_r, code.n_t);
            try {
                const QRFactors qr = gram_schmidt_qr(equivalent_channel(code, h));
                res.abs_r = qr.R.cwiseAbs();
                res.fro = qr.R.norm();
                return;
            } catch (const RankDeficientError&) {
                if (++res.redraws > kMaxRedrawsPerTrial)
                    throw;
            }
        }
    });

    EmpiricalPattern out;
    out.pattern = ZeroPattern(n);
    out.max_abs = RMatrix::Zero(n, n);
    out.trials = trials;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out.pattern.set_zero(i, j, true);
    for (const TrialResult& res : results) {
        out.max_abs = out.max_abs.cwiseMax(res.abs_r);
        out.mean_fro += res.fro / trials;
        out.redraws += res.redraws;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (res.abs_r(i, j) >= kStructuralZeroTol * res.fro)
                    out.pattern.set_zero(i, j, false);
    }
    return out;
}

ZeroPattern predicted_pattern_theorem4(const StbcCode& code) {
    const int n = code.num_real_symbols();
    std::vector<std::vector<bool>> orth(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            orth[i][j] = orth[j][i] = predict_column_orthogonality(code, i, j);
    return propagate_orthogonality(orth);
}

int OrderedPartition::start(int g) const {
    return std::accumulate(sizes.begin(), sizes.begin() + g, 0);
}

int OrderedPartition::total() const {
    return std::accumulate(sizes.begin(), sizes.end(), 0);
}

std::string OrderedPartition::describe() const {
    std::ostringstream os;
    int pos = 1;
    for (size_t g = 0; g < sizes.size(); ++g) {
        if (g) os << ",";
        os << "{";
        for (int k = 0; k < sizes[g]; ++k) {
            if (k) os << ",";
            os << pos++;
        }
        os << "}";
    }
    return os.str();
}

const char* family_name(Family f) {
    switch (f) {
        case Family::unstructured: return "unstructured";
        case Family::g_group: return "g_group";
        case Family::fast_decodable: return "fast_decodable";
        case Family::fast_group_decodable: return "fast_group_decodable";
        case Family::block_orthogonal: return "block_orthogonal";
    }
    return "?";
}

namespace {

// Boundary s (1..L-1) splits a prefix of length L when every entry crossing
// it inside the prefix is zero. Valid boundaries are independent, so the
// finest partition uses all of them.
bool boundary_valid(const ZeroPattern& p, int offset, int L, int s) {
    for (int i = offset; i < offset + s; ++i)
        for (int j = offset + s; j < offset + L; ++j)
            if (!p.zero(i, j)) return false;
    return true;
}

}  // namespace

OrderedPartition finest_block_partition(const ZeroPattern& p, int offset, int len) {
    const int L = len < 0 ? p.dim() - offset : len;
    OrderedPartition part;
    int last = 0;
    for (int s = 1; s < L; ++s) {
        if (boundary_valid(p, offset, L, s)) {
            part.sizes.push_back(s - last);
            last = s;
        }
    }
    part.sizes.push_back(L - last);
    return part;
}

std::optional<FastStructure> best_fast_structure(const ZeroPattern& p, int offset, int len) {
    if (len < 0) len = p.dim() - offset;
    std::optional<FastStructure> best;
    int best_cost = 0, best_groups = 0;
    for (int L = 2; L <= len; ++L) {
        OrderedPartition part = finest_block_partition(p, offset, L);
        if (part.groups() < 2) continue;
        const int max_k = *std::max_element(part.sizes.begin(), part.sizes.end());
        const int cost = len - L + max_k;
        if (!best || cost < best_cost || (cost == best_cost && L > best->L) ||
            (cost == best_cost && L == best->L && part.groups() > best_groups)) {
            best_cost = cost;
            best_groups = part.groups();
            best = FastStructure{L, std::move(part)};
        }
    }
    return best;
}

namespace {

bool is_divisor(int a, int b) { return a > 0 && b % a == 0; }

// Lemma-style pattern conditions for (Gamma, k, gamma): diagonal segments
// block diagonal with k sub-blocks of size gamma, every cross-segment block
// carrying at least one generic entry.
bool bo_pattern_ok(const ZeroPattern& p, int Gamma, int k, int gamma) {
    const int seg = k * gamma;
    for (int s = 0; s < Gamma; ++s) {
        const int a = s * seg;
        for (int i = 0; i < seg; ++i)
            for (int j = i + 1; j < seg; ++j)
                if (i / gamma != j / gamma && !p.zero(a + i, a + j)) return false;
    }
    for (int s = 0; s < Gamma; ++s) {
        for (int t = s + 1; t < Gamma; ++t) {
            bool nonzero = false;
            for (int i = s * seg; i < (s + 1) * seg && !nonzero; ++i)
                for (int j = t * seg; j < (t + 1) * seg; ++j)
                    if (!p.zero(i, j)) {
                        nonzero = true;
                        break;
                    }
            if (!nonzero) return false;
        }
    }
    return true;
}

// Weight-side condition: each segment's matrices are k-group decodable with
// gamma variables per group (mutual orthogonality across sub-blocks).
bool bo_weights_ok(const StbcCode& code, int Gamma, int k, int gamma) {
    const int seg = k * gamma;
    for (int s = 0; s < Gamma; ++s) {
        const int a = s * seg;
        for (int i = 0; i < seg; ++i)
            for (int j = i + 1; j < seg; ++j)
                if (i / gamma != j / gamma && !hr_mutual_orthogonality(code, a + i, a + j))
                    return false;
    }
    return true;
}

// E^t E block diagonality at every recursion level, averaged over draws.
bool bo_numeric_ok(const StbcCode& code, const ChannelModel& channel, int Gamma, int k,
                   int gamma) {
    const int seg = k * gamma;
    std::vector<RMatrix> ete_mean(Gamma);
    for (int t = 1; t < Gamma; ++t) ete_mean[t] = RMatrix::Zero(seg, seg);

    int draws_done = 0;
    for (int d = 0; d < kNumericCheckDraws; ++d) {
        Rng rng = Rng::stream(channel.seed ^ 0x5bd1e995u, static_cast<std::uint64_t>(d));
        RMatrix r;
        bool ok = false;
        for (int attempt = 0; attempt < kMaxRedrawsPerTrial && !ok; ++attempt) {
            try {
                r = gram_schmidt_qr(equivalent_channel(code, draw_channel(rng, channel.n_r, code.n_t))).R;
                ok = true;
            } catch (const RankDeficientError&) {
            }
        }
        if (!ok) return false;  // cannot certify full rank
        for (int t = 1; t < Gamma; ++t) {
            const RMatrix e = r.block(0, t * seg, t * seg, seg);
            ete_mean[t] += (e.transpose() * e).cwiseAbs();
        }
        ++draws_done;
    }
    for (int t = 1; t < Gamma; ++t) {
        ete_mean[t] /= draws_done;
        const double scale = ete_mean[t].norm();
        for (int i = 0; i < seg; ++i)
            for (int j = 0; j < seg; ++j)
                if (i / gamma != j / gamma && ete_mean[t](i, j) >= kStructuralZeroTol * scale)
                    return false;
    }
    return true;
}

// Divisor-consistent parameter fit, maximal Gamma first, then maximal k.
// k >= 2 is required: block-orthogonal codes are fast decodable, so each
// R_i must genuinely split; k = 1 would accept any dense full-rank R.
std::optional<BoParams> fit_block_orthogonal(const StbcCode& code, const ZeroPattern& emp,
                                             const ChannelModel& channel) {
    const int n = code.num_real_symbols();
    for (int Gamma = n / 2; Gamma >= 2; --Gamma) {
        if (!is_divisor(Gamma, n)) continue;
        const int seg = n / Gamma;
        for (int k = seg; k >= 2; --k) {
            if (!is_divisor(k, seg)) continue;
            const int gamma = seg / k;
            if (!bo_pattern_ok(emp, Gamma, k, gamma)) continue;
            if (!bo_weights_ok(code, Gamma, k, gamma)) continue;
            if (!bo_numeric_ok(code, channel, Gamma, k, gamma)) continue;
            return BoParams{Gamma, k, gamma};
        }
    }
    return std::nullopt;
}

}  // namespace

ClassificationReport classify(const StbcCode& code, const ZeroPattern& empirical,
                              const ChannelModel& channel) {
    const int n = empirical.dim();
    ClassificationReport rep;
    rep.witness = finest_block_partition(empirical, 0, n);

    if (rep.witness.groups() >= 2) {
        rep.family = Family::g_group;
        rep.group_fast.resize(rep.witness.groups());
        bool any_inner = false;
        for (int g = 0; g < rep.witness.groups(); ++g) {
            rep.group_fast[g] = best_fast_structure(empirical, rep.witness.start(g),
                                                    rep.witness.sizes[g]);
            if (rep.group_fast[g]) any_inner = true;
        }
        if (any_inner) rep.family = Family::fast_group_decodable;
        return rep;
    }

    rep.fast = best_fast_structure(empirical, 0, n);
    rep.bo_params = fit_block_orthogonal(code, empirical, channel);
    if (rep.bo_params)
        rep.family = Family::block_orthogonal;
    else if (rep.fast)
        rep.family = Family::fast_decodable;
    else
        rep.family = Family::unstructured;
    return rep;
}

FsdComplexity fsd_complexity(const ClassificationReport& report, int q, int kappa) {
    if (q < 1) throw std::invalid_argument("q must be >= 1");
    FsdComplexity out;
    const double per_real = q / 2.0;  // log2 of the per-dimension alphabet
    const int n = 2 * kappa;
    out.exhaustive_exponent = static_cast<double>(q) * kappa;

    const auto group_count = [&](int size, const std::optional<FastStructure>& inner) {
        if (inner) {
            const int max_k =
                *std::max_element(inner->groups.sizes.begin(), inner->groups.sizes.end());
            return std::exp2(per_real * (size - inner->L)) * std::exp2(per_real * max_k);
        }
        return std::exp2(per_real * size);
    };

    switch (report.family) {
        case Family::g_group:
        case Family::fast_group_decodable: {
            out.count = 0.0;
            for (int g = 0; g < report.witness.groups(); ++g) {
                const auto& inner = report.group_fast.empty()
                                        ? std::optional<FastStructure>{}
                                        : report.group_fast[g];
                const double c = group_count(report.witness.sizes[g], inner);
                out.group_exponents.push_back(std::log2(c));
                out.count += c;
            }
            break;
        }
        case Family::fast_decodable:
        case Family::block_orthogonal: {
            if (report.fast) {
                const int max_k = *std::max_element(report.fast->groups.sizes.begin(),
                                                    report.fast->groups.sizes.end());
                out.count = std::exp2(per_real * (n - report.fast->L)) * std::exp2(per_real * max_k);
                for (int sz : report.fast->groups.sizes)
                    out.group_exponents.push_back(per_real * sz);
            } else {
                out.count = std::exp2(out.exhaustive_exponent);
            }
            break;
        }
        case Family::unstructured:
            out.count = std::exp2(out.exhaustive_exponent);
            break;
    }
    out.exponent = std::log2(out.count);
    return out;
}

std::vector<Mismatch> compare_hrqf(const StbcCode& code, const ZeroPattern& empirical) {
    const ZeroPattern claimed = hrqf_predicted_pattern(code);
    std::vector<Mismatch> out;
    for (int i = 0; i < empirical.dim(); ++i) {
        for (int j = i + 1; j < empirical.dim(); ++j) {
            const bool hz = claimed.zero(i, j);
            const bool ez = empirical.zero(i, j);
            if (hz && !ez) out.push_back({i + 1, j + 1, MismatchDirection::hrqf_unsound});
            if (ez && !hz) out.push_back({i + 1, j + 1, MismatchDirection::hrqf_incomplete});
        }
    }
    return out;
}

namespace {

// Complexity of the propagated pattern alone; block-orthogonal refinements
// share the count of their fast structure, so this is the search objective.
double structural_count(const ZeroPattern& p, int q) {
    const int n = p.dim();
    const double per_real = q / 2.0;
    const OrderedPartition part = finest_block_partition(p, 0, n);
    if (part.groups() >= 2) {
        double count = 0.0;
        for (int g = 0; g < part.groups(); ++g) {
            const auto inner = best_fast_structure(p, part.start(g), part.sizes[g]);
            if (inner) {
                const int mk =
                    *std::max_element(inner->groups.sizes.begin(), inner->groups.sizes.end());
                count += std::exp2(per_real * (part.sizes[g] - inner->L + mk));
            } else {
                count += std::exp2(per_real * part.sizes[g]);
            }
        }
        return count;
    }
    const auto fast = best_fast_structure(p, 0, n);
    if (fast) {
        const int mk = *std::max_element(fast->groups.sizes.begin(), fast->groups.sizes.end());
        return std::exp2(per_real * (n - fast->L + mk));
    }
    return std::exp2(per_real * n);
}

using MaskKey = std::pair<std::uint64_t, std::uint64_t>;

struct MaskKeyHash {
    size_t operator()(const MaskKey& k) const {
        return std::hash<std::uint64_t>()(k.first * 0x9e3779b97f4a7c15ULL ^ k.second);
    }
};

MaskKey mask_key(const std::vector<std::vector<bool>>& orth, const std::vector<int>& perm) {
    MaskKey key{0, 0};
    int bit = 0;
    const int n = static_cast<int>(perm.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++bit) {
            if (orth[perm[i]][perm[j]]) {
                if (bit < 64)
                    key.first |= (1ULL << bit);
                else
                    key.second |= (1ULL << (bit - 64));
            }
        }
    }
    return key;
}

struct Objective {
    double count;
    int zeros;

    bool better_than(const Objective& o) const {
        if (count != o.count) return count < o.count;
        return zeros > o.zeros;
    }
};

Objective evaluate_ordering(const std::vector<std::vector<bool>>& orth,
                            const std::vector<int>& perm, int q) {
    const int n = static_cast<int>(perm.size());
    std::vector<std::vector<bool>> po(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) po[i][j] = orth[perm[i]][perm[j]];
    const ZeroPattern p = propagate_orthogonality(po);
    return {structural_count(p, q), p.zero_count()};
}

}  // namespace

OrderingSearchResult ordering_search(const StbcCode& code, const ChannelModel& channel, int q,
                                     bool heuristic, int confirm_trials) {
    const int n = code.num_real_symbols();
    if (!heuristic && n > 12)
        throw SearchOverflowError("exhaustive ordering search needs 2*kappa <= 12; got " +
                                  std::to_string(n) + " (use heuristic mode)");

    std::vector<std::vector<bool>> orth(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            orth[i][j] = orth[j][i] = predict_column_orthogonality(code, i, j);

    OrderingSearchResult result;
    std::vector<int> best_perm(n);
    std::iota(best_perm.begin(), best_perm.end(), 0);
    Objective best = evaluate_ordering(orth, best_perm, q);
    result.objective_trace.push_back(best.count);

    if (!heuristic) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::unordered_map<MaskKey, Objective, MaskKeyHash> memo;
        do {
            const MaskKey key = mask_key(orth, perm);
            auto it = memo.find(key);
            Objective obj;
            if (it == memo.end()) {
                obj = evaluate_ordering(orth, perm, q);
                memo.emplace(key, obj);
                ++result.orderings_evaluated;
            } else {
                obj = it->second;
            }
            if (obj.better_than(best)) {
                best = obj;
                best_perm = perm;
                result.objective_trace.push_back(best.count);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        // group symbols by connected components of the non-orthogonality
        // graph (cross-component pairs are orthogonal by construction)
        std::vector<int> comp(n, -1);
        int ncomp = 0;
        for (int s = 0; s < n; ++s) {
            if (comp[s] >= 0) continue;
            std::vector<int> stack{s};
            comp[s] = ncomp;
            while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                for (int v = 0; v < n; ++v)
                    if (v != u && !orth[u][v] && comp[v] < 0) {
                        comp[v] = ncomp;
                        stack.push_back(v);
                    }
            }
            ++ncomp;
        }
        std::vector<int> perm;
        for (int c = 0; c < ncomp; ++c)
            for (int s = 0; s < n; ++s)
                if (comp[s] == c) perm.push_back(s);
        Objective obj = evaluate_ordering(orth, perm, q);
        ++result.orderings_evaluated;
        if (obj.better_than(best)) {
            best = obj;
            best_perm = perm;
            result.objective_trace.push_back(best.count);
        }
        // first-improvement pairwise swaps until a full sweep finds nothing
        bool improved = true;
        while (improved) {
            improved = false;
            for (int a = 0; a < n && !improved; ++a) {
                for (int b = a + 1; b < n && !improved; ++b) {
                    std::vector<int> cand = best_perm;
                    std::swap(cand[a], cand[b]);
                    const Objective cobj = evaluate_ordering(orth, cand, q);
                    ++result.orderings_evaluated;
                    if (cobj.better_than(best)) {
                        best = cobj;
                        best_perm = std::move(cand);
                        result.objective_trace.push_back(best.count);
                        improved = true;
                    }
                }
            }
        }
    }

    result.ordering = SymbolOrdering{best_perm};

    // empirical confirmation of the winner and of the starting point
    const EmpiricalPattern before = empirical_pattern(code, channel, confirm_trials);
    const ClassificationReport before_rep = classify(code, before.pattern, channel);
    result.count_before = fsd_complexity(before_rep, q, code.kappa).count;
    result.exponent_before = std::log2(result.count_before);

    const StbcCode reordered = apply_ordering(code, result.ordering);
    const EmpiricalPattern after = empirical_pattern(reordered, channel, confirm_trials);
    result.pattern_after = after.pattern;
    result.report = classify(reordered, after.pattern, channel);
    const FsdComplexity fc = fsd_complexity(result.report, q, code.kappa);
    result.report.fsd_exponent = fc.exponent;
    result.count_after = fc.count;
    result.exponent_after = fc.exponent;
    return result;
}

nlohmann::json report_to_json(const ClassificationReport& report) {
    nlohmann::json j;
    j["family"] = family_name(report.family);
    j["witness_partition"] = report.witness.sizes;
    if (report.fast) {
        j["fast"] = {{"L", report.fast->L}, {"groups", report.fast->groups.sizes}};
    }
    if (!report.group_fast.empty()) {
        nlohmann::json gf = nlohmann::json::array();
        for (const auto& g : report.group_fast) {
            if (g)
                gf.push_back({{"L", g->L}, {"groups", g->groups.sizes}});
            else
                gf.push_back(nullptr);
        }
        j["group_fast"] = std::move(gf);
    }
    if (report.bo_params) {
        j["bo_params"] = {{"Gamma", report.bo_params->Gamma},
                          {"k", report.bo_params->k},
                          {"gamma", report.bo_params->gamma}};
    }
    j["fsd_exponent"] = report.fsd_exponent;
    nlohmann::json mm = nlohmann::json::array();
    for (const Mismatch& m : report.hrqf_mismatches) {
        mm.push_back({{"i", m.i},
                      {"j", m.j},
                      {"direction", m.direction == MismatchDirection::hrqf_unsound
                                        ? "hrqf_unsound"
                                        : "hrqf_incomplete"}});
    }
    j["hrqf_mismatches"] = std::move(mm);
    return j;
}

}  // namespace stbc
