#include "stbc/decoder.hpp"

#include "stbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace stbc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Constellation Constellation::qam(int q) {
    if (q < 2 || q % 2 != 0 || q > 24)
        throw std::invalid_argument("q must be an even bit count in [2, 24]");
    Constellation c;
    c.q = q;
    const int m = 1 << (q / 2);
    // odd-integer PAM grid scaled to unit average complex-symbol energy:
    // E[level^2] = (m^2 - 1)/3 per dimension before scaling
    const double scale = 1.0 / std::sqrt(2.0 * (m * m - 1) / 3.0);
    for (int k = 0; k < m; ++k)
        c.levels.push_back((2 * k - (m - 1)) * scale);
    return c;
}

int Constellation::nearest_index(double x) const {
    int best = 0;
    double dist = std::abs(x - levels[0]);
    for (int k = 1; k < size_per_dim(); ++k) {
        const double d = std::abs(x - levels[k]);
        if (d < dist) {
            dist = d;
            best = k;
        }
    }
    return best;
}

DecodeResult ml_oracle(const RVector& y, const RMatrix& heq, const Constellation& cons) {
    const int n = static_cast<int>(heq.cols());
    if (n % 2 != 0) throw std::invalid_argument("H_eq must have 2*kappa columns");
    const int kappa = n / 2;
    if (static_cast<long>(cons.q) * kappa > 20)
        throw CodebookTooLargeError("codebook 2^(q*kappa) exceeds the 2^20 oracle guard");
    const int m = cons.size_per_dim();

    DecodeResult res;
    res.indices.assign(n, 0);
    res.metric = kInf;
    res.is_ml = true;

    std::vector<int> idx(n, 0);
    std::vector<RVector> partial(n + 1);
    partial[0] = y;

    // depth-first over digits, reusing partial residuals per prefix
    std::function<void(int)> rec = [&](int k) {
        if (k == n) {
            const double metric = partial[n].squaredNorm();
            ++res.nodes_visited;
            ++res.leaf_evals;
            if (metric < res.metric) {
                res.metric = metric;
                res.indices = idx;
            }
            return;
        }
        for (int l = 0; l < m; ++l) {
            idx[k] = l;
            partial[k + 1] = partial[k] - cons.levels[l] * heq.col(k);
            rec(k + 1);
        }
    };
    rec(0);

    res.s_hat.resize(n);
    for (int p = 0; p < n; ++p) res.s_hat(p) = cons.levels[res.indices[p]];
    return res;
}

namespace {

// Schnorr-Euchner depth-first enumeration over the triangular block
// rows/cols [lo, hi) of R against target y. Per-level candidates come in
// non-decreasing residual order, so a level whose current increment busts
// the budget is abandoned entirely. on_leaf receives every complete local
// assignment with cost below the budget and returns the (possibly shrunk)
// budget. With a fixed metric no sibling of a just-recorded optimum can
// improve, so the plain decoder skips the leaf level afterwards; the
// conditioned tail keeps enumerating siblings (group costs vary with the
// tail assignment).
class SeDfs {
public:
    SeDfs(const RMatrix& r, const std::vector<double>& levels, long& nodes)
        : r_(r), levels_(levels), nodes_(nodes) {}

    using LeafFn = std::function<double(double total, const std::vector<int>& idx)>;

    void run(const RVector& y, int lo, int hi, double budget, bool sibling_after_leaf,
             const LeafFn& on_leaf) {
        len_ = hi - lo;
        lo_ = lo;
        if (len_ <= 0) throw std::logic_error("SeDfs: empty block");
        const int m = static_cast<int>(levels_.size());
        idx_.assign(len_, 0);
        pos_.assign(len_, 0);
        order_.assign(len_, std::vector<int>(m));
        ksi_.assign(len_, 0.0);
        dist_.assign(len_, 0.0);

        li_ = len_ - 1;
        dist_[li_] = 0.0;
        dfe(y);
        while (true) {
            const int g = lo_ + li_;
            const double resid = y(g) - ksi_[li_] - r_(g, g) * levels_[idx_[li_]];
            const double inc = resid * resid;
            ++nodes_;
            if (dist_[li_] + inc >= budget) {
                if (!next_candidate(li_ + 1)) return;
                continue;
            }
            if (li_ == 0) {
                budget = on_leaf(dist_[0] + inc, idx_);
                if (!next_candidate(sibling_after_leaf ? 0 : 1)) return;
                continue;
            }
            dist_[li_ - 1] = dist_[li_] + inc;
            --li_;
            dfe(y);
        }
    }

private:
    // decision-feedback start at the active level: candidates ordered by
    // distance from the unconstrained solution of this coordinate
    void dfe(const RVector& y) {
        const int g = lo_ + li_;
        double s = 0.0;
        for (int lj = li_ + 1; lj < len_; ++lj) s += r_(g, lo_ + lj) * levels_[idx_[lj]];
        ksi_[li_] = s;
        const double u = (y(g) - s) / r_(g, g);
        auto& ord = order_[li_];
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) {
            return std::abs(levels_[a] - u) < std::abs(levels_[b] - u);
        });
        pos_[li_] = 0;
        idx_[li_] = ord[0];
    }

    // next untried candidate at `from` or above; false when exhausted
    bool next_candidate(int from) {
        for (int l = from; l < len_; ++l) {
            if (++pos_[l] < static_cast<int>(levels_.size())) {
                idx_[l] = order_[l][pos_[l]];
                li_ = l;
                return true;
            }
        }
        return false;
    }

    const RMatrix& r_;
    const std::vector<double>& levels_;
    long& nodes_;
    int lo_ = 0;
    int len_ = 0;
    int li_ = 0;
    std::vector<int> idx_;
    std::vector<int> pos_;
    std::vector<std::vector<int>> order_;
    std::vector<double> ksi_;
    std::vector<double> dist_;
};

// Minimum of the self-contained block [lo, hi) below `budget`; kInf when
// nothing beats it. Leaves of the block are counted as hypothesis
// evaluations.
double solve_block(const RMatrix& r, const RVector& y, int lo, int hi,
                   const std::vector<double>& levels, double budget, std::vector<int>& best_idx,
                   long& nodes, long& leaves) {
    double best = kInf;
    best_idx.assign(hi - lo, -1);
    SeDfs dfs(r, levels, nodes);
    dfs.run(y, lo, hi, budget, false, [&](double total, const std::vector<int>& idx) {
        ++leaves;
        best = total;
        best_idx = idx;
        return total;  // shrink
    });
    return best;
}

}  // namespace

DecodeResult sphere_decode(const RVector& y, const RMatrix& heq, const Constellation& cons,
                           const ZeroPattern* pattern) {
    const int n = static_cast<int>(heq.cols());
    const QRFactors qr = gram_schmidt_qr(heq);
    const RVector y2 = qr.Q.transpose() * y;
    const std::vector<double>& levels = cons.levels;

    // block structure from the pattern: independent groups over the whole
    // index set, or a conditioned prefix when the code is only fast decodable
    int L = 0;
    OrderedPartition groups;
    if (pattern && pattern->dim() == n) {
        OrderedPartition part = finest_block_partition(*pattern);
        if (part.groups() >= 2) {
            L = n;
            groups = part;
        } else if (auto fast = best_fast_structure(*pattern)) {
            L = fast->L;
            groups = fast->groups;
        }
    }

    DecodeResult res;
    res.indices.assign(n, -1);
    res.is_ml = true;
    double best = kInf;

    if (L == 0) {
        best = solve_block(qr.R, y2, 0, n, levels, kInf, res.indices, res.nodes_visited,
                           res.leaf_evals);
    } else if (L == n) {
        // fully independent groups: decode each once and sum the metrics
        best = 0.0;
        std::vector<int> gidx;
        for (int g = 0; g < groups.groups(); ++g) {
            const int a = groups.start(g);
            const int b = a + groups.sizes[g];
            best += solve_block(qr.R, y2, a, b, levels, kInf, gidx, res.nodes_visited,
                                res.leaf_evals);
            std::copy(gidx.begin(), gidx.end(), res.indices.begin() + a);
        }
    } else {
        // conditioned: enumerate the tail [L, n); per tail hypothesis the
        // prefix groups separate and are solved independently
        SeDfs tail(qr.R, levels, res.nodes_visited);
        RVector adj(n);
        std::vector<int> gidx;
        tail.run(y2, L, n, kInf, true, [&](double d_tail, const std::vector<int>& tidx) {
            for (int i = 0; i < L; ++i) {
                double s = 0.0;
                for (int j = L; j < n; ++j) s += qr.R(i, j) * levels[tidx[j - L]];
                adj(i) = y2(i) - s;
            }
            double rem = best - d_tail;  // > 0: the tail loop already pruned
            double gsum = 0.0;
            std::vector<std::vector<int>> assign(groups.groups());
            for (int g = 0; g < groups.groups(); ++g) {
                const int a = groups.start(g);
                const int b = a + groups.sizes[g];
                const double gbest = solve_block(qr.R, adj, a, b, levels, rem, gidx,
                                                 res.nodes_visited, res.leaf_evals);
                if (!(gbest < rem)) return best;  // no improvement possible here
                rem -= gbest;
                gsum += gbest;
                assign[g] = gidx;
            }
            best = d_tail + gsum;
            for (int g = 0; g < groups.groups(); ++g) {
                const int a = groups.start(g);
                for (size_t k = 0; k < assign[g].size(); ++k)
                    res.indices[a + k] = assign[g][k];
            }
            std::copy(tidx.begin(), tidx.end(), res.indices.begin() + L);
            return best;
        });
        if (res.indices[0] < 0)
            throw std::logic_error("sphere_decode: conditioned search found no point");
    }

    res.metric = best;
    res.s_hat.resize(n);
    for (int p = 0; p < n; ++p) res.s_hat(p) = levels[res.indices[p]];
    return res;
}

std::vector<MonteCarloRow> monte_carlo(const StbcCode& code, const Constellation& cons,
                                       const std::vector<double>& snr_db_grid,
                                       const MonteCarloConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
    const int n = code.num_real_symbols();
    const int n_r = config.n_r > 0 ? config.n_r : code.n_t;
    if (2 * n_r * code.T < n)
        throw UnderDeterminedError("need 2*n_r*T >= 2*kappa for decoding");
    const int m = cons.size_per_dim();

    // codeword energy normalization E||X||_F^2 = n_t*T; per-dimension
    // constellation variance is 1/2 under unit symbol energy
    const double gnorm2 = generator_matrix(code).squaredNorm();
    const double energy_scale = std::sqrt(2.0 * code.n_t * code.T / gnorm2);

    std::optional<ZeroPattern> pattern;
    if (config.structured) {
        pattern = empirical_pattern(code, ChannelModel{n_r, config.seed ^ 0x7061747475ULL}, 100)
                      .pattern;
    }

    const bool oracle_feasible = static_cast<long>(cons.q) * code.kappa <= 20;

    std::vector<MonteCarloRow> rows;
    for (size_t ri = 0; ri < snr_db_grid.size(); ++ri) {
        const double snr_db = snr_db_grid[ri];
        const double n0 = code.n_t / std::pow(10.0, snr_db / 10.0);
        const double sigma = std::sqrt(n0);

        struct TrialStats {
            int bit_errors = 0;
            int sym_errors = 0;
            long nodes = 0;
            int checked = 0;
            int agree = 0;
        };
        std::vector<TrialStats> stats(config.trials);

        parallel_for(config.trials, [&](int t) {
            Rng rng = Rng::stream(config.seed ^ (0x9e3779b9ULL * (ri + 1)), t);
            TrialStats& st = stats[t];

            std::vector<int> tx(n);
            for (int p = 0; p < n; ++p) tx[p] = static_cast<int>(rng.uniform_below(m));
            RVector s_tx(n);
            for (int p = 0; p < n; ++p) s_tx(p) = cons.levels[tx[p]];

            RMatrix heq;
            for (int attempt = 0;; ++attempt) {
                const CMatrix h = draw_channel(rng, n_r, code.n_t);
                heq = energy_scale * equivalent_channel(code, h);
                try {
                    gram_schmidt_qr(heq);
                    break;
                } catch (const RankDeficientError&) {
                    if (attempt > 100) throw;
                }
            }

            RVector y = heq * s_tx;
            for (Eigen::Index d = 0; d < y.size(); ++d) y(d) += sigma * rng.gaussian();

            const DecodeResult dec =
                sphere_decode(y, heq, cons, pattern ? &*pattern : nullptr);
            st.nodes = dec.nodes_visited;

            std::vector<bool> sym_wrong(code.kappa, false);
            for (int p = 0; p < n; ++p) {
                if (dec.indices[p] != tx[p]) sym_wrong[code.layout[p].sym] = true;
                st.bit_errors += __builtin_popcount(Constellation::gray(tx[p]) ^
                                                    Constellation::gray(dec.indices[p]));
            }
            for (bool w : sym_wrong) st.sym_errors += w ? 1 : 0;

            if (config.oracle_check_every > 0 && oracle_feasible &&
                t % config.oracle_check_every == 0) {
                const DecodeResult ref = ml_oracle(y, heq, cons);
                ++st.checked;
                if (ref.indices == dec.indices) ++st.agree;
            }
        });

        MonteCarloRow row;
        row.snr_db = snr_db;
        row.trials = config.trials;
        std::vector<long> nodes;
        nodes.reserve(config.trials);
        long bit_errors = 0, sym_errors = 0;
        for (const TrialStats& st : stats) {
            bit_errors += st.bit_errors;
            sym_errors += st.sym_errors;
            nodes.push_back(st.nodes);
            row.oracle_checked += st.checked;
            row.oracle_agree += st.agree;
        }
        row.ber = static_cast<double>(bit_errors) /
                  (static_cast<double>(config.trials) * cons.q * code.kappa);
        row.ser = static_cast<double>(sym_errors) /
                  (static_cast<double>(config.trials) * code.kappa);
        row.mean_nodes = std::accumulate(nodes.begin(), nodes.end(), 0.0) / config.trials;
        std::sort(nodes.begin(), nodes.end());
        row.p95_nodes = static_cast<double>(
            nodes[std::min<size_t>(nodes.size() - 1,
                                   static_cast<size_t>(std::ceil(0.95 * nodes.size())) - 1)]);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace stbc
