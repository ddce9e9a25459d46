#pragma once

#include "stbc/code.hpp"
#include "stbc/pattern.hpp"
#include "stbc/structure.hpp"

#include <vector>

namespace stbc {

struct CodebookTooLargeError : std::runtime_error {
    explicit CodebookTooLargeError(const std::string& msg) : std::runtime_error(msg) {}
};

// 2^q-QAM: per real dimension a 2^(q/2)-point PAM alphabet on the odd
// integers, scaled to unit average complex-symbol energy.
struct Constellation {
    int q = 0;                  // bits per complex symbol, even
    std::vector<double> levels; // ascending PAM levels

    static Constellation qam(int q);

    int size_per_dim() const { return static_cast<int>(levels.size()); }
    int bits_per_dim() const { return q / 2; }
    static unsigned gray(unsigned k) { return k ^ (k >> 1); }
    int nearest_index(double x) const;
};

struct DecodeResult {
    std::vector<int> indices;  // PAM index per real symbol slot
    RVector s_hat;             // PAM values
    double metric = 0.0;       // the objective this decoder minimized
    long nodes_visited = 0;    // metric-increment evaluations, pruned partials included
    long leaf_evals = 0;       // completed block-hypothesis evaluations
    bool is_ml = false;
};

// Exhaustive argmin of ||y - H_eq s||^2 over the full real codebook.
// Independent of the QR path; guard 2^(q*kappa) <= 2^20.
DecodeResult ml_oracle(const RVector& y, const RMatrix& heq, const Constellation& cons);

// Depth-first Schnorr-Euchner enumeration on R from the positive-diagonal
// Gram-Schmidt QR; infinite initial radius, shrink at every full hypothesis,
// so the result is exact ML. A pattern turns on structure exploitation:
// independent blocks decode separately, a conditioned prefix decodes its
// groups independently per tail assignment. The decision never changes,
// only the visit counts. Minimizes ||Q^t y - R s||^2.
DecodeResult sphere_decode(const RVector& y, const RMatrix& heq, const Constellation& cons,
                           const ZeroPattern* pattern = nullptr);

struct MonteCarloRow {
    double snr_db = 0.0;
    double ber = 0.0;
    double ser = 0.0;
    double mean_nodes = 0.0;
    double p95_nodes = 0.0;
    long trials = 0;
    long oracle_checked = 0;  // instances cross-validated against ml_oracle
    long oracle_agree = 0;
};

struct MonteCarloConfig {
    int trials = 100;
    std::uint64_t seed = 42;
    int n_r = 0;                 // 0 = n_t
    bool structured = true;      // exploit the code's empirical zero pattern
    int oracle_check_every = 0;  // 0 = off
};

// Draws H and Z per the channel model, maps SNR (E_s/N_0 per receive
// antenna) to N_0 with codeword energy normalized to E||X||_F^2 = n_t*T,
// decodes every instance and accumulates BER/SER/node statistics.
// Deterministic for a fixed seed.
std::vector<MonteCarloRow> monte_carlo(const StbcCode& code, const Constellation& cons,
                                       const std::vector<double>& snr_db_grid,
                                       const MonteCarloConfig& config);

}  // namespace stbc
