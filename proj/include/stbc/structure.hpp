#pragma once

#include "stbc/code.hpp"
#include "stbc/pattern.hpp"
#include "stbc/rng.hpp"

#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace stbc {

// QR of H_eq needs 2*n_r*T >= 2*kappa; fewer receive antennas leave the
// system under-determined.
struct UnderDeterminedError : std::runtime_error {
    explicit UnderDeterminedError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SearchOverflowError : std::runtime_error {
    explicit SearchOverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

// i.i.d. complex circularly symmetric Gaussian entries, zero mean, unit
// variance; trials derive per-index streams from the seed.
struct ChannelModel {
    int n_r = 2;
    std::uint64_t seed = 42;
};

CMatrix draw_channel(Rng& rng, int n_r, int n_t);

// H_eq = (I_T (x) check(H)) * G
RMatrix equivalent_channel(const StbcCode& code, const CMatrix& h);

struct EmpiricalPattern {
    ZeroPattern pattern;
    RMatrix max_abs;       // max |R_ij| over trials
    double mean_fro = 0.0; // mean ||R||_F over trials
    int trials = 0;
    int redraws = 0;       // rank-deficient draws that were replaced
};

// Entry (i,j) is a structural zero iff |R_ij| < 1e-9 * ||R||_F in every
// trial; a single generic draw disqualifies.
EmpiricalPattern empirical_pattern(const StbcCode& code, const ChannelModel& channel, int trials);

// Channel-free prediction: pairwise column orthogonality (both condition
// families) propagated through the Gram-Schmidt induction. Conservative:
// marks only zeros the induction proves, so predicted zeros are a subset of
// the empirical ones.
ZeroPattern predicted_pattern_theorem4(const StbcCode& code);

// Contiguous grouping of symbol indices; sizes k_1..k_g partition 1..L.
struct OrderedPartition {
    std::vector<int> sizes;

    int groups() const { return static_cast<int>(sizes.size()); }
    int start(int g) const;  // first index of group g (0-based)
    int total() const;
    std::string describe() const;  // e.g. "{1,2},{3,4}" (1-based)
};

enum class Family { unstructured, g_group, fast_decodable, fast_group_decodable, block_orthogonal };
const char* family_name(Family f);

// Conditioned decoding structure: the first L symbols split into mutually
// orthogonal groups once symbols L+1..2k are fixed.
struct FastStructure {
    int L = 0;
    OrderedPartition groups;
};

struct BoParams {
    int Gamma = 0;
    int k = 0;
    int gamma = 0;
};

// Finest contiguous partition of [offset, offset+len) whose cross-group
// entries are all zero in the pattern (len = -1 means the whole dimension).
OrderedPartition finest_block_partition(const ZeroPattern& p, int offset = 0, int len = -1);

// Best conditioned structure inside [offset, offset+len): a prefix length L
// and a partition of it with zero cross-group entries, minimizing
// (len - L + max group size). Empty when no nontrivial split exists.
std::optional<FastStructure> best_fast_structure(const ZeroPattern& p, int offset = 0,
                                                 int len = -1);

enum class MismatchDirection {
    hrqf_unsound,    // HRQF predicts zero, measured entry is generic
    hrqf_incomplete  // measured zero the HRQF prediction misses
};

struct Mismatch {
    int i = 0, j = 0;  // 1-based
    MismatchDirection direction;
};

struct ClassificationReport {
    Family family = Family::unstructured;
    OrderedPartition witness;                             // maximal contiguous block-diagonal partition
    std::optional<FastStructure> fast;                    // best conditioned structure (g = 1 codes)
    std::vector<std::optional<FastStructure>> group_fast; // per-group substructure (g >= 2 codes)
    std::optional<BoParams> bo_params;
    double fsd_exponent = 0.0;                            // filled via fsd_complexity
    std::vector<Mismatch> hrqf_mismatches;                // filled via compare_hrqf
};

// Family decision tree on the measured pattern; Lemma-style numeric checks
// (full rank, E^t E block diagonality) run on fresh draws from `channel`.
ClassificationReport classify(const StbcCode& code, const ZeroPattern& empirical,
                              const ChannelModel& channel);

struct FsdComplexity {
    double count = 0.0;                  // worst-case metric evaluations
    double exponent = 0.0;               // log2(count)
    double exhaustive_exponent = 0.0;    // q * kappa
    std::vector<double> group_exponents; // per-group log2 counts where applicable
};

FsdComplexity fsd_complexity(const ClassificationReport& report, int q, int kappa);

std::vector<Mismatch> compare_hrqf(const StbcCode& code, const ZeroPattern& empirical);

struct OrderingSearchResult {
    SymbolOrdering ordering;
    ClassificationReport report;        // best ordering, confirmed empirically
    ZeroPattern pattern_after;          // measured pattern of the best ordering
    double count_before = 0.0;
    double count_after = 0.0;
    double exponent_before = 0.0;
    double exponent_after = 0.0;
    std::vector<double> objective_trace;  // best-so-far counts, non-increasing
    long orderings_evaluated = 0;
};

// Exhaustive mode enumerates all (2k)! symbol orderings (2k <= 12) with
// memoization over equivalent permuted orthogonality masks, scoring each by
// the channel-free propagated pattern; the winner is confirmed empirically.
// Heuristic mode groups symbols by the orthogonality graph and refines with
// pairwise swaps. P_y is never searched; row permutations cannot change the
// zero structure.
OrderingSearchResult ordering_search(const StbcCode& code, const ChannelModel& channel, int q,
                                     bool heuristic = false, int confirm_trials = 20);

nlohmann::json report_to_json(const ClassificationReport& report);

}  // namespace stbc
