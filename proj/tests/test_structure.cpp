#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stbc/criteria.hpp"
#include "stbc/structure.hpp"

#include <algorithm>
#include <numeric>
#include <set>

using namespace stbc;

namespace {

using PairSet = std::set<std::pair<int, int>>;  // 0-based strict-upper

PairSet zeros_of(const ZeroPattern& p) {
    PairSet out;
    for (int i = 0; i < p.dim(); ++i)
        for (int j = i + 1; j < p.dim(); ++j)
            if (p.zero(i, j)) out.insert({i, j});
    return out;
}

const PairSet kAbbaZeros = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
const PairSet kSilverZeros = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
                              {4, 5}, {4, 6}, {4, 7}, {5, 6}, {5, 7}, {6, 7}};
const PairSet kGoldenZeros = {{0, 2}, {0, 3}, {1, 2}, {1, 3},
                              {4, 6}, {4, 7}, {5, 6}, {5, 7}};

StbcCode random_code(Rng& rng, int n_t, int T, int kappa) {
    std::vector<CMatrix> weights;
    for (int l = 0; l < 2 * kappa; ++l) {
        CMatrix a(n_t, T);
        for (int r = 0; r < n_t; ++r)
            for (int c = 0; c < T; ++c) a(r, c) = rng.cgaussian();
        weights.push_back(std::move(a));
    }
    return make_code("synthetic", n_t, T, kappa, std::move(weights));
}

}  // namespace

TEST_CASE("equivalent channel with identity channel equals the generator") {
    const StbcCode abba = builtin_code("abba");
    CHECK(equivalent_channel(abba, CMatrix::Identity(2, 2)) == generator_matrix(abba));
}

TEST_CASE("equivalent channel reproduces the vectorized model") {
    Rng rng(13);
    for (const char* name : {"abba", "silver", "golden"}) {
        const StbcCode code = builtin_code(name);
        for (int rep = 0; rep < 20; ++rep) {
            const CMatrix h = draw_channel(rng, 2, code.n_t);
            CVector s(code.kappa);
            for (int k = 0; k < code.kappa; ++k) s(k) = rng.cgaussian();
            const CMatrix y = h * assemble_codeword(code, s);  // Z = 0
            CVector v(y.rows() * y.cols());
            for (int c = 0; c < y.cols(); ++c)
                for (int r = 0; r < y.rows(); ++r) v(c * y.rows() + r) = y(r, c);
            const RVector lhs = tilde_vec(v);
            const RVector rhs = equivalent_channel(code, h) * real_symbol_vector(code, s);
            CHECK((lhs - rhs).norm() < 1e-12);
        }
    }
}

TEST_CASE("one receive antenna under-determines the full-rate codes") {
    // the wide equivalent channel itself is well defined (4 x 8)
    Rng rng(2);
    const StbcCode golden = builtin_code("golden");
    const RMatrix heq = equivalent_channel(golden, draw_channel(rng, 1, 2));
    CHECK(heq.rows() == 4);
    CHECK(heq.cols() == 8);

    CHECK_THROWS_AS(empirical_pattern(golden, ChannelModel{1, 42}, 10), UnderDeterminedError);
    // abba has 2*kappa = 4 = 2*n_r*T already at n_r = 1
    CHECK_NOTHROW(empirical_pattern(builtin_code("abba"), ChannelModel{1, 42}, 10));
}

TEST_CASE("empirical patterns of the built-ins") {
    CHECK(zeros_of(empirical_pattern(builtin_code("abba"), {2, 42}, 100).pattern) == kAbbaZeros);
    CHECK(zeros_of(empirical_pattern(builtin_code("silver"), {2, 42}, 100).pattern) ==
          kSilverZeros);
    CHECK(zeros_of(empirical_pattern(builtin_code("golden"), {2, 42}, 100).pattern) ==
          kGoldenZeros);
}

TEST_CASE("empirical pattern is channel independent") {
    for (const char* name : {"abba", "silver", "golden"}) {
        const StbcCode code = builtin_code(name);
        const PairSet ref = zeros_of(empirical_pattern(code, {2, 42}, 50).pattern);
        for (int n_r : {2, 4, 8})
            for (std::uint64_t seed = 1; seed <= 10; ++seed)
                CHECK(zeros_of(empirical_pattern(code, {n_r, seed * 7919}, 50).pattern) == ref);
    }
}

TEST_CASE("theorem-4 predicted patterns and soundness on the built-ins") {
    const ZeroPattern pa = predicted_pattern_theorem4(builtin_code("abba"));
    CHECK(zeros_of(pa) == kAbbaZeros);  // equals the empirical pattern

    const ZeroPattern ps = predicted_pattern_theorem4(builtin_code("silver"));
    CHECK(zeros_of(ps) ==
          PairSet{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});  // delta block only

    const ZeroPattern pg = predicted_pattern_theorem4(builtin_code("golden"));
    CHECK(zeros_of(pg) == PairSet{{0, 2}, {0, 3}, {1, 2}, {1, 3}});

    for (const char* name : {"abba", "silver", "golden"}) {
        const StbcCode code = builtin_code(name);
        CHECK(predicted_pattern_theorem4(code).subset_of(
            empirical_pattern(code, {2, 5}, 100).pattern));
    }
}

TEST_CASE("hrqf predictions are contained in the theorem-4 predictions") {
    // both use the same orthogonality notion, so the propagated patterns
    // coincide pair for pair
    for (const char* name : {"abba", "silver", "golden"}) {
        const StbcCode code = builtin_code(name);
        const ZeroPattern hq = hrqf_predicted_pattern(code);
        const ZeroPattern t4 = predicted_pattern_theorem4(code);
        CHECK(hq.subset_of(t4));
        CHECK(t4.subset_of(hq));
    }
}

TEST_CASE("prediction soundness on random synthetic codes") {
    Rng rng(555);
    const int dims[] = {2, 3};
    for (int rep = 0; rep < 50; ++rep) {
        const int n_t = dims[rep % 2];
        const int T = dims[(rep / 2) % 2];
        const StbcCode code = random_code(rng, n_t, T, (n_t * T) / 2);
        const ZeroPattern predicted = predicted_pattern_theorem4(code);
        const EmpiricalPattern emp = empirical_pattern(code, {n_t, static_cast<std::uint64_t>(1000 + rep)}, 50);
        CHECK(predicted.subset_of(emp.pattern));
    }
}

TEST_CASE("classification of the built-ins") {
    const ChannelModel ch{2, 42};

    const StbcCode abba = builtin_code("abba");
    const ClassificationReport ra =
        classify(abba, empirical_pattern(abba, ch, 100).pattern, ch);
    CHECK(ra.family == Family::g_group);
    CHECK(ra.witness.sizes == std::vector<int>{2, 2});
    CHECK(ra.witness.describe() == "{1,2},{3,4}");
    CHECK_FALSE(ra.bo_params.has_value());

    const StbcCode silver = builtin_code("silver");
    const ClassificationReport rs =
        classify(silver, empirical_pattern(silver, ch, 100).pattern, ch);
    CHECK(rs.family == Family::block_orthogonal);
    REQUIRE(rs.bo_params.has_value());
    CHECK(rs.bo_params->Gamma == 2);
    CHECK(rs.bo_params->k == 4);
    CHECK(rs.bo_params->gamma == 1);
    REQUIRE(rs.fast.has_value());
    CHECK(rs.fast->L == 4);
    CHECK(rs.fast->groups.sizes == std::vector<int>{1, 1, 1, 1});

    const StbcCode golden = builtin_code("golden");
    const ClassificationReport rg =
        classify(golden, empirical_pattern(golden, ch, 100).pattern, ch);
    CHECK(rg.family == Family::block_orthogonal);
    REQUIRE(rg.bo_params.has_value());
    CHECK(rg.bo_params->Gamma == 2);
    CHECK(rg.bo_params->k == 2);
    CHECK(rg.bo_params->gamma == 2);
    REQUIRE(rg.fast.has_value());
    CHECK(rg.fast->L == 4);
    CHECK(rg.fast->groups.sizes == std::vector<int>{2, 2});
}

TEST_CASE("a silver/abba direct sum classifies as fast-group decodable") {
    // disjoint antenna/time support makes the two halves mutually HR
    // orthogonal; the silver half keeps its conditioned structure inside its
    // group while the abba half splits into two groups of its own
    const StbcCode silver = builtin_code("silver");
    const StbcCode abba = builtin_code("abba");
    std::vector<CMatrix> weights;
    for (const CMatrix& a : silver.weights) {
        CMatrix w = CMatrix::Zero(4, 4);
        w.block(0, 0, 2, 2) = a;
        weights.push_back(w);
    }
    for (const CMatrix& a : abba.weights) {
        CMatrix w = CMatrix::Zero(4, 4);
        w.block(2, 2, 2, 2) = a;
        weights.push_back(w);
    }
    const StbcCode sum = make_code("silver+abba", 4, 4, 6, std::move(weights));
    CHECK_FALSE(sum.rank_warning);

    const ChannelModel ch{2, 42};
    const EmpiricalPattern emp = empirical_pattern(sum, ch, 100);
    const ClassificationReport rep = classify(sum, emp.pattern, ch);
    CHECK(rep.family == Family::fast_group_decodable);
    CHECK(rep.witness.sizes == std::vector<int>{8, 2, 2});
    REQUIRE(rep.group_fast.size() == 3);
    REQUIRE(rep.group_fast[0].has_value());
    CHECK(rep.group_fast[0]->L == 4);
    CHECK(rep.group_fast[0]->groups.sizes == std::vector<int>{1, 1, 1, 1});
    CHECK_FALSE(rep.group_fast[1].has_value());
    CHECK_FALSE(rep.group_fast[2].has_value());

    // 2^8 * 2^2 for the conditioned silver group plus 2^4 per abba group
    const FsdComplexity fc = fsd_complexity(rep, 4, sum.kappa);
    CHECK(fc.count == doctest::Approx(1024.0 + 16.0 + 16.0));
    CHECK(fc.exhaustive_exponent == doctest::Approx(24.0));
}

TEST_CASE("unstructured codes classify as unstructured, not block orthogonal") {
    // a dense R satisfies the degenerate (2k,1,1) reading of the parameter
    // conditions; the fitter must reject k = 1
    Rng rng(808);
    const StbcCode code = random_code(rng, 2, 2, 4);
    const ChannelModel ch{2, 42};
    const EmpiricalPattern emp = empirical_pattern(code, ch, 50);
    CHECK(emp.pattern.zero_count() == 0);
    const ClassificationReport rep = classify(code, emp.pattern, ch);
    CHECK(rep.family == Family::unstructured);
    CHECK_FALSE(rep.bo_params.has_value());
    CHECK(fsd_complexity(rep, 4, 4).exponent == doctest::Approx(16.0));
}

TEST_CASE("fsd complexity formulas") {
    const ChannelModel ch{2, 42};
    const StbcCode abba = builtin_code("abba");
    const ClassificationReport ra =
        classify(abba, empirical_pattern(abba, ch, 100).pattern, ch);
    const FsdComplexity fa = fsd_complexity(ra, 4, abba.kappa);
    CHECK(fa.count == doctest::Approx(32.0));  // 2 * 2^4
    CHECK(fa.exponent == doctest::Approx(5.0));
    CHECK(fa.group_exponents == std::vector<double>{4.0, 4.0});
    CHECK(fa.exhaustive_exponent == doctest::Approx(8.0));

    const StbcCode silver = builtin_code("silver");
    const ClassificationReport rs =
        classify(silver, empirical_pattern(silver, ch, 100).pattern, ch);
    const FsdComplexity fs = fsd_complexity(rs, 4, silver.kappa);
    CHECK(fs.exponent == doctest::Approx(10.0));  // 8 + 2 vs exhaustive 16
    CHECK(fs.exhaustive_exponent == doctest::Approx(16.0));

    ClassificationReport unstructured;
    unstructured.family = Family::unstructured;
    for (int q : {2, 4, 6})
        for (int kappa : {2, 4})
            CHECK(fsd_complexity(unstructured, q, kappa).exponent ==
                  doctest::Approx(static_cast<double>(q) * kappa));
}

TEST_CASE("hrqf comparison lists") {
    const ChannelModel ch{2, 42};

    const StbcCode abba = builtin_code("abba");
    CHECK(compare_hrqf(abba, empirical_pattern(abba, ch, 100).pattern).empty());

    const StbcCode golden = builtin_code("golden");
    const auto mg = compare_hrqf(golden, empirical_pattern(golden, ch, 100).pattern);
    REQUIRE(mg.size() == 4);
    for (const Mismatch& m : mg) {
        CHECK(m.direction == MismatchDirection::hrqf_incomplete);
        CHECK(m.i >= 5);  // all inside the second diagonal block
    }

    const StbcCode silver = builtin_code("silver");
    const auto ms = compare_hrqf(silver, empirical_pattern(silver, ch, 100).pattern);
    CHECK(ms.size() == 6);
    for (const Mismatch& m : ms) CHECK(m.direction == MismatchDirection::hrqf_incomplete);
}

TEST_CASE("zero structure is not equivariant under symbol permutations") {
    // move Re(s3) to the front of the silver code: the permuted image of the
    // old mask is not the recomputed mask
    const StbcCode silver = builtin_code("silver");
    const SymbolOrdering sigma{{4, 0, 1, 2, 3, 5, 6, 7}};
    const StbcCode moved = apply_ordering(silver, sigma);

    const ZeroPattern before = empirical_pattern(silver, {2, 42}, 50).pattern;
    const ZeroPattern after = empirical_pattern(moved, {2, 42}, 50).pattern;

    // permuted image: new slot k carries old slot sigma.perm[k]
    PairSet image;
    std::vector<int> new_of_old(8);
    for (int k = 0; k < 8; ++k) new_of_old[sigma.perm[k]] = k;
    for (auto [i, j] : zeros_of(before)) {
        int a = new_of_old[i], b = new_of_old[j];
        image.insert({std::min(a, b), std::max(a, b)});
    }
    CHECK(zeros_of(after) != image);
    // old zero (1,2) [A1 orthogonal to A2] maps to new (2,3), which is now
    // contaminated by the projection onto the moved column
    CHECK(image.count({1, 2}) == 1);
    CHECK(zeros_of(after).count({1, 2}) == 0);
}

TEST_CASE("row permutations leave the zero structure unchanged") {
    Rng rng(77);
    for (const char* name : {"abba", "silver"}) {
        const StbcCode code = builtin_code(name);
        const int n = code.num_real_symbols();
        for (int rep = 0; rep < 20; ++rep) {
            const CMatrix h = draw_channel(rng, 2, code.n_t);
            const RMatrix heq = equivalent_channel(code, h);
            std::vector<int> rows(heq.rows());
            std::iota(rows.begin(), rows.end(), 0);
            for (int k = static_cast<int>(rows.size()) - 1; k > 0; --k)
                std::swap(rows[k], rows[rng.uniform_below(k + 1)]);
            RMatrix permuted(heq.rows(), heq.cols());
            for (size_t r = 0; r < rows.size(); ++r) permuted.row(r) = heq.row(rows[r]);

            const RMatrix r1 = gram_schmidt_qr(heq).R;
            const RMatrix r2 = gram_schmidt_qr(permuted).R;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const bool z1 = std::abs(r1(i, j)) < 1e-9 * r1.norm();
                    const bool z2 = std::abs(r2(i, j)) < 1e-9 * r2.norm();
                    CHECK(z1 == z2);
                }
        }
    }
}

TEST_CASE("exhaustive ordering search recovers the scrambled ABBA structure") {
    const StbcCode abba = builtin_code("abba");
    const SymbolOrdering scramble{{0, 2, 1, 3}};
    const StbcCode scrambled = apply_ordering(abba, scramble);

    const ChannelModel ch{2, 42};
    // scrambling destroys the 2-group structure
    const ClassificationReport scrambled_rep =
        classify(scrambled, empirical_pattern(scrambled, ch, 50).pattern, ch);
    CHECK(scrambled_rep.witness.groups() == 1);
    CHECK(fsd_complexity(scrambled_rep, 4, 2).exponent == doctest::Approx(6.0));

    const OrderingSearchResult res = ordering_search(scrambled, ch, 4);
    CHECK(res.exponent_after == doctest::Approx(5.0));  // canonical complexity recovered
    CHECK(res.exponent_before == doctest::Approx(6.0));
    CHECK(res.report.family == Family::g_group);
    // the trace never increases
    CHECK(std::is_sorted(res.objective_trace.rbegin(), res.objective_trace.rend()));
}

TEST_CASE("identity is returned when the canonical ordering is already optimal") {
    const ChannelModel ch{2, 42};
    const OrderingSearchResult res = ordering_search(builtin_code("abba"), ch, 4);
    CHECK(res.ordering.perm == std::vector<int>{0, 1, 2, 3});
    CHECK(res.exponent_after == doctest::Approx(5.0));
    CHECK(res.count_after == doctest::Approx(res.count_before));
}

TEST_CASE("golden canonical ordering is among the minimizers over all 8! orderings") {
    const ChannelModel ch{2, 42};
    const OrderingSearchResult res = ordering_search(builtin_code("golden"), ch, 4);
    // identity is lexicographically first, so if it attains the optimum the
    // search returns it
    CHECK(res.ordering.perm == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(res.exponent_after == doctest::Approx(12.0));
}

TEST_CASE("search overflow guard and heuristic mode") {
    Rng rng(321);
    const StbcCode big = random_code(rng, 2, 4, 7);  // 2*kappa = 14
    const ChannelModel ch{4, 42};
    CHECK_THROWS_AS(ordering_search(big, ch, 4), SearchOverflowError);

    const StbcCode big16 = random_code(rng, 2, 4, 8);  // 2*kappa = 16
    const OrderingSearchResult res = ordering_search(big16, ch, 4, /*heuristic=*/true);
    CHECK(std::is_sorted(res.objective_trace.rbegin(), res.objective_trace.rend()));
    CHECK(res.count_after <= std::exp2(2.0 * 16));
}

TEST_CASE("heuristic groups a shuffled multi-group code") {
    // direct sum of two ABBA copies on 4 antennas: 4-group decodable once
    // grouped correctly
    const StbcCode abba = builtin_code("abba");
    std::vector<CMatrix> weights;
    for (int half = 0; half < 2; ++half)
        for (int l = 0; l < 4; ++l) {
            CMatrix a = CMatrix::Zero(4, 4);
            a.block(2 * half, 2 * half, 2, 2) = abba.weights[l];
            weights.push_back(a);
        }
    StbcCode stacked = make_code("stacked", 4, 4, 4, std::move(weights));
    // interleave the halves
    const SymbolOrdering shuffle{{0, 4, 1, 5, 2, 6, 3, 7}};
    const StbcCode shuffled = apply_ordering(stacked, shuffle);

    const ChannelModel ch{4, 42};
    const OrderingSearchResult res = ordering_search(shuffled, ch, 4, /*heuristic=*/true);
    CHECK(res.report.witness.groups() >= 2);
    CHECK(res.count_after < res.count_before);
}
