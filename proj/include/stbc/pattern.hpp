#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace stbc {

// Zero structure of the upper-triangular R factor: a boolean mask over the
// strictly-upper entries, true = structurally zero. Diagonal entries are
// never zero and the lower triangle is implied zero.
class ZeroPattern {
public:
    ZeroPattern() = default;
    explicit ZeroPattern(int dim) : dim_(dim), mask_(dim * (dim - 1) / 2, 0) {}

    int dim() const { return dim_; }

    // strict upper triangle, 0-based, i < j
    bool zero(int i, int j) const { return mask_[index(i, j)] != 0; }
    void set_zero(int i, int j, bool v = true) { mask_[index(i, j)] = v ? 1 : 0; }

    int zero_count() const;

    // true when every zero of this pattern is also zero in `other`
    bool subset_of(const ZeroPattern& other) const;

    // '#' diagonal, '0' structural zero, 'x' generic entry
    std::string ascii() const;

    // {"dim": n, "zeros": [[i, j], ...]} with 1-based indices
    nlohmann::json to_json() const;

    bool operator==(const ZeroPattern& other) const {
        return dim_ == other.dim_ && mask_ == other.mask_;
    }

private:
    int index(int i, int j) const;

    int dim_ = 0;
    std::vector<unsigned char> mask_;
};

// Zeros provable from pairwise column orthogonality via the Gram-Schmidt
// induction: R_ij (i<j) is zero when columns i and j are orthogonal and for
// every k < i either R_ki or R_kj is already proven zero.
ZeroPattern propagate_orthogonality(const std::vector<std::vector<bool>>& orthogonal);

}  // namespace stbc
