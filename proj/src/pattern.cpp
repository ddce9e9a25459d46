#include "stbc/pattern.hpp"

#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace stbc {

int ZeroPattern::index(int i, int j) const {
    if (i < 0 || j <= i || j >= dim_)
        throw std::out_of_range("ZeroPattern: need 0 <= i < j < dim");
    // row-major packing of the strict upper triangle
    return i * (2 * dim_ - i - 1) / 2 + (j - i - 1);
}

int ZeroPattern::zero_count() const {
    return std::accumulate(mask_.begin(), mask_.end(), 0);
}

bool ZeroPattern::subset_of(const ZeroPattern& other) const {
    if (dim_ != other.dim_) return false;
    for (size_t k = 0; k < mask_.size(); ++k)
        if (mask_[k] && !other.mask_[k]) return false;
    return true;
}

std::string ZeroPattern::ascii() const {
    std::string out;
    out.reserve((dim_ + 1) * dim_);
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            if (i == j)
                out += '#';
            else if (j < i)
                out += '0';
            else
                out += zero(i, j) ? '0' : 'x';
        }
        out += '\n';
    }
    return out;
}

nlohmann::json ZeroPattern::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    nlohmann::json zeros = nlohmann::json::array();
    for (int i = 0; i < dim_; ++i)
        for (int jj = i + 1; jj < dim_; ++jj)
            if (zero(i, jj)) zeros.push_back({i + 1, jj + 1});
    j["zeros"] = std::move(zeros);
    return j;
}

ZeroPattern propagate_orthogonality(const std::vector<std::vector<bool>>& orthogonal) {
    const int n = static_cast<int>(orthogonal.size());
    ZeroPattern p(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (!orthogonal[i][j]) continue;
            bool provable = true;
            for (int k = 0; k < i; ++k) {
                if (!p.zero(k, i) && !p.zero(k, j)) {
                    provable = false;
                    break;
                }
            }
            p.set_zero(i, j, provable);
        }
    }
    return p;
}

}  // namespace stbc
