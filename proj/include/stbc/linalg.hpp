#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace stbc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// A Gram-Schmidt step collapsed below the rank tolerance. For random channel
// draws this signals a degenerate draw; callers redraw.
struct RankDeficientError : std::runtime_error {
    explicit RankDeficientError(const std::string& msg) : std::runtime_error(msg) {}
};

bool all_finite(const CMatrix& a);
bool all_finite(const RMatrix& a);

// x -> [Re(x), Im(x)]
Eigen::Vector2d tilde_vec(cplx x);

// Elementwise extension, interleaved: [Re(x1), Im(x1), Re(x2), Im(x2), ...]
RVector tilde_vec(const CVector& x);

// x -> [-Im(x), Re(x)]; identical to tilde_vec(i*x)
Eigen::Vector2d barbar(cplx x);

// Entrywise replacement by the 2x2 block [[Re,-Im],[Im,Re]].
// Multiplicative on conformable matrices: check(A*B) = check(A)*check(B),
// and check(A^H) = check(A)^t.
RMatrix check_realify(const CMatrix& a);

// trace form of Q(i)/Q: 2*Re(x)
double trace_form(cplx x);

struct QRFactors {
    RMatrix Q;  // m x n, orthonormal columns
    RMatrix R;  // n x n, upper triangular, positive diagonal
};

// Modified Gram-Schmidt. Column i is reduced against q_1..q_{i-1} and
// normalized; R(i,i) = ||r_i|| > 0, so the factorization is the unique
// positive-diagonal QR of a full-column-rank input. Throws
// RankDeficientError when ||r_i|| <= rank_tol * ||h_i||.
QRFactors gram_schmidt_qr(const RMatrix& h, double rank_tol = 1e-12);

// M = check(H)^t * check(H), assembled from the complex column inner
// products d_ij = sum_n H(n,i) * conj(H(n,j)) so the structural identities
// hold exactly (0-based blocks):
//   M(2i,2i)   = M(2i+1,2i+1)          M(2i,2i+1) = 0
//   M(2i,2j)   = M(2i+1,2j+1)          M(2i+1,2j) = -M(2i,2j+1)   (j > i)
RMatrix gram_matrix_M(const CMatrix& h);

}  // namespace stbc
