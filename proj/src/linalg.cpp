#include "stbc/linalg.hpp"

#include <cmath>

namespace stbc {

bool all_finite(const CMatrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag()))
                return false;
    return true;
}

bool all_finite(const RMatrix& a) {
    return a.allFinite();
}

Eigen::Vector2d tilde_vec(cplx x) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw std::invalid_argument("tilde_vec: non-finite input");
    return {x.real(), x.imag()};
}

RVector tilde_vec(const CVector& x) {
    RVector out(2 * x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const Eigen::Vector2d p = tilde_vec(x(k));
        out(2 * k) = p(0);
        out(2 * k + 1) = p(1);
    }
    return out;
}

Eigen::Vector2d barbar(cplx x) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw std::invalid_argument("barbar: non-finite input");
    return {-x.imag(), x.real()};
}

RMatrix check_realify(const CMatrix& a) {
    if (!all_finite(a))
        throw std::invalid_argument("check_realify: non-finite input");
    RMatrix out(2 * a.rows(), 2 * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double re = a(i, j).real();
            const double im = a(i, j).imag();
            out(2 * i, 2 * j) = re;
            out(2 * i, 2 * j + 1) = -im;
            out(2 * i + 1, 2 * j) = im;
            out(2 * i + 1, 2 * j + 1) = re;
        }
    }
    return out;
}

double trace_form(cplx x) {
    return 2.0 * x.real();
}

QRFactors gram_schmidt_qr(const RMatrix& h, double rank_tol) {
    if (h.rows() < h.cols())
        throw std::invalid_argument("gram_schmidt_qr: need rows >= cols");
    if (!all_finite(h))
        throw std::invalid_argument("gram_schmidt_qr: non-finite input");

    const Eigen::Index n = h.cols();
    RMatrix q = h;
    RMatrix r = RMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double col_norm = h.col(i).norm();
        for (Eigen::Index j = 0; j < i; ++j) {
            const double proj = q.col(j).dot(q.col(i));
            r(j, i) = proj;
            q.col(i) -= proj * q.col(j);
        }
        const double rii = q.col(i).norm();
        if (rii <= rank_tol * col_norm)
            throw RankDeficientError("gram_schmidt_qr: column " + std::to_string(i + 1) +
                                     " numerically dependent on earlier columns");
        r(i, i) = rii;
        q.col(i) /= rii;
    }
    return {std::move(q), std::move(r)};
}

RMatrix gram_matrix_M(const CMatrix& h) {
    if (!all_finite(h))
        throw std::invalid_argument("gram_matrix_M: non-finite input");
    const Eigen::Index nt = h.cols();
    RMatrix m(2 * nt, 2 * nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
        for (Eigen::Index j = i; j < nt; ++j) {
            cplx d = 0.0;
            for (Eigen::Index n = 0; n < h.rows(); ++n)
                d += h(n, i) * std::conj(h(n, j));
            const double re = d.real();
            // diagonal blocks: the cross entry is a structural zero
            const double im = (i == j) ? 0.0 : d.imag();
            m(2 * i, 2 * j) = re;
            m(2 * i + 1, 2 * j + 1) = re;
            m(2 * i, 2 * j + 1) = im;
            m(2 * i + 1, 2 * j) = -im;
            if (i != j) {
                m(2 * j, 2 * i) = re;
                m(2 * j + 1, 2 * i + 1) = re;
                m(2 * j, 2 * i + 1) = -im;
                m(2 * j + 1, 2 * i) = im;
            }
        }
    }
    return m;
}

}  // namespace stbc
