#include "qmng/tensor.hpp"

#include <stdexcept>
#include <string>

namespace qmng {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

[[noreturn]] void throw_mismatch(const char* op, Index expected, Index got) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch, expected " +
                                std::to_string(expected) + ", got " +
                                std::to_string(got));
}

void check_positive_dims(const char* what, Index a, Index b, Index c, Index d = 1) {
    if (a < 1 || b < 1 || c < 1 || d < 1) {
        throw std::invalid_argument(std::string(what) +
                                    ": dimensions must be positive");
    }
}

}  // namespace

Tensor3::Tensor3(Index d0, Index d1, Index d2) : d0_(d0), d1_(d1), d2_(d2) {
    check_positive_dims("Tensor3", d0, d1, d2);
    v_.assign(static_cast<std::size_t>(d0) * d1 * d2, 0.0);
}

void Tensor3::setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

Tensor4::Tensor4(Index d0, Index d1, Index d2, Index d3)
    : d0_(d0), d1_(d1), d2_(d2), d3_(d3) {
    check_positive_dims("Tensor4", d0, d1, d2, d3);
    v_.assign(static_cast<std::size_t>(d0) * d1 * d2 * d3, 0.0);
}

void Tensor4::setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

VectorXd kron_features(const VectorXd& theta) {
    const Index n = theta.size();
    if (n < 1) throw std::invalid_argument("kron_features: empty input");
    VectorXd out(n * n);
    for (Index i = 0; i < n; ++i) {
        out.segment(i * n, n) = theta(i) * theta;
    }
    return out;
}

MatrixXd grad_features(const VectorXd& theta) {
    const Index n = theta.size();
    if (n < 1) throw std::invalid_argument("grad_features: empty input");
    MatrixXd g = MatrixXd::Zero(n * n, n);
    // d(theta_i theta_j)/d theta_c = delta_ic theta_j + delta_jc theta_i
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            g(i * n + j, i) += theta(j);
            g(i * n + j, j) += theta(i);
        }
    }
    return g;
}

MatrixXd mode_last_contract(const Tensor3& T, const VectorXd& v) {
    if (v.size() != T.dim2()) throw_mismatch("mode_last_contract", T.dim2(), v.size());
    RowMajorMap flat(T.data(), T.dim0() * T.dim1(), T.dim2());
    VectorXd prod = flat * v;
    MatrixXd out(T.dim0(), T.dim1());
    for (Index i = 0; i < T.dim0(); ++i) {
        out.row(i) = prod.segment(i * T.dim1(), T.dim1()).transpose();
    }
    return out;
}

MatrixXd mode_first_contract(const VectorXd& v, const Tensor3& T) {
    if (v.size() != T.dim0()) throw_mismatch("mode_first_contract", T.dim0(), v.size());
    const Index slab = T.dim1() * T.dim2();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(slab);
    for (Index i = 0; i < T.dim0(); ++i) {
        acc += v(i) * Eigen::Map<const VectorXd>(T.data() + i * slab, slab);
    }
    MatrixXd out(T.dim1(), T.dim2());
    for (Index j = 0; j < T.dim1(); ++j) {
        out.row(j) = acc.segment(j * T.dim2(), T.dim2()).transpose();
    }
    return out;
}

Tensor3 mode_first_contract(const VectorXd& v, const Tensor4& T) {
    if (v.size() != T.dim0()) throw_mismatch("mode_first_contract", T.dim0(), v.size());
    Tensor3 out(T.dim1(), T.dim2(), T.dim3());
    const Index slab = out.size();
    Eigen::Map<VectorXd> acc(out.data(), slab);
    for (Index p = 0; p < T.dim0(); ++p) {
        acc += v(p) * Eigen::Map<const VectorXd>(T.data() + p * slab, slab);
    }
    return out;
}

MatrixXd bilinear_contract(const VectorXd& left, const Tensor4& T,
                           const VectorXd& right) {
    Tensor3 scratch;
    MatrixXd out;
    bilinear_contract(left, T, right, scratch, out);
    return out;
}

void bilinear_contract(const VectorXd& left, const Tensor4& T,
                       const VectorXd& right, Tensor3& scratch, MatrixXd& out) {
    if (left.size() != T.dim0()) throw_mismatch("bilinear_contract", T.dim0(), left.size());
    if (right.size() != T.dim3()) throw_mismatch("bilinear_contract", T.dim3(), right.size());
    const Index slab = T.dim1() * T.dim2() * T.dim3();
    if (scratch.dim0() != T.dim1() || scratch.dim1() != T.dim2() ||
        scratch.dim2() != T.dim3()) {
        scratch = Tensor3(T.dim1(), T.dim2(), T.dim3());
    } else {
        scratch.setZero();
    }
    Eigen::Map<VectorXd> acc(scratch.data(), slab);
    for (Index p = 0; p < T.dim0(); ++p) {
        acc += left(p) * Eigen::Map<const VectorXd>(T.data() + p * slab, slab);
    }
    RowMajorMap flat(scratch.data(), T.dim1() * T.dim2(), T.dim3());
    VectorXd prod = flat * right;
    out.resize(T.dim1(), T.dim2());
    for (Index j = 0; j < T.dim1(); ++j) {
        out.row(j) = prod.segment(j * T.dim2(), T.dim2()).transpose();
    }
}

}  // namespace qmng
