// Dense 3-way/4-way tensors and the quadratic feature-map kernels used by
// Jacobian assembly and the precomputed online path.
#pragma once

#include <Eigen/Dense>

#include <vector>

namespace qmng {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense 3-way tensor, flat row-major storage (first index slowest,
/// last index fastest).
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(Index d0, Index d1, Index d2);

    double& operator()(Index i, Index j, Index k) {
        return v_[(i * d1_ + j) * d2_ + k];
    }
    double operator()(Index i, Index j, Index k) const {
        return v_[(i * d1_ + j) * d2_ + k];
    }

    Index dim0() const { return d0_; }
    Index dim1() const { return d1_; }
    Index dim2() const { return d2_; }
    Index size() const { return static_cast<Index>(v_.size()); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    void setZero();

private:
    Index d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<double> v_;
};

/// Dense 4-way tensor, flat row-major storage.
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(Index d0, Index d1, Index d2, Index d3);

    double& operator()(Index i, Index j, Index k, Index l) {
        return v_[((i * d1_ + j) * d2_ + k) * d3_ + l];
    }
    double operator()(Index i, Index j, Index k, Index l) const {
        return v_[((i * d1_ + j) * d2_ + k) * d3_ + l];
    }

    Index dim0() const { return d0_; }
    Index dim1() const { return d1_; }
    Index dim2() const { return d2_; }
    Index dim3() const { return d3_; }
    Index size() const { return static_cast<Index>(v_.size()); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    void setZero();

private:
    Index d0_ = 0, d1_ = 0, d2_ = 0, d3_ = 0;
    std::vector<double> v_;
};

/// Quadratic feature map h(theta) = theta (x) theta in R^{n^2}.
/// Entry i*n+j holds theta_i * theta_j (duplicates retained).
VectorXd kron_features(const VectorXd& theta);

/// Gradient of kron_features: n^2 x n matrix whose column c is the partial
/// derivative of h with respect to theta_c.
MatrixXd grad_features(const VectorXd& theta);

/// [out]_{ij} = sum_k T_{ijk} v_k. Throws on dimension mismatch.
MatrixXd mode_last_contract(const Tensor3& T, const VectorXd& v);

/// [out]_{jk} = sum_i v_i T_{ijk}. Throws on dimension mismatch.
MatrixXd mode_first_contract(const VectorXd& v, const Tensor3& T);

/// [out]_{abq} = sum_p v_p T_{pabq}. Throws on dimension mismatch.
Tensor3 mode_first_contract(const VectorXd& v, const Tensor4& T);

/// [out]_{jk} = sum_{i,l} left_i T_{ijkl} right_l, evaluated as two
/// successive mode contractions (first index, then last index).
MatrixXd bilinear_contract(const VectorXd& left, const Tensor4& T,
                           const VectorXd& right);

/// Allocation-free variant for hot loops: `scratch` and `out` are resized
/// on first use and reused afterwards.
void bilinear_contract(const VectorXd& left, const Tensor4& T,
                       const VectorXd& right, Tensor3& scratch, MatrixXd& out);

}  // namespace qmng
