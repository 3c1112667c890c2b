// Quadratic-manifold encoder/decoder: greedy basis selection from snapshot
// data and the ridge fit of the quadratic correction.
#pragma once

#include "qmng/tensor.hpp"
#include "qmng/types.hpp"

#include <vector>

namespace qmng {

/// Trained quadratic manifold: reference point s0, orthonormal basis V and
/// quadratic correction W with V^T W = 0. decode(theta) = s0 + V theta +
/// W h(theta) with h the kron_features map.
struct QuadraticManifold {
    VectorXd s0;
    MatrixXd V;   // N x n, orthonormal columns
    MatrixXd W;   // N x n^2, kron_features column ordering
    double gamma = 0.0;

    Index full_dim() const { return V.rows(); }
    Index reduced_dim() const { return V.cols(); }
};

/// Snapshot matrix with parameter-major column ordering: all K stored times
/// of parameter 1 first, then parameter 2, and so on.
struct SnapshotMatrix {
    MatrixXd data;                 // N x (K * M')
    std::vector<double> times;     // K entries
    std::vector<double> params;    // M' entries
    Grid grid;
    ModelKind kind = ModelKind::burgers;

    Index steps() const { return static_cast<Index>(times.size()); }
    Index param_count() const { return static_cast<Index>(params.size()); }
    Eigen::Ref<const MatrixXd> trajectory(Index p) const {
        return data.middleCols(p * steps(), steps());
    }
};

/// Orthonormal candidate basis for the greedy selection: the leading left
/// singular vectors of a (centered) data matrix plus their coordinates.
struct CandidatePool {
    MatrixXd basis;            // N x l
    VectorXd singular_values;  // l
    MatrixXd coords;           // l x M, basis^T * data
    Index data_rank = 0;       // numerical rank of the data matrix
};

struct TrainOptions {
    Index greedy_subsample = 500;  // max training columns per greedy score
};

/// Leading left singular vectors of `matrix` (at most l, capped at the
/// numerical rank), via the Gram matrix of the smaller side.
CandidatePool build_candidate_pool(const MatrixXd& matrix, Index l);

/// Greedy selection of n orthonormal columns from the first l left singular
/// vectors of the centered data; each candidate is scored by refitting the
/// quadratic correction on a deterministic column subsample. Ties break to
/// the lowest candidate index. l == n reduces to plain POD.
MatrixXd greedy_basis(const MatrixXd& centered, Index n, Index l, double gamma,
                      const TrainOptions& opts = {});

/// Same selection, reusing a prebuilt pool (pool.coords must correspond to
/// `centered`). Returns the chosen candidate indices in ascending order.
std::vector<Index> greedy_select(const CandidatePool& pool, const MatrixXd& centered,
                                 Index n, Index l, double gamma,
                                 const TrainOptions& opts = {});

/// Ridge fit of the quadratic correction:
///   W = argmin || W h(V^T (S - s0 1^T)) - (I - V V^T)(S - s0 1^T) ||_F^2
///       + gamma ||W||_F^2,
/// solved via normal equations with a shared Cholesky factorization; gamma=0
/// falls back to the minimal-norm solution through an eigenvalue pseudo-
/// inverse. The projected target makes V^T W = 0.
MatrixXd fit_correction(const MatrixXd& S, const MatrixXd& V, const VectorXd& s0,
                        double gamma);

/// Full training pipeline: mean reference point, greedy basis from the first
/// l singular vectors, ridge-fitted correction.
QuadraticManifold train_manifold(const MatrixXd& data, Index n, double gamma,
                                 Index l, const TrainOptions& opts = {});
QuadraticManifold train_manifold(const SnapshotMatrix& snapshots, Index n,
                                 double gamma, Index l,
                                 const TrainOptions& opts = {});

/// Training with a shared candidate pool (pool built from data centered at
/// `s0`); used when sweeping several reduced dimensions over one data set.
QuadraticManifold train_from_pool(const CandidatePool& pool, const MatrixXd& data,
                                  const VectorXd& s0, Index n, double gamma,
                                  Index l, const TrainOptions& opts = {});

VectorXd encode(const QuadraticManifold& m, const VectorXd& s);
VectorXd decode(const QuadraticManifold& m, const VectorXd& theta);

/// Column-wise encode/decode of whole state batches.
MatrixXd encode_columns(const QuadraticManifold& m, const MatrixXd& states);
MatrixXd decode_columns(const QuadraticManifold& m, const MatrixXd& thetas);

struct ManifoldInvariants {
    double orthonormality_defect;  // ||V^T V - I||_F
    double cross_defect;           // ||V^T W||_F
};
ManifoldInvariants manifold_invariants(const QuadraticManifold& m);

/// Throws if the trained-manifold invariants are violated.
void validate_manifold(const QuadraticManifold& m);

}  // namespace qmng
