// Vector-valued reduced dynamics on the full-model grid: residual-minimizing
// least-squares step, the precomputed online-efficient path for linear
// right-hand sides, and the constant-test-space baseline.
#pragma once

#include "qmng/full_models.hpp"
#include "qmng/manifold.hpp"
#include "qmng/tensor.hpp"

#include <cstddef>
#include <functional>

namespace qmng {

/// K(theta) = W * grad_features(theta), assembled column-wise without
/// materializing the n^2 x n gradient.
MatrixXd k_map(const QuadraticManifold& m, const VectorXd& theta);

/// J(theta) = V + K(theta), the decoder Jacobian.
MatrixXd assemble_jacobian(const QuadraticManifold& m, const VectorXd& theta);

/// Smallest singular value of J(theta), from the true J^T J.
double jacobian_min_singular_value(const QuadraticManifold& m, const VectorXd& theta);

using FullRhs = std::function<VectorXd(const VectorXd&)>;

/// Unique minimizer of ||J(theta) td - f(decode(theta))||_2, solved through
/// the SPD normal equations (I + K^T K) td = J^T f. With `check_invariants`
/// the true J^T J is verified to have sigma_min >= 0.99 and a diagnostic
/// error is raised otherwise.
VectorXd qmng_rhs(const QuadraticManifold& m, const FullRhs& f, const VectorXd& theta,
                  bool check_invariants = true);

/// Offline tensors for the online-efficient linear path. Field order matches
/// the serialized layout.
struct PrecomputedOperators {
    Index n = 0;
    Tensor4 gram;        // theta . gram . theta = J(theta)^T J(theta) - I
    VectorXd s0_hat;     // V^T (A s0)
    MatrixXd a_hat;      // V^T A V
    MatrixXd h_hat;      // V^T A W,  n x n^2
    MatrixXd s_op;       // n x n: (theta . s_op) = K(theta)^T (A s0)
    Tensor3 a_op;        // n x n x n: (theta . a_op) theta = K^T A V theta
    Tensor3 h_op;        // n x n x n^2: (theta . h_op) h(theta) = K^T A W h(theta)
};

/// System-matrix-independent part of the precompute: the stacked K columns
/// and the four-way gram tensor. Reused across parameter-dependent system
/// matrices.
struct KroneckerCache {
    MatrixXd k_mat;  // N x n^2, column c n + k holds K_{. c k}
    Tensor4 gram;
};
KroneckerCache build_kronecker_cache(const QuadraticManifold& m);

/// Assembles all seven offline objects. Throws when the tensor storage would
/// exceed `memory_budget_bytes` (the two n^4 tensors dominate), reporting the
/// required byte count.
PrecomputedOperators precompute_linear(const QuadraticManifold& m,
                                       const SystemMatrix& a,
                                       std::size_t memory_budget_bytes =
                                           std::size_t(2) << 30);
PrecomputedOperators precompute_linear(const QuadraticManifold& m,
                                       const SystemMatrix& a,
                                       const KroneckerCache& cache,
                                       std::size_t memory_budget_bytes =
                                           std::size_t(2) << 30);

/// Reusable buffers for the O(n^4) online step.
struct LinearReducedWorkspace {
    VectorXd features;     // n^2
    VectorXd acc_gram;     // n^3
    VectorXd acc_quad;     // n^2  (theta . a_op, row-major n x n)
    VectorXd acc_cubic;    // n^3  (theta . h_op, row-major n x n^2)
    MatrixXd lhs;          // n x n
    VectorXd rhs;          // n
};

/// One online evaluation of the precomputed normal equations
///   (I + theta . gram . theta) td = f_hat(theta),
/// solved with a Cholesky factorization; no quantity of size N is touched.
VectorXd linear_reduced_rhs(const PrecomputedOperators& ops, const VectorXd& theta);
VectorXd linear_reduced_rhs(const PrecomputedOperators& ops, const VectorXd& theta,
                            LinearReducedWorkspace& work);

/// Baseline dynamics with the constant test space spanned by V:
/// td = V^T f(decode(theta)).
VectorXd constant_testspace_rhs(const QuadraticManifold& m, const FullRhs& f,
                                const VectorXd& theta);

/// Same baseline for linear right-hand sides, evaluated from the
/// precomputed constants: td = s0_hat + A_hat theta + H_hat h(theta).
VectorXd constant_testspace_linear_rhs(const PrecomputedOperators& ops,
                                       const VectorXd& theta);

enum class Scheme { euler, rk4 };
const char* scheme_name(Scheme s);

struct ReducedTrajectory {
    MatrixXd states;             // n x (steps_completed + 1)
    std::vector<double> times;
    double dt = 0.0;
    Scheme scheme = Scheme::rk4;
    double mu = 0.0;
    bool unstable = false;
    Index steps_completed = 0;
    double online_seconds = 0.0;
    Index rank_deficiency_count = 0;
};

using ReducedRhs = std::function<VectorXd(const VectorXd&, double)>;

/// Explicit time stepping of a reduced right-hand side. Divergence
/// (non-finite state or ||theta|| > 1e12) truncates the trajectory and sets
/// the unstable flag; `on_step` runs before each step (used for collocation
/// resampling). Wall-clock time of the loop is recorded.
ReducedTrajectory integrate_reduced(const ReducedRhs& rhs, const VectorXd& theta0,
                                    double dt, Index steps, Scheme scheme,
                                    const std::function<void(Index)>& on_step = {});

}  // namespace qmng
