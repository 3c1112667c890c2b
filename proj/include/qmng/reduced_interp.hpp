// Interpolated reduced model: periodic cubic splines over the manifold
// columns give a decoder that can be evaluated at collocation points
// decoupled from the full-model grid.
#pragma once

#include "qmng/manifold.hpp"
#include "qmng/reduced_vector.hpp"
#include "qmng/types.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace qmng {

/// Periodic cubic splines fitted per column of [s0 | V | W] over a 1-D
/// equidistant grid. Values and the first two derivatives of every column
/// evaluate in O(1) per point; grid nodes reproduce the stored values.
class SplineBasis {
public:
    SplineBasis(const QuadraticManifold& m, const Grid& grid);

    Index columns() const { return coef_a_.cols(); }  // 1 + n + n^2
    Index reduced_dim() const { return n_; }
    const Grid& grid() const { return grid_; }

    /// Point-batch evaluation table; rows are points, columns follow the
    /// [s0 | V | W] layout. Derivative blocks are filled up to `max_deriv`.
    struct Table {
        MatrixXd vals;  // m x C
        MatrixXd d1;
        MatrixXd d2;
        std::vector<double> points;
    };
    Table evaluate(std::span<const double> points, int max_deriv = 2) const;

    /// All-columns evaluation at one point (periodic wrap applied).
    void eval_point(double x, VectorXd& vals, VectorXd* d1 = nullptr,
                    VectorXd* d2 = nullptr) const;

private:
    void locate(double x, Index& cell, double& t) const;

    Grid grid_;
    Index n_ = 0;
    // cubic coefficients, cells x C each (one contiguous cell column per
    // interpolated column); value on cell i at local offset t is
    // a + t (b + t (c + t d))
    MatrixXd coef_a_, coef_b_, coef_c_, coef_d_;
};

enum class CollocationStrategy { equidistant, uniform_fixed, uniform_resampled };
const char* strategy_name(CollocationStrategy s);
CollocationStrategy strategy_from_name(const std::string& name);

struct CollocationSet {
    std::vector<double> points;
    CollocationStrategy strategy = CollocationStrategy::equidistant;
    std::uint64_t seed = 0;
};

/// Equidistant or seeded-uniform collocation points in the 1-D domain.
/// Identical (strategy, seed, m) always produce identical sets.
CollocationSet sample_collocation(const Grid& grid, Index m,
                                  CollocationStrategy strategy, std::uint64_t seed);

/// Pointwise PDE right-hand side f(x, u, u_x, u_xx; mu). Derivative orders
/// beyond 2 are rejected by the assembly routines.
struct PointwiseRhs {
    int max_derivative_order = 2;
    std::function<double(double x, double u, double ux, double uxx, double mu)> eval;

    static PointwiseRhs burgers(double alpha);
};

/// Batch Jacobian at the collocation points: J = V_xi + W_xi grad_h(theta).
MatrixXd collocation_jacobian(const SplineBasis::Table& table, Index n,
                              const VectorXd& theta);
MatrixXd collocation_jacobian(const SplineBasis& basis, const VectorXd& theta,
                              std::span<const double> xi);

/// Batch right-hand side: u, u_x, u_xx from the spline table, fed pointwise
/// into the PDE form.
VectorXd collocation_rhs(const SplineBasis::Table& table, Index n,
                         const VectorXd& theta, double mu, const PointwiseRhs& pde);
VectorXd collocation_rhs(const SplineBasis& basis, const VectorXd& theta,
                         std::span<const double> xi, double mu,
                         const PointwiseRhs& pde);

struct CollocationSolve {
    VectorXd theta_dot;
    Index effective_rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm least-squares solve of J_xi td = f_xi with the singular-value
/// cutoff rcond * sigma_max; a truncated solution is returned and flagged
/// when the effective rank drops below n.
CollocationSolve qmng_collocation_rhs(const SplineBasis& basis, const VectorXd& theta,
                                      std::span<const double> xi, double mu,
                                      const PointwiseRhs& pde, double rcond = 1e-10);
CollocationSolve qmng_collocation_rhs(const SplineBasis::Table& table, Index n,
                                      const VectorXd& theta, double mu,
                                      const PointwiseRhs& pde, double rcond = 1e-10);

/// Trajectory driver for the interpolated model: keeps the per-step
/// evaluation table, optionally resamples the collocation points each step,
/// and counts rank-deficient solves.
class InterpReducedModel {
public:
    struct Options {
        Index m = 0;
        CollocationStrategy strategy = CollocationStrategy::uniform_resampled;
        std::uint64_t seed = 0;
        double rcond = 1e-10;
    };

    InterpReducedModel(const SplineBasis& basis, PointwiseRhs pde, double mu,
                       Options opts);

    void begin_step(Index step);
    VectorXd rhs(const VectorXd& theta, double t);

    Index rank_deficiency_count() const { return rank_deficient_; }
    const std::vector<double>& points() const { return table_.points; }

private:
    void resample();

    const SplineBasis& basis_;
    PointwiseRhs pde_;
    double mu_;
    Options opts_;
    std::uint64_t rng_state_;
    SplineBasis::Table table_;
    Index rank_deficient_ = 0;
};

}  // namespace qmng
