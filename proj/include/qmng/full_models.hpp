// Full-order semi-discrete models for the three benchmark PDEs: periodic
// finite-difference right-hand sides, RK4 stepping, sparse system matrices
// for the linear models, and snapshot generation.
#pragma once

#include "qmng/manifold.hpp"
#include "qmng/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace qmng {

enum class Scale { desk, paper };

struct FullModelSpec {
    ModelKind kind = ModelKind::burgers;
    Grid grid;
    double t_end = 1.0;
    double dt = 1e-4;
    std::array<double, 2> param_domain{0.0, 1.0};
    std::vector<double> train_params;
    std::vector<double> test_params;
    Index snapshot_subsample = 1;

    // physics constants (§5 setups)
    double burgers_alpha = 0.005;
    double burgers_sigma = 0.005;
    double vlasov_sigma = 8e-3;
    double vlasov_x0 = -0.2;
    double vlasov_v0 = 0.0;
    double vlasov_alpha = 0.2;
    double vlasov_beta = 0.1;
    std::array<double, 2> wave_x0{2.0, 2.0};

    Index state_dim() const {
        return kind == ModelKind::wave2d ? 3 * grid.points() : grid.points();
    }
    bool is_linear() const { return kind != ModelKind::burgers; }
    Index total_steps() const { return static_cast<Index>(std::llround(t_end / dt)); }

    static FullModelSpec preset(ModelKind kind, Scale scale);
    /// Preset with a custom grid resolution (used for size sweeps and tests).
    static FullModelSpec wave2d(Index pts_per_axis, double t_end, double dt,
                                Index train_count, Index subsample);
    static FullModelSpec vlasov(Index pts_per_axis, double t_end, double dt,
                                Index train_count, Index subsample);
    static FullModelSpec burgers(Index pts, double t_end, double dt,
                                 Index train_count, Index subsample);
};

/// Wave system (rho, v1, v2) on a square periodic 2-D grid, second-order
/// central differences; linear in q, mu enters the initial condition only.
VectorXd wave_rhs(const Grid& grid, const VectorXd& q, double mu);

/// Vlasov advection on a periodic (x, v) grid, fourth-order central
/// differences; the potential gradient is evaluated analytically.
VectorXd vlasov_rhs(const FullModelSpec& spec, const VectorXd& q, double mu);

/// Viscous Burgers on a periodic 1-D grid: q .* D1 q + alpha * D2 q with a
/// fourth-order D1 and a second-order D2 stencil.
VectorXd burgers_rhs(const Grid& grid, const VectorXd& q, double alpha);

VectorXd model_rhs(const FullModelSpec& spec, const VectorXd& q, double mu);

VectorXd initial_condition(const FullModelSpec& spec, double mu);

using RhsFn = std::function<VectorXd(const VectorXd&, double)>;

/// Classical fourth-order Runge-Kutta update. Throws on non-finite stages.
VectorXd rk4_step(const RhsFn& f, const VectorXd& q, double t, double dt);

/// Sparse matrix in CSR form with A q identical to the stencil right-hand
/// side for the linear models.
struct SystemMatrix {
    Index rows = 0, cols = 0;
    std::vector<Index> row_ptr;
    std::vector<Index> col_idx;
    std::vector<double> vals;

    VectorXd apply(const VectorXd& q) const;
    MatrixXd apply(const MatrixXd& q) const;
};

/// Assembles A with A q == model_rhs(q) for wave2d and vlasov; rejects the
/// nonlinear Burgers model.
SystemMatrix assemble_system_matrix(const FullModelSpec& spec, double mu);

/// Integrates one trajectory per parameter with RK4 and stores every
/// `subsample`-th state (including t = 0) in parameter-major column order.
SnapshotMatrix generate_snapshots(const FullModelSpec& spec,
                                  std::span<const double> params, Index subsample);

}  // namespace qmng
