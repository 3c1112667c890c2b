#include "qmng/reduced_interp.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <stdexcept>

namespace qmng {

namespace {

// Cyclic tridiagonal solve (constant diagonal/off-diagonal) for the spline
// moments of many columns at once, via Sherman-Morrison on a Thomas sweep.
// rhs is C x N (one row per interpolated column); returns the moments C x N.
MatrixXd solve_cyclic_moments(const MatrixXd& rhs, double diag, double off) {
    const Index cells = rhs.cols();
    const double gamma = -diag;

    VectorXd t_diag = VectorXd::Constant(cells, diag);
    t_diag(0) = diag - gamma;
    t_diag(cells - 1) = diag - off * off / gamma;

    // shared forward-elimination coefficients
    VectorXd cp(cells), denom(cells);
    denom(0) = t_diag(0);
    cp(0) = off / denom(0);
    for (Index i = 1; i < cells; ++i) {
        denom(i) = t_diag(i) - off * cp(i - 1);
        cp(i) = off / denom(i);
    }

    auto thomas = [&](MatrixXd& d) {
        d.col(0) /= denom(0);
        for (Index i = 1; i < cells; ++i) {
            d.col(i) = (d.col(i) - off * d.col(i - 1)) / denom(i);
        }
        for (Index i = cells - 2; i >= 0; --i) {
            d.col(i) -= cp(i) * d.col(i + 1);
        }
    };

    MatrixXd y = rhs;
    thomas(y);

    MatrixXd u = MatrixXd::Zero(1, cells);
    u(0, 0) = gamma;
    u(0, cells - 1) = off;
    thomas(u);

    const double vz = u(0, 0) + (off / gamma) * u(0, cells - 1);
    VectorXd vy = y.col(0) + (off / gamma) * y.col(cells - 1);
    VectorXd factor = vy / (1.0 + vz);
    for (Index i = 0; i < cells; ++i) y.col(i) -= factor * u(0, i);
    return y;
}

}  // namespace

SplineBasis::SplineBasis(const QuadraticManifold& m, const Grid& grid)
    : grid_(grid), n_(m.reduced_dim()) {
    if (grid.dim != 1)
        throw std::invalid_argument(
            "SplineBasis: only 1-D grids are supported by the interpolated path");
    const Index cells = grid.npts[0];
    if (m.full_dim() != cells)
        throw std::invalid_argument("SplineBasis: manifold/grid size mismatch");
    if (cells < 3) throw std::invalid_argument("SplineBasis: need at least 3 nodes");

    const Index c_total = 1 + n_ + n_ * n_;
    MatrixXd y(c_total, cells);
    y.row(0) = m.s0.transpose();
    y.middleRows(1, n_) = m.V.transpose();
    y.middleRows(1 + n_, n_ * n_) = m.W.transpose();

    const double h = grid.spacing(0);
    MatrixXd d2_rhs(c_total, cells);
    for (Index i = 0; i < cells; ++i) {
        const Index ip = i + 1 == cells ? 0 : i + 1;
        const Index im = i == 0 ? cells - 1 : i - 1;
        d2_rhs.col(i) = (y.col(ip) - 2.0 * y.col(i) + y.col(im)) / h;
    }
    MatrixXd moments = solve_cyclic_moments(d2_rhs, 2.0 * h / 3.0, h / 6.0);

    coef_a_ = y.transpose();
    coef_b_.resize(cells, c_total);
    coef_c_ = 0.5 * moments.transpose();
    coef_d_.resize(cells, c_total);
    for (Index i = 0; i < cells; ++i) {
        const Index ip = i + 1 == cells ? 0 : i + 1;
        coef_b_.row(i) = ((y.col(ip) - y.col(i)) / h -
                          h * (2.0 * moments.col(i) + moments.col(ip)) / 6.0)
                             .transpose();
        coef_d_.row(i) = ((moments.col(ip) - moments.col(i)) / (6.0 * h)).transpose();
    }
}

void SplineBasis::locate(double x, Index& cell, double& t) const {
    const double lo = grid_.lo[0];
    const double len = grid_.hi[0] - lo;
    const double xw = x - len * std::floor((x - lo) / len);
    const double h = grid_.spacing(0);
    cell = static_cast<Index>((xw - lo) / h);
    if (cell >= grid_.npts[0]) cell = grid_.npts[0] - 1;
    if (cell < 0) cell = 0;
    t = xw - (lo + cell * h);
}

void SplineBasis::eval_point(double x, VectorXd& vals, VectorXd* d1,
                             VectorXd* d2) const {
    Index cell;
    double t;
    locate(x, cell, t);
    vals = (coef_a_.row(cell) +
            t * (coef_b_.row(cell) + t * (coef_c_.row(cell) + t * coef_d_.row(cell))))
               .transpose();
    if (d1) {
        *d1 = (coef_b_.row(cell) +
               t * (2.0 * coef_c_.row(cell) + 3.0 * t * coef_d_.row(cell)))
                  .transpose();
    }
    if (d2) {
        *d2 = (2.0 * coef_c_.row(cell) + 6.0 * t * coef_d_.row(cell)).transpose();
    }
}

SplineBasis::Table SplineBasis::evaluate(std::span<const double> points,
                                         int max_deriv) const {
    const Index m = static_cast<Index>(points.size());
    const Index c_total = columns();
    Table table;
    table.points.assign(points.begin(), points.end());
    table.vals.resize(m, c_total);
    if (max_deriv >= 1) table.d1.resize(m, c_total);
    if (max_deriv >= 2) table.d2.resize(m, c_total);

    std::vector<Index> cell(m);
    std::vector<double> t(m);
    for (Index j = 0; j < m; ++j) locate(points[j], cell[j], t[j]);

    // column-at-a-time: the four coefficient columns stay cache-resident and
    // every table write is contiguous
    for (Index c = 0; c < c_total; ++c) {
        const double* a = coef_a_.col(c).data();
        const double* b = coef_b_.col(c).data();
        const double* cc = coef_c_.col(c).data();
        const double* d = coef_d_.col(c).data();
        double* out_v = table.vals.col(c).data();
        double* out_1 = max_deriv >= 1 ? table.d1.col(c).data() : nullptr;
        double* out_2 = max_deriv >= 2 ? table.d2.col(c).data() : nullptr;
        for (Index j = 0; j < m; ++j) {
            const Index i = cell[j];
            const double tj = t[j];
            out_v[j] = a[i] + tj * (b[i] + tj * (cc[i] + tj * d[i]));
            if (out_1) out_1[j] = b[i] + tj * (2.0 * cc[i] + 3.0 * tj * d[i]);
            if (out_2) out_2[j] = 2.0 * cc[i] + 6.0 * tj * d[i];
        }
    }
    return table;
}

const char* strategy_name(CollocationStrategy s) {
    switch (s) {
        case CollocationStrategy::equidistant: return "equidistant";
        case CollocationStrategy::uniform_fixed: return "uniform-fixed";
        case CollocationStrategy::uniform_resampled: return "uniform-resampled";
    }
    return "unknown";
}

CollocationStrategy strategy_from_name(const std::string& name) {
    if (name == "equidistant") return CollocationStrategy::equidistant;
    if (name == "uniform-fixed") return CollocationStrategy::uniform_fixed;
    if (name == "uniform-resampled") return CollocationStrategy::uniform_resampled;
    throw std::invalid_argument("unknown collocation strategy: " + name);
}

CollocationSet sample_collocation(const Grid& grid, Index m,
                                  CollocationStrategy strategy, std::uint64_t seed) {
    if (grid.dim != 1)
        throw std::invalid_argument("sample_collocation: 1-D domains only");
    if (m < 1) throw std::invalid_argument("sample_collocation: m must be >= 1");

    CollocationSet set;
    set.strategy = strategy;
    set.seed = seed;
    set.points.resize(m);
    const double lo = grid.lo[0], len = grid.hi[0] - grid.lo[0];
    if (strategy == CollocationStrategy::equidistant) {
        for (Index i = 0; i < m; ++i)
            set.points[i] = lo + len * static_cast<double>(i) / static_cast<double>(m);
    } else {
        std::mt19937_64 engine(seed);
        for (Index i = 0; i < m; ++i) {
            // top 53 bits -> [0, 1); identical across platforms for a seed
            const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
            set.points[i] = lo + len * u;
        }
    }
    return set;
}

PointwiseRhs PointwiseRhs::burgers(double alpha) {
    PointwiseRhs pde;
    pde.max_derivative_order = 2;
    pde.eval = [alpha](double, double u, double ux, double uxx, double) {
        return u * ux + alpha * uxx;
    };
    return pde;
}

MatrixXd collocation_jacobian(const SplineBasis::Table& table, Index n,
                              const VectorXd& theta) {
    if (theta.size() != n)
        throw std::invalid_argument("collocation_jacobian: dimension mismatch");
    if (table.vals.cols() != 1 + n + n * n)
        throw std::invalid_argument("collocation_jacobian: table/manifold mismatch");
    const Index w0 = 1 + n;
    MatrixXd j = table.vals.middleCols(1, n);
    for (Index c = 0; c < n; ++c) {
        for (Index b = 0; b < n; ++b) {
            j.col(c) += theta(b) * (table.vals.col(w0 + c * n + b) +
                                    table.vals.col(w0 + b * n + c));
        }
    }
    return j;
}

MatrixXd collocation_jacobian(const SplineBasis& basis, const VectorXd& theta,
                              std::span<const double> xi) {
    return collocation_jacobian(basis.evaluate(xi, 0), basis.reduced_dim(), theta);
}

VectorXd collocation_rhs(const SplineBasis::Table& table, Index n,
                         const VectorXd& theta, double mu, const PointwiseRhs& pde) {
    if (pde.max_derivative_order > 2)
        throw std::invalid_argument(
            "collocation_rhs: derivatives beyond second order are not supported");
    if (theta.size() != n)
        throw std::invalid_argument("collocation_rhs: dimension mismatch");
    const Index m = table.vals.rows();

    VectorXd combo(1 + n + n * n);
    combo(0) = 1.0;
    combo.segment(1, n) = theta;
    combo.segment(1 + n, n * n) = kron_features(theta);

    VectorXd u = table.vals * combo;
    VectorXd ux, uxx;
    if (pde.max_derivative_order >= 1) {
        if (table.d1.rows() != m)
            throw std::invalid_argument("collocation_rhs: table lacks derivatives");
        ux = table.d1 * combo;
    }
    if (pde.max_derivative_order >= 2) {
        if (table.d2.rows() != m)
            throw std::invalid_argument("collocation_rhs: table lacks second derivatives");
        uxx = table.d2 * combo;
    }

    VectorXd f(m);
    for (Index jj = 0; jj < m; ++jj) {
        f(jj) = pde.eval(table.points[jj], u(jj),
                         pde.max_derivative_order >= 1 ? ux(jj) : 0.0,
                         pde.max_derivative_order >= 2 ? uxx(jj) : 0.0, mu);
    }
    return f;
}

VectorXd collocation_rhs(const SplineBasis& basis, const VectorXd& theta,
                         std::span<const double> xi, double mu,
                         const PointwiseRhs& pde) {
    return collocation_rhs(basis.evaluate(xi, pde.max_derivative_order),
                           basis.reduced_dim(), theta, mu, pde);
}

CollocationSolve qmng_collocation_rhs(const SplineBasis::Table& table, Index n,
                                      const VectorXd& theta, double mu,
                                      const PointwiseRhs& pde, double rcond) {
    const MatrixXd j = collocation_jacobian(table, n, theta);
    const VectorXd f = collocation_rhs(table, n, theta, mu, pde);
    const Index m = j.rows();

    CollocationSolve out;
    out.theta_dot = VectorXd::Zero(n);

    // fast path: when J is safely full rank the rcond cutoff keeps every
    // singular value, and the unique solution comes from the normal equations
    if (m >= n) {
        MatrixXd gram = MatrixXd::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            MatrixXd(gram.selfadjointView<Eigen::Lower>()));
        const VectorXd& lam = es.eigenvalues();
        const double lam_max = std::max(lam.maxCoeff(), 0.0);
        if (lam.minCoeff() > 1e-12 * lam_max && lam_max > 0.0) {
            const VectorXd jtf = es.eigenvectors().transpose() * (j.transpose() * f);
            out.theta_dot = es.eigenvectors() * (jtf.array() / lam.array()).matrix();
            out.effective_rank = n;
            out.rank_deficient = false;
            return out;
        }
    }

    // near rank deficiency: minimal-norm solve with the rcond * sigma_max cutoff
    Eigen::BDCSVD<MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? sv(0) * rcond : 0.0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            out.theta_dot +=
                svd.matrixV().col(i) * (svd.matrixU().col(i).dot(f) / sv(i));
            ++out.effective_rank;
        }
    }
    out.rank_deficient = out.effective_rank < n;
    return out;
}

CollocationSolve qmng_collocation_rhs(const SplineBasis& basis, const VectorXd& theta,
                                      std::span<const double> xi, double mu,
                                      const PointwiseRhs& pde, double rcond) {
    return qmng_collocation_rhs(basis.evaluate(xi, pde.max_derivative_order),
                                basis.reduced_dim(), theta, mu, pde, rcond);
}

InterpReducedModel::InterpReducedModel(const SplineBasis& basis, PointwiseRhs pde,
                                       double mu, Options opts)
    : basis_(basis), pde_(std::move(pde)), mu_(mu), opts_(opts),
      rng_state_(opts.seed) {
    if (opts_.m < 1) throw std::invalid_argument("InterpReducedModel: m must be >= 1");
    resample();
}

void InterpReducedModel::resample() {
    CollocationSet set;
    if (opts_.strategy == CollocationStrategy::uniform_resampled) {
        // one master seed drives the whole per-step sequence
        set = sample_collocation(basis_.grid(), opts_.m, opts_.strategy, rng_state_);
        std::mt19937_64 advance(rng_state_);
        rng_state_ = advance();
    } else {
        set = sample_collocation(basis_.grid(), opts_.m, opts_.strategy, opts_.seed);
    }
    table_ = basis_.evaluate(set.points, pde_.max_derivative_order);
}

void InterpReducedModel::begin_step(Index) {
    if (opts_.strategy == CollocationStrategy::uniform_resampled) resample();
}

VectorXd InterpReducedModel::rhs(const VectorXd& theta, double) {
    CollocationSolve solve =
        qmng_collocation_rhs(table_, basis_.reduced_dim(), theta, mu_, pde_, opts_.rcond);
    if (solve.rank_deficient) ++rank_deficient_;
    return solve.theta_dot;
}

}  // namespace qmng
