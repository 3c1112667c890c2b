#include "qmng/full_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace qmng {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, Index count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = 0.5 * (a + b);
        return out;
    }
    const double step = (b - a) / static_cast<double>(count - 1);
    for (Index i = 0; i < count; ++i) out[i] = a + step * i;
    return out;
}

// Five evenly spread midpoints of the training grid.
std::vector<double> midpoint_tests(const std::vector<double>& train) {
    const Index mids = static_cast<Index>(train.size()) - 1;
    std::vector<double> out;
    for (Index j = 0; j < 5; ++j) {
        const Index i = static_cast<Index>(
            std::llround(static_cast<double>(j) * static_cast<double>(mids - 1) / 4.0));
        out.push_back(0.5 * (train[i] + train[i + 1]));
    }
    return out;
}

void check_wave_grid(const Grid& g) {
    if (g.dim != 2 || g.npts[0] != g.npts[1] ||
        (g.hi[0] - g.lo[0]) != (g.hi[1] - g.lo[1])) {
        throw std::invalid_argument("wave_rhs: requires a square periodic 2-D grid");
    }
}

struct TripletRows {
    explicit TripletRows(Index n) : rows(n) {}
    void add(Index r, Index c, double v) { rows[r].emplace_back(c, v); }

    SystemMatrix compile(Index n) {
        SystemMatrix a;
        a.rows = a.cols = n;
        a.row_ptr.resize(n + 1, 0);
        for (Index r = 0; r < n; ++r) {
            auto& row = rows[r];
            std::sort(row.begin(), row.end());
            Index distinct = 0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (k > 0 && row[k].first == row[distinct - 1].first) {
                    // merged wrap-around stencil legs on tiny grids
                    a.vals.back() += row[k].second;
                } else {
                    a.col_idx.push_back(row[k].first);
                    a.vals.push_back(row[k].second);
                    ++distinct;
                }
            }
            a.row_ptr[r + 1] = static_cast<Index>(a.col_idx.size());
        }
        return a;
    }

    std::vector<std::vector<std::pair<Index, double>>> rows;
};

double vlasov_potential_gradient(double x, double mu, double alpha, double beta) {
    const double c = std::cos(kPi * (x + mu));
    const double s = std::sin(kPi * (x + mu));
    return 4.0 * alpha * kPi * c * c * c * s - beta * kPi * std::cos(kPi * x);
}

}  // namespace

FullModelSpec FullModelSpec::wave2d(Index pts_per_axis, double t_end, double dt,
                                    Index train_count, Index subsample) {
    FullModelSpec s;
    s.kind = ModelKind::wave2d;
    s.grid = Grid::periodic_2d(-4.0, 4.0, pts_per_axis, -4.0, 4.0, pts_per_axis);
    s.t_end = t_end;
    s.dt = dt;
    s.param_domain = {0.0, 1.0};
    s.train_params = linspace(0.0, 1.0, train_count);
    s.test_params = midpoint_tests(s.train_params);
    s.snapshot_subsample = subsample;
    return s;
}

FullModelSpec FullModelSpec::vlasov(Index pts_per_axis, double t_end, double dt,
                                    Index train_count, Index subsample) {
    FullModelSpec s;
    s.kind = ModelKind::vlasov;
    s.grid = Grid::periodic_2d(-1.0, 1.0, pts_per_axis, -1.0, 1.0, pts_per_axis);
    s.t_end = t_end;
    s.dt = dt;
    s.param_domain = {0.25, 0.45};
    s.train_params = linspace(0.25, 0.45, train_count);
    s.test_params = midpoint_tests(s.train_params);
    s.snapshot_subsample = subsample;
    return s;
}

FullModelSpec FullModelSpec::burgers(Index pts, double t_end, double dt,
                                     Index train_count, Index subsample) {
    FullModelSpec s;
    s.kind = ModelKind::burgers;
    s.grid = Grid::periodic_1d(-1.0, 1.0, pts);
    s.t_end = t_end;
    s.dt = dt;
    s.param_domain = {0.35, 0.65};
    s.train_params = linspace(0.35, 0.65, train_count);
    s.test_params = midpoint_tests(s.train_params);
    s.snapshot_subsample = subsample;
    return s;
}

FullModelSpec FullModelSpec::preset(ModelKind kind, Scale scale) {
    const bool desk = scale == Scale::desk;
    switch (kind) {
        case ModelKind::wave2d: {
            FullModelSpec s = wave2d(desk ? 64 : 1024, 8.0, 1e-3, 10, 40);
            if (!desk) s.test_params = {0.0556, 0.3889, 0.5000, 0.7222, 0.9444};
            return s;
        }
        case ModelKind::vlasov: {
            FullModelSpec s = vlasov(desk ? 128 : 512, 3.2, 1e-3, desk ? 20 : 50, 10);
            if (!desk) s.test_params = {0.2765, 0.2724, 0.3500, 0.3827, 0.4398};
            return s;
        }
        case ModelKind::burgers: {
            FullModelSpec s = burgers(desk ? 512 : 2048, 1.0, 1e-4, desk ? 20 : 50, 50);
            if (!desk) s.test_params = {0.3810, 0.3837, 0.5000, 0.5490, 0.6347};
            return s;
        }
    }
    throw std::invalid_argument("unknown model kind");
}

VectorXd wave_rhs(const Grid& grid, const VectorXd& q, double /*mu*/) {
    check_wave_grid(grid);
    const Index nx = grid.npts[0], ny = grid.npts[1], ng = nx * ny;
    if (q.size() != 3 * ng)
        throw std::invalid_argument("wave_rhs: state dimension mismatch");
    const double sx = 1.0 / (2.0 * grid.spacing(0));
    const double sy = 1.0 / (2.0 * grid.spacing(1));

    const double* rho = q.data();
    const double* v1 = q.data() + ng;
    const double* v2 = q.data() + 2 * ng;
    VectorXd out(3 * ng);
    for (Index iy = 0; iy < ny; ++iy) {
        const Index yp = (iy + 1 == ny ? 0 : iy + 1) * nx;
        const Index ym = (iy == 0 ? ny - 1 : iy - 1) * nx;
        const Index y0 = iy * nx;
        for (Index ix = 0; ix < nx; ++ix) {
            const Index xp = ix + 1 == nx ? 0 : ix + 1;
            const Index xm = ix == 0 ? nx - 1 : ix - 1;
            const Index i = y0 + ix;
            const double dv1dx = (v1[y0 + xp] - v1[y0 + xm]) * sx;
            const double dv2dy = (v2[yp + ix] - v2[ym + ix]) * sy;
            out(i) = -(dv1dx + dv2dy);
            out(ng + i) = -(rho[y0 + xp] - rho[y0 + xm]) * sx;
            out(2 * ng + i) = -(rho[yp + ix] - rho[ym + ix]) * sy;
        }
    }
    return out;
}

VectorXd vlasov_rhs(const FullModelSpec& spec, const VectorXd& q, double mu) {
    const Grid& grid = spec.grid;
    if (grid.dim != 2) throw std::invalid_argument("vlasov_rhs: requires a 2-D grid");
    const Index nx = grid.npts[0], nv = grid.npts[1];
    if (q.size() != nx * nv)
        throw std::invalid_argument("vlasov_rhs: state dimension mismatch");
    const double cx = 1.0 / (12.0 * grid.spacing(0));
    const double cv = 1.0 / (12.0 * grid.spacing(1));

    VectorXd phix(nx);
    for (Index ix = 0; ix < nx; ++ix) {
        phix(ix) = vlasov_potential_gradient(grid.coord(0, ix), mu,
                                             spec.vlasov_alpha, spec.vlasov_beta);
    }

    auto wrap = [](Index i, Index m) { return i >= m ? i - m : (i < 0 ? i + m : i); };
    const double* in = q.data();
    VectorXd out(nx * nv);
    for (Index iv = 0; iv < nv; ++iv) {
        const double v = grid.coord(1, iv);
        const Index vp = wrap(iv + 1, nv) * nx, vp2 = wrap(iv + 2, nv) * nx;
        const Index vm = wrap(iv - 1, nv) * nx, vm2 = wrap(iv - 2, nv) * nx;
        const Index v0 = iv * nx;
        for (Index ix = 0; ix < nx; ++ix) {
            const Index xp = wrap(ix + 1, nx), xp2 = wrap(ix + 2, nx);
            const Index xm = wrap(ix - 1, nx), xm2 = wrap(ix - 2, nx);
            const double dqdx =
                (-in[v0 + xp2] + 8.0 * in[v0 + xp] - 8.0 * in[v0 + xm] + in[v0 + xm2]) * cx;
            const double dqdv =
                (-in[vp2 + ix] + 8.0 * in[vp + ix] - 8.0 * in[vm + ix] + in[vm2 + ix]) * cv;
            out(v0 + ix) = -v * dqdx + phix(ix) * dqdv;
        }
    }
    return out;
}

VectorXd burgers_rhs(const Grid& grid, const VectorXd& q, double alpha) {
    if (grid.dim != 1) throw std::invalid_argument("burgers_rhs: requires a 1-D grid");
    const Index n = grid.npts[0];
    if (q.size() != n) throw std::invalid_argument("burgers_rhs: dimension mismatch");
    const double h = grid.spacing(0);
    const double c1 = 1.0 / (12.0 * h);
    const double c2 = alpha / (h * h);

    auto wrap = [n](Index i) { return i >= n ? i - n : (i < 0 ? i + n : i); };
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) {
        const Index p = wrap(i + 1), p2 = wrap(i + 2);
        const Index m = wrap(i - 1), m2 = wrap(i - 2);
        const double d1 = (-q(p2) + 8.0 * q(p) - 8.0 * q(m) + q(m2)) * c1;
        const double d2 = (q(p) - 2.0 * q(i) + q(m)) * c2;
        out(i) = q(i) * d1 + d2;
    }
    return out;
}

VectorXd model_rhs(const FullModelSpec& spec, const VectorXd& q, double mu) {
    switch (spec.kind) {
        case ModelKind::wave2d: return wave_rhs(spec.grid, q, mu);
        case ModelKind::vlasov: return vlasov_rhs(spec, q, mu);
        case ModelKind::burgers: return burgers_rhs(spec.grid, q, spec.burgers_alpha);
    }
    throw std::invalid_argument("unknown model kind");
}

VectorXd initial_condition(const FullModelSpec& spec, double mu) {
    if (mu < spec.param_domain[0] || mu > spec.param_domain[1]) {
        std::fprintf(stderr, "warning: mu=%g outside the parameter domain [%g, %g]\n",
                     mu, spec.param_domain[0], spec.param_domain[1]);
    }
    const Grid& g = spec.grid;
    switch (spec.kind) {
        case ModelKind::wave2d: {
            const Index nx = g.npts[0], ny = g.npts[1], ng = nx * ny;
            VectorXd q = VectorXd::Zero(3 * ng);
            const double a = (6.0 + mu) * (6.0 + mu);
            for (Index iy = 0; iy < ny; ++iy) {
                const double dy = g.coord(1, iy) - spec.wave_x0[1];
                for (Index ix = 0; ix < nx; ++ix) {
                    const double dx = g.coord(0, ix) - spec.wave_x0[0];
                    q(iy * nx + ix) = std::exp(-a * (dx * dx + dy * dy));
                }
            }
            return q;
        }
        case ModelKind::vlasov: {
            const Index nx = g.npts[0], nv = g.npts[1];
            VectorXd q(nx * nv);
            const double scale = 1.0 / (2.0 * kPi * spec.vlasov_sigma);
            const double decay = 1.0 / (kPi * spec.vlasov_sigma);
            for (Index iv = 0; iv < nv; ++iv) {
                const double sv = std::sin(0.5 * kPi * (g.coord(1, iv) - spec.vlasov_v0));
                for (Index ix = 0; ix < nx; ++ix) {
                    const double sx =
                        std::sin(0.5 * kPi * (g.coord(0, ix) - spec.vlasov_x0));
                    q(iv * nx + ix) = scale * std::exp(-decay * (sx * sx + sv * sv));
                }
            }
            return q;
        }
        case ModelKind::burgers: {
            const Index n = g.npts[0];
            VectorXd q(n);
            const double scale = 1.0 / (2.0 * kPi * spec.burgers_sigma);
            const double decay = 1.0 / (kPi * spec.burgers_sigma);
            for (Index i = 0; i < n; ++i) {
                const double s = std::sin(0.5 * kPi * (g.coord(0, i) - mu));
                q(i) = scale * std::exp(-decay * s * s);
            }
            return q;
        }
    }
    throw std::invalid_argument("unknown model kind");
}

VectorXd rk4_step(const RhsFn& f, const VectorXd& q, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
    const VectorXd k1 = f(q, t);
    const VectorXd k2 = f(q + 0.5 * dt * k1, t + 0.5 * dt);
    const VectorXd k3 = f(q + 0.5 * dt * k2, t + 0.5 * dt);
    const VectorXd k4 = f(q + dt * k3, t + dt);
    VectorXd out = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) {
        throw std::runtime_error("rk4_step: non-finite stage at t = " +
                                 std::to_string(t));
    }
    return out;
}

VectorXd SystemMatrix::apply(const VectorXd& q) const {
    if (q.size() != cols) throw std::invalid_argument("SystemMatrix: size mismatch");
    VectorXd out(rows);
    for (Index r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            acc += vals[k] * q(col_idx[k]);
        out(r) = acc;
    }
    return out;
}

MatrixXd SystemMatrix::apply(const MatrixXd& q) const {
    if (q.rows() != cols) throw std::invalid_argument("SystemMatrix: size mismatch");
    MatrixXd out(rows, q.cols());
    for (Index r = 0; r < rows; ++r) {
        out.row(r).setZero();
        for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            out.row(r) += vals[k] * q.row(col_idx[k]);
    }
    return out;
}

SystemMatrix assemble_system_matrix(const FullModelSpec& spec, double mu) {
    if (!spec.is_linear())
        throw std::invalid_argument(
            "assemble_system_matrix: Burgers is nonlinear, no system matrix exists");
    const Grid& g = spec.grid;
    auto wrap = [](Index i, Index m) { return i >= m ? i - m : (i < 0 ? i + m : i); };

    if (spec.kind == ModelKind::wave2d) {
        check_wave_grid(g);
        const Index nx = g.npts[0], ny = g.npts[1], ng = nx * ny;
        const double sx = 1.0 / (2.0 * g.spacing(0));
        const double sy = 1.0 / (2.0 * g.spacing(1));
        TripletRows t(3 * ng);
        for (Index iy = 0; iy < ny; ++iy) {
            for (Index ix = 0; ix < nx; ++ix) {
                const Index i = iy * nx + ix;
                const Index xp = iy * nx + wrap(ix + 1, nx);
                const Index xm = iy * nx + wrap(ix - 1, nx);
                const Index yp = wrap(iy + 1, ny) * nx + ix;
                const Index ym = wrap(iy - 1, ny) * nx + ix;
                t.add(i, ng + xp, -sx);
                t.add(i, ng + xm, sx);
                t.add(i, 2 * ng + yp, -sy);
                t.add(i, 2 * ng + ym, sy);
                t.add(ng + i, xp, -sx);
                t.add(ng + i, xm, sx);
                t.add(2 * ng + i, yp, -sy);
                t.add(2 * ng + i, ym, sy);
            }
        }
        return t.compile(3 * ng);
    }

    // vlasov
    const Index nx = g.npts[0], nv = g.npts[1];
    const double cx = 1.0 / (12.0 * g.spacing(0));
    const double cv = 1.0 / (12.0 * g.spacing(1));
    TripletRows t(nx * nv);
    for (Index iv = 0; iv < nv; ++iv) {
        const double v = g.coord(1, iv);
        for (Index ix = 0; ix < nx; ++ix) {
            const Index i = iv * nx + ix;
            const double px = vlasov_potential_gradient(g.coord(0, ix), mu,
                                                        spec.vlasov_alpha,
                                                        spec.vlasov_beta);
            t.add(i, iv * nx + wrap(ix + 2, nx), -(-v * cx));
            t.add(i, iv * nx + wrap(ix + 1, nx), 8.0 * (-v * cx));
            t.add(i, iv * nx + wrap(ix - 1, nx), -8.0 * (-v * cx));
            t.add(i, iv * nx + wrap(ix - 2, nx), -v * cx);
            t.add(i, wrap(iv + 2, nv) * nx + ix, -(px * cv));
            t.add(i, wrap(iv + 1, nv) * nx + ix, 8.0 * (px * cv));
            t.add(i, wrap(iv - 1, nv) * nx + ix, -8.0 * (px * cv));
            t.add(i, wrap(iv - 2, nv) * nx + ix, px * cv);
        }
    }
    return t.compile(nx * nv);
}

SnapshotMatrix generate_snapshots(const FullModelSpec& spec,
                                  std::span<const double> params, Index subsample) {
    if (subsample < 1)
        throw std::invalid_argument("generate_snapshots: subsample must be >= 1");
    const Index k_total = spec.total_steps();
    const Index cols_per = k_total / subsample + 1;
    const Index n = spec.state_dim();

    SnapshotMatrix out;
    out.grid = spec.grid;
    out.kind = spec.kind;
    out.params.assign(params.begin(), params.end());
    out.times.resize(cols_per);
    out.data.resize(n, cols_per * static_cast<Index>(params.size()));

    for (std::size_t p = 0; p < params.size(); ++p) {
        const double mu = params[p];
        auto rhs = [&spec, mu](const VectorXd& q, double) {
            return model_rhs(spec, q, mu);
        };
        VectorXd q = initial_condition(spec, mu);
        Index col = static_cast<Index>(p) * cols_per;
        out.data.col(col) = q;
        out.times[0] = 0.0;
        Index stored = 1;
        for (Index k = 1; k <= k_total; ++k) {
            const double t = (k - 1) * spec.dt;
            try {
                q = rk4_step(rhs, q, t, spec.dt);
            } catch (const std::exception& e) {
                throw std::runtime_error("generate_snapshots: integration failed at mu=" +
                                         std::to_string(mu) + ", t=" +
                                         std::to_string(t) + ": " + e.what());
            }
            if (k % subsample == 0) {
                out.data.col(col + stored) = q;
                out.times[stored] = k * spec.dt;
                ++stored;
            }
        }
    }
    return out;
}

}  // namespace qmng
