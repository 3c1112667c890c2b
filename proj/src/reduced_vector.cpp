#include "qmng/reduced_vector.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace qmng {

namespace {

using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;

constexpr double kDivergenceNorm = 1e12;

void check_theta(const QuadraticManifold& m, const VectorXd& theta) {
    if (theta.size() != m.reduced_dim())
        throw std::invalid_argument("reduced state dimension mismatch");
}

}  // namespace

MatrixXd k_map(const QuadraticManifold& m, const VectorXd& theta) {
    check_theta(m, theta);
    const Index n = m.reduced_dim();
    MatrixXd k = MatrixXd::Zero(m.full_dim(), n);
    // column c of W grad_h: sum_b theta_b (W[:, c n + b] + W[:, b n + c])
    for (Index c = 0; c < n; ++c) {
        for (Index b = 0; b < n; ++b) {
            k.col(c) += theta(b) * (m.W.col(c * n + b) + m.W.col(b * n + c));
        }
    }
    return k;
}

MatrixXd assemble_jacobian(const QuadraticManifold& m, const VectorXd& theta) {
    return m.V + k_map(m, theta);
}

double jacobian_min_singular_value(const QuadraticManifold& m, const VectorXd& theta) {
    const MatrixXd j = assemble_jacobian(m, theta);
    MatrixXd g = MatrixXd::Zero(j.cols(), j.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(MatrixXd(g.selfadjointView<Eigen::Lower>()));
    return std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
}

VectorXd qmng_rhs(const QuadraticManifold& m, const FullRhs& f, const VectorXd& theta,
                  bool check_invariants) {
    check_theta(m, theta);
    const Index n = m.reduced_dim();
    const MatrixXd k = k_map(m, theta);

    if (check_invariants) {
        const MatrixXd j = m.V + k;
        MatrixXd jtj = MatrixXd::Zero(n, n);
        jtj.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            MatrixXd(jtj.selfadjointView<Eigen::Lower>()));
        if (es.eigenvalues().minCoeff() < 0.99) {
            throw std::runtime_error(
                "qmng_rhs: sigma_min(J^T J) < 0.99, manifold invariants violated");
        }
    }

    MatrixXd gram = MatrixXd::Identity(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(k.transpose());

    const VectorXd fq = f(decode(m, theta));
    if (fq.size() != m.full_dim())
        throw std::invalid_argument("qmng_rhs: full rhs dimension mismatch");
    const VectorXd jtf = m.V.transpose() * fq + k.transpose() * fq;

    Eigen::LLT<MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("qmng_rhs: normal-equations factorization failed");
    return llt.solve(jtf);
}

KroneckerCache build_kronecker_cache(const QuadraticManifold& m) {
    const Index n = m.reduced_dim();
    const Index N = m.full_dim();
    const Index p = n * n;

    KroneckerCache cache;
    // K_mat[:, c n + k] = K_{. c k} = W[:, c n + k] + W[:, k n + c]
    cache.k_mat.resize(N, p);
    for (Index c = 0; c < n; ++c)
        for (Index k = 0; k < n; ++k)
            cache.k_mat.col(c * n + k) = m.W.col(c * n + k) + m.W.col(k * n + c);

    MatrixXd m4 = MatrixXd::Zero(p, p);
    m4.selfadjointView<Eigen::Lower>().rankUpdate(cache.k_mat.transpose());
    m4 = m4.selfadjointView<Eigen::Lower>();

    // gram(p,a,b,q) = sum_i K_{i a p} K_{i b q} = m4(a n + p, b n + q)
    cache.gram = Tensor4(n, n, n, n);
    for (Index pp = 0; pp < n; ++pp)
        for (Index aa = 0; aa < n; ++aa)
            for (Index bb = 0; bb < n; ++bb)
                for (Index qq = 0; qq < n; ++qq)
                    cache.gram(pp, aa, bb, qq) = m4(aa * n + pp, bb * n + qq);
    return cache;
}

PrecomputedOperators precompute_linear(const QuadraticManifold& m,
                                       const SystemMatrix& a,
                                       std::size_t memory_budget_bytes) {
    return precompute_linear(m, a, build_kronecker_cache(m), memory_budget_bytes);
}

PrecomputedOperators precompute_linear(const QuadraticManifold& m,
                                       const SystemMatrix& a,
                                       const KroneckerCache& cache,
                                       std::size_t memory_budget_bytes) {
    const Index n = m.reduced_dim();
    const Index N = m.full_dim();
    const Index p = n * n;
    if (a.rows != N || a.cols != N)
        throw std::invalid_argument("precompute_linear: system matrix size mismatch");
    if (cache.k_mat.rows() != N || cache.k_mat.cols() != p)
        throw std::invalid_argument("precompute_linear: stale Kronecker cache");

    const std::size_t persistent =
        sizeof(double) * (2 * std::size_t(p) * p + std::size_t(n) * p + 2 * p + 2 * n);
    const std::size_t transient = sizeof(double) * 2 * std::size_t(N) * p;
    if (persistent + transient > memory_budget_bytes) {
        throw std::runtime_error(
            "precompute_linear: requires " + std::to_string(persistent + transient) +
            " bytes (budget " + std::to_string(memory_budget_bytes) +
            "); reduce n or raise the budget");
    }

    PrecomputedOperators ops;
    ops.n = n;
    ops.gram = cache.gram;
    const MatrixXd& k_mat = cache.k_mat;

    const VectorXd a_s0 = a.apply(m.s0);
    const MatrixXd a_v = a.apply(m.V);
    const MatrixXd a_w = a.apply(m.W);

    ops.s0_hat = m.V.transpose() * a_s0;
    ops.a_hat = m.V.transpose() * a_v;
    ops.h_hat = m.V.transpose() * a_w;

    // S_{jk} = K_{i k j} [A s0]_i
    const VectorXd g = k_mat.transpose() * a_s0;
    ops.s_op.resize(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) ops.s_op(j, k) = g(k * n + j);

    // A_{kjm} = K_{i j k} [A V]_{i m}
    const MatrixXd b3 = k_mat.transpose() * a_v;
    ops.a_op = Tensor3(n, n, n);
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            for (Index mm = 0; mm < n; ++mm) ops.a_op(k, j, mm) = b3(j * n + k, mm);

    // H_{kjm} = K_{i j k} [A W]_{i m}
    const MatrixXd c3 = k_mat.transpose() * a_w;
    ops.h_op = Tensor3(n, n, p);
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            for (Index mm = 0; mm < p; ++mm) ops.h_op(k, j, mm) = c3(j * n + k, mm);

    return ops;
}

VectorXd linear_reduced_rhs(const PrecomputedOperators& ops, const VectorXd& theta) {
    LinearReducedWorkspace work;
    return linear_reduced_rhs(ops, theta, work);
}

VectorXd linear_reduced_rhs(const PrecomputedOperators& ops, const VectorXd& theta,
                            LinearReducedWorkspace& work) {
    const Index n = ops.n;
    if (theta.size() != n)
        throw std::invalid_argument("linear_reduced_rhs: dimension mismatch");
    const Index p = n * n;

    work.features.resize(p);
    for (Index i = 0; i < n; ++i)
        work.features.segment(i * n, n) = theta(i) * theta;

    // lhs = I + theta . gram . theta, two successive mode contractions
    work.acc_gram.setZero(n * p);
    for (Index q = 0; q < n; ++q) {
        work.acc_gram +=
            theta(q) * Eigen::Map<const VectorXd>(ops.gram.data() + q * n * p, n * p);
    }
    RowMap gram_flat(work.acc_gram.data(), p, n);
    VectorXd folded = gram_flat * theta;
    work.lhs.resize(n, n);
    for (Index i = 0; i < n; ++i)
        work.lhs.row(i) = folded.segment(i * n, n).transpose();
    work.lhs.diagonal().array() += 1.0;

    // f_hat(theta)
    work.rhs = ops.s0_hat;
    work.rhs.noalias() += ops.a_hat * theta;
    work.rhs.noalias() += ops.h_hat * work.features;
    work.rhs.noalias() += ops.s_op.transpose() * theta;

    work.acc_quad.setZero(p);
    for (Index k = 0; k < n; ++k) {
        work.acc_quad +=
            theta(k) * Eigen::Map<const VectorXd>(ops.a_op.data() + k * p, p);
    }
    RowMap quad(work.acc_quad.data(), n, n);
    work.rhs.noalias() += quad * theta;

    work.acc_cubic.setZero(n * p);
    for (Index k = 0; k < n; ++k) {
        work.acc_cubic +=
            theta(k) * Eigen::Map<const VectorXd>(ops.h_op.data() + k * n * p, n * p);
    }
    RowMap cubic(work.acc_cubic.data(), n, p);
    work.rhs.noalias() += cubic * work.features;

    Eigen::LLT<MatrixXd> llt(work.lhs);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(
            "linear_reduced_rhs: Cholesky failed on I + theta.gram.theta; "
            "the precomputed operators are corrupted");
    }
    return llt.solve(work.rhs);
}

VectorXd constant_testspace_rhs(const QuadraticManifold& m, const FullRhs& f,
                                const VectorXd& theta) {
    check_theta(m, theta);
    const VectorXd fq = f(decode(m, theta));
    return m.V.transpose() * fq;
}

VectorXd constant_testspace_linear_rhs(const PrecomputedOperators& ops,
                                       const VectorXd& theta) {
    if (theta.size() != ops.n)
        throw std::invalid_argument("constant_testspace_linear_rhs: dimension mismatch");
    return ops.s0_hat + ops.a_hat * theta + ops.h_hat * kron_features(theta);
}

const char* scheme_name(Scheme s) { return s == Scheme::euler ? "euler" : "rk4"; }

ReducedTrajectory integrate_reduced(const ReducedRhs& rhs, const VectorXd& theta0,
                                    double dt, Index steps, Scheme scheme,
                                    const std::function<void(Index)>& on_step) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_reduced: dt must be > 0");
    if (steps < 0) throw std::invalid_argument("integrate_reduced: negative step count");

    const Index n = theta0.size();
    ReducedTrajectory traj;
    traj.dt = dt;
    traj.scheme = scheme;
    traj.states.resize(n, steps + 1);
    traj.times.resize(steps + 1);
    traj.states.col(0) = theta0;
    traj.times[0] = 0.0;

    VectorXd theta = theta0;
    Index done = 0;
    const auto t_start = std::chrono::steady_clock::now();
    for (Index k = 0; k < steps; ++k) {
        if (on_step) on_step(k);
        const double t = k * dt;
        bool failed = false;
        VectorXd next;
        try {
            if (scheme == Scheme::euler) {
                next = theta + dt * rhs(theta, t);
            } else {
                const VectorXd k1 = rhs(theta, t);
                const VectorXd k2 = rhs(theta + 0.5 * dt * k1, t + 0.5 * dt);
                const VectorXd k3 = rhs(theta + 0.5 * dt * k2, t + 0.5 * dt);
                const VectorXd k4 = rhs(theta + dt * k3, t + dt);
                next = theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        } catch (const std::runtime_error&) {
            failed = true;
        }
        if (failed || !next.allFinite() || next.norm() > kDivergenceNorm) {
            traj.unstable = true;
            break;
        }
        theta = std::move(next);
        ++done;
        traj.states.col(done) = theta;
        traj.times[done] = (k + 1) * dt;
    }
    const auto t_end = std::chrono::steady_clock::now();
    traj.online_seconds = std::chrono::duration<double>(t_end - t_start).count();

    traj.steps_completed = done;
    if (done + 1 < traj.states.cols()) {
        traj.states.conservativeResize(n, done + 1);
        traj.times.resize(done + 1);
    }
    return traj;
}

}  // namespace qmng
