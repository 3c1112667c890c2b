#include "qmng/manifold.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qmng {

namespace {

constexpr double kOrthoTol = 1e-10;
constexpr double kCrossTol = 1e-8;

// Evenly spread deterministic column subsample.
std::vector<Index> subsample_indices(Index total, Index want) {
    const Index m = std::min(total, want);
    std::vector<Index> idx(m);
    for (Index j = 0; j < m; ++j) idx[j] = (j * total) / m;
    return idx;
}

MatrixXd select_columns(const MatrixXd& mat, const std::vector<Index>& idx) {
    MatrixXd out(mat.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = mat.col(idx[j]);
    return out;
}

// Feature matrix H = h(Theta) columnwise, p = n^2 rows.
MatrixXd feature_matrix(const MatrixXd& theta) {
    const Index n = theta.rows(), m = theta.cols();
    MatrixXd h(n * n, m);
    for (Index c = 0; c < m; ++c) h.col(c) = kron_features(theta.col(c));
    return h;
}

// Greedy candidate scoring on pool coordinates. Works entirely in snapshot-
// Gram coordinates: for the ridge minimizer W*, the residual satisfies
// ||R - W*H||_F^2 = gamma^2 tr(B^{-1} R^T R B^{-1}) with B = H^T H + gamma I
// and H^T H = (Theta^T Theta) squared elementwise (the kron feature kernel).
class GreedyScorer {
public:
    GreedyScorer(const MatrixXd& theta_pool, const MatrixXd& centered_sub,
                 double gamma) {
        const Index m = centered_sub.cols();
        MatrixXd gram = MatrixXd::Zero(m, m);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(centered_sub.transpose());
        gram = gram.selfadjointView<Eigen::Lower>();

        // normalize to unit RMS column norm; the ridge score on scaled data
        // with gamma/scale^4 ranks candidates identically
        const double scale2 = std::max(gram.trace() / static_cast<double>(m), 1e-300);
        theta_pool_ = theta_pool / std::sqrt(scale2);
        gamma_ = gamma / (scale2 * scale2);
        gram /= scale2;

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("greedy_basis: Gram eigendecomposition failed");
        const VectorXd& lam = es.eigenvalues();
        const double lam_max = std::max(lam.maxCoeff(), 0.0);
        Index kept = 0;
        for (Index i = 0; i < m; ++i)
            if (lam(i) > lam_max * 1e-28) ++kept;
        gram_factor_.resize(m, kept);
        Index c = 0;
        for (Index i = 0; i < m; ++i) {
            if (lam(i) > lam_max * 1e-28) {
                gram_factor_.col(c++) = es.eigenvectors().col(i) * std::sqrt(lam(i));
            }
        }
    }

    // ||R - W*H||_F^2 (up to the fixed data scale) for the candidate row set;
    // `base` caches Theta_sel^T Theta_sel for the already-selected rows.
    double score(const MatrixXd& base, Index candidate,
                 const std::vector<Index>& selected) const {
        const Index m = theta_pool_.cols();
        MatrixXd cross = base;
        cross.noalias() +=
            theta_pool_.row(candidate).transpose() * theta_pool_.row(candidate);

        MatrixXd b = cross.array().square().matrix();
        // floor the effective ridge at the factorization noise level; below
        // it the score is the gamma -> 0 limit, which the true fit also
        // cannot distinguish in double precision
        const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(b.rowwise().lpNorm<1>().maxCoeff(), 1e-300);
        double gamma_eff = std::max(gamma_, noise_floor);

        Eigen::LDLT<MatrixXd> ldlt;
        for (int attempt = 0;; ++attempt) {
            MatrixXd shifted = b;
            shifted.diagonal().array() += gamma_eff;
            ldlt.compute(shifted);
            if (ldlt.info() == Eigen::Success) break;
            if (attempt >= 2)
                throw std::runtime_error("greedy_basis: scoring factorization failed");
            gamma_eff *= 32.0;
        }

        const double t_full = ldlt.solve(gram_factor_).squaredNorm();
        MatrixXd theta_t(m, static_cast<Index>(selected.size()) + 1);
        for (std::size_t j = 0; j < selected.size(); ++j)
            theta_t.col(static_cast<Index>(j)) = theta_pool_.row(selected[j]).transpose();
        theta_t.col(theta_t.cols() - 1) = theta_pool_.row(candidate).transpose();
        const double t_proj = ldlt.solve(theta_t).squaredNorm();

        return std::max(gamma_eff * gamma_eff * (t_full - t_proj), 0.0);
    }

private:
    MatrixXd theta_pool_;   // l x m pool coordinates, RMS-normalized
    MatrixXd gram_factor_;  // F with F F^T = Gram of the normalized subsample
    double gamma_;
};

std::vector<Index> greedy_select_impl(const MatrixXd& theta_pool,
                                      const MatrixXd& centered_sub, Index n,
                                      Index l, double gamma) {
    std::vector<Index> selected{0};
    if (l == n) {
        // pool size equals selection size: plain POD
        selected.resize(n);
        std::iota(selected.begin(), selected.end(), Index{0});
        return selected;
    }

    GreedyScorer scorer(theta_pool, centered_sub, gamma);
    const Index m = theta_pool.cols();
    std::vector<bool> used(l, false);
    used[0] = true;
    MatrixXd base = theta_pool.row(0).transpose() * theta_pool.row(0);

    while (static_cast<Index>(selected.size()) < n) {
        Index best = -1;
        double best_err = std::numeric_limits<double>::infinity();
        for (Index c = 0; c < l; ++c) {
            if (used[c]) continue;
            const double err = scorer.score(base, c, selected);
            if (err < best_err) {  // ties keep the lowest index
                best_err = err;
                best = c;
            }
        }
        used[best] = true;
        selected.push_back(best);
        base.noalias() += theta_pool.row(best).transpose() * theta_pool.row(best);
        (void)m;
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

}  // namespace

CandidatePool build_candidate_pool(const MatrixXd& matrix, Index l) {
    const Index rows = matrix.rows(), cols = matrix.cols();
    if (l < 1) throw std::invalid_argument("build_candidate_pool: l must be >= 1");
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("build_candidate_pool: empty matrix");

    CandidatePool pool;
    const bool gram_side_cols = cols <= rows;
    const Index g = gram_side_cols ? cols : rows;

    MatrixXd gram = MatrixXd::Zero(g, g);
    if (gram_side_cols) {
        gram.selfadjointView<Eigen::Lower>().rankUpdate(matrix.transpose());
    } else {
        gram.selfadjointView<Eigen::Lower>().rankUpdate(matrix);
    }
    gram = gram.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("build_candidate_pool: eigendecomposition failed");

    // ascending from Eigen; walk from the back for descending order
    const VectorXd& lam = es.eigenvalues();
    const double lam_max = std::max(lam.maxCoeff(), 0.0);
    const double lam_tol = lam_max * std::numeric_limits<double>::epsilon() *
                           static_cast<double>(std::max(rows, cols));
    Index rank = 0;
    for (Index i = g - 1; i >= 0; --i) {
        if (lam(i) > lam_tol) ++rank;
        else break;
    }
    pool.data_rank = rank;

    const Index keep = std::min(l, rank);
    pool.singular_values.resize(keep);
    MatrixXd u(rows, keep);
    for (Index j = 0; j < keep; ++j) {
        const Index src = g - 1 - j;
        const double sigma = std::sqrt(std::max(lam(src), 0.0));
        pool.singular_values(j) = sigma;
        if (gram_side_cols) {
            u.col(j) = matrix * (es.eigenvectors().col(src) / sigma);
        } else {
            u.col(j) = es.eigenvectors().col(src);
        }
    }

    if (gram_side_cols) {
        // Gram-route vectors lose orthonormality near the rank tolerance
        Eigen::HouseholderQR<MatrixXd> qr(u);
        u = qr.householderQ() * MatrixXd::Identity(rows, keep);
    }
    for (Index j = 0; j < keep; ++j) {
        Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < 0.0) u.col(j) = -u.col(j);
    }

    pool.basis = std::move(u);
    pool.coords.noalias() = pool.basis.transpose() * matrix;
    return pool;
}

std::vector<Index> greedy_select(const CandidatePool& pool, const MatrixXd& centered,
                                 Index n, Index l, double gamma,
                                 const TrainOptions& opts) {
    if (n < 1) throw std::invalid_argument("greedy_select: n must be >= 1");
    if (l < n) throw std::invalid_argument("greedy_select: need l >= n");
    if (l > pool.basis.cols())
        throw std::invalid_argument(
            "greedy_select: l exceeds the candidate pool (data rank " +
            std::to_string(pool.data_rank) + ")");

    const auto idx = subsample_indices(centered.cols(), opts.greedy_subsample);
    const MatrixXd centered_sub = select_columns(centered, idx);
    const MatrixXd theta_pool = select_columns(pool.coords.topRows(l), idx);
    return greedy_select_impl(theta_pool, centered_sub, n, l, gamma);
}

MatrixXd greedy_basis(const MatrixXd& centered, Index n, Index l, double gamma,
                      const TrainOptions& opts) {
    CandidatePool pool = build_candidate_pool(centered, l);
    if (pool.basis.cols() < l)
        throw std::invalid_argument("greedy_basis: l exceeds the data rank " +
                                    std::to_string(pool.data_rank));
    const auto sel = greedy_select(pool, centered, n, l, gamma, opts);
    MatrixXd v(pool.basis.rows(), n);
    for (Index j = 0; j < n; ++j) v.col(j) = pool.basis.col(sel[j]);
    return v;
}

MatrixXd fit_correction(const MatrixXd& S, const MatrixXd& V, const VectorXd& s0,
                        double gamma) {
    const Index N = S.rows(), M = S.cols(), n = V.cols();
    const Index p = n * n;
    if (V.rows() != N || s0.size() != N)
        throw std::invalid_argument("fit_correction: dimension mismatch");
    if (gamma < 0.0) throw std::invalid_argument("fit_correction: gamma < 0");
    if ((V.transpose() * V - MatrixXd::Identity(n, n)).norm() > 1e-6)
        throw std::invalid_argument("fit_correction: V must have orthonormal columns");

    MatrixXd hht = MatrixXd::Zero(p, p);
    MatrixXd rht = MatrixXd::Zero(N, p);
    const Index block = 512;
    for (Index c0 = 0; c0 < M; c0 += block) {
        const Index b = std::min(block, M - c0);
        MatrixXd sb = S.middleCols(c0, b);
        sb.colwise() -= s0;
        MatrixXd theta = V.transpose() * sb;
        MatrixXd hb = feature_matrix(theta);
        sb.noalias() -= V * theta;  // sb is now the projected residual block
        hht.selfadjointView<Eigen::Lower>().rankUpdate(hb);
        rht.noalias() += sb * hb.transpose();
    }
    hht = hht.selfadjointView<Eigen::Lower>();

    // gamma at or below the Gram's rounding noise makes the shifted normal
    // equations numerically singular: the shared Cholesky then amplifies
    // noise-level directions into O(1/gamma) garbage. Such a gamma is
    // indistinguishable from 0 in double precision, so those directions are
    // truncated pinv-style and the ridge filter acts on the resolvable ones.
    const double gram_noise = hht.trace() * std::numeric_limits<double>::epsilon();

    MatrixXd w(N, p);
    bool solved = false;
    if (gamma > gram_noise) {
        MatrixXd shifted = hht;
        shifted.diagonal().array() += gamma;
        Eigen::LDLT<MatrixXd> ldlt(shifted);
        if (ldlt.info() == Eigen::Success) {
            w = ldlt.solve(rht.transpose()).transpose();
            solved = true;
        }
    }
    if (!solved) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(hht);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("fit_correction: eigendecomposition failed");
        const VectorXd& lam = es.eigenvalues();
        const double tol = std::max(lam.maxCoeff(), 0.0) *
                           std::numeric_limits<double>::epsilon() *
                           static_cast<double>(std::max(p, M));
        VectorXd inv = VectorXd::Zero(p);
        for (Index i = 0; i < p; ++i) {
            if (lam(i) > tol) inv(i) = 1.0 / (lam(i) + gamma);
        }
        MatrixXd filt =
            es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
        w.noalias() = rht * filt;
    }

    w.noalias() -= V * (V.transpose() * w);  // pin V^T W = 0
    return w;
}

QuadraticManifold train_from_pool(const CandidatePool& pool, const MatrixXd& data,
                                  const VectorXd& s0, Index n, double gamma,
                                  Index l, const TrainOptions& opts) {
    if (n < 1) throw std::invalid_argument("train_manifold: n must be >= 1");
    if (gamma < 0.0) throw std::invalid_argument("train_manifold: gamma < 0");
    if (n > l) throw std::invalid_argument("train_manifold: n exceeds l");
    if (l > pool.basis.cols())
        throw std::invalid_argument("train_manifold: l exceeds the data rank " +
                                    std::to_string(pool.data_rank));

    std::vector<Index> sel;
    if (l == n) {
        sel.resize(n);
        std::iota(sel.begin(), sel.end(), Index{0});
    } else {
        const auto idx = subsample_indices(data.cols(), opts.greedy_subsample);
        MatrixXd centered_sub = select_columns(data, idx);
        centered_sub.colwise() -= s0;
        const MatrixXd theta_pool = select_columns(pool.coords.topRows(l), idx);
        sel = greedy_select_impl(theta_pool, centered_sub, n, l, gamma);
    }

    QuadraticManifold m;
    m.s0 = s0;
    m.gamma = gamma;
    m.V.resize(pool.basis.rows(), n);
    for (Index j = 0; j < n; ++j) m.V.col(j) = pool.basis.col(sel[j]);
    m.W = fit_correction(data, m.V, s0, gamma);
    validate_manifold(m);
    return m;
}

QuadraticManifold train_manifold(const MatrixXd& data, Index n, double gamma,
                                 Index l, const TrainOptions& opts) {
    if (n < 1) throw std::invalid_argument("train_manifold: n must be >= 1");
    if (n > l) throw std::invalid_argument("train_manifold: n exceeds l");
    if (l > std::min(data.rows(), data.cols()))
        throw std::invalid_argument("train_manifold: l exceeds min(N, M)");

    const VectorXd s0 = data.rowwise().mean();
    CandidatePool pool;
    {
        MatrixXd centered = data.colwise() - s0;
        pool = build_candidate_pool(centered, l);
    }
    if (pool.basis.cols() < l)
        throw std::invalid_argument("train_manifold: l exceeds the data rank " +
                                    std::to_string(pool.data_rank));
    return train_from_pool(pool, data, s0, n, gamma, l, opts);
}

QuadraticManifold train_manifold(const SnapshotMatrix& snapshots, Index n,
                                 double gamma, Index l, const TrainOptions& opts) {
    return train_manifold(snapshots.data, n, gamma, l, opts);
}

VectorXd encode(const QuadraticManifold& m, const VectorXd& s) {
    if (s.size() != m.full_dim())
        throw std::invalid_argument("encode: state dimension mismatch");
    return m.V.transpose() * (s - m.s0);
}

VectorXd decode(const QuadraticManifold& m, const VectorXd& theta) {
    if (theta.size() != m.reduced_dim())
        throw std::invalid_argument("decode: weight dimension mismatch");
    return m.s0 + m.V * theta + m.W * kron_features(theta);
}

MatrixXd encode_columns(const QuadraticManifold& m, const MatrixXd& states) {
    if (states.rows() != m.full_dim())
        throw std::invalid_argument("encode_columns: state dimension mismatch");
    return m.V.transpose() * (states.colwise() - m.s0);
}

MatrixXd decode_columns(const QuadraticManifold& m, const MatrixXd& thetas) {
    if (thetas.rows() != m.reduced_dim())
        throw std::invalid_argument("decode_columns: weight dimension mismatch");
    MatrixXd h(m.reduced_dim() * m.reduced_dim(), thetas.cols());
    for (Index k = 0; k < thetas.cols(); ++k) h.col(k) = kron_features(thetas.col(k));
    MatrixXd out = m.V * thetas + m.W * h;
    out.colwise() += m.s0;
    return out;
}

ManifoldInvariants manifold_invariants(const QuadraticManifold& m) {
    const Index n = m.reduced_dim();
    ManifoldInvariants inv;
    inv.orthonormality_defect =
        (m.V.transpose() * m.V - MatrixXd::Identity(n, n)).norm();
    inv.cross_defect = (m.V.transpose() * m.W).norm();
    return inv;
}

void validate_manifold(const QuadraticManifold& m) {
    const auto inv = manifold_invariants(m);
    if (!(inv.orthonormality_defect < kOrthoTol))
        throw std::runtime_error("manifold invariant violated: ||V^T V - I||_F = " +
                                 std::to_string(inv.orthonormality_defect));
    if (!(inv.cross_defect < kCrossTol))
        throw std::runtime_error("manifold invariant violated: ||V^T W||_F = " +
                                 std::to_string(inv.cross_defect));
}

const char* model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::wave2d: return "wave2d";
        case ModelKind::vlasov: return "vlasov";
        case ModelKind::burgers: return "burgers";
    }
    return "unknown";
}

ModelKind model_from_name(const std::string& name) {
    if (name == "wave2d") return ModelKind::wave2d;
    if (name == "vlasov") return ModelKind::vlasov;
    if (name == "burgers") return ModelKind::burgers;
    throw std::invalid_argument("unknown model kind: " + name);
}

}  // namespace qmng
