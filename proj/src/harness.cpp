#include "qmng/harness.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qmng {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

volatile double g_timing_sink = 0.0;

template <class F>
double median_call_seconds(F&& call, Index repetitions, Index inner) {
    std::vector<double> samples(repetitions);
    for (Index r = 0; r < repetitions; ++r) {
        const double t0 = now_seconds();
        for (Index i = 0; i < inner; ++i) call();
        samples[r] = (now_seconds() - t0) / static_cast<double>(inner);
    }
    std::nth_element(samples.begin(), samples.begin() + repetitions / 2, samples.end());
    return samples[repetitions / 2];
}

struct CellTiming {
    double offline = 0.0;
    double online = 0.0;
};

}  // namespace

ErrorStats relative_error(const MatrixXd& ref, const MatrixXd& approx,
                          Index param_count, bool divide_by_steps) {
    if (ref.rows() != approx.rows() || ref.cols() != approx.cols())
        throw std::invalid_argument("relative_error: trajectory shape mismatch");
    if (param_count < 1 || ref.cols() % param_count != 0)
        throw std::invalid_argument("relative_error: bad parameter grouping");
    const Index steps = ref.cols() / param_count;

    ErrorStats stats;
    stats.per_param.resize(param_count);
    for (Index p = 0; p < param_count; ++p) {
        double acc = 0.0;
        Index included = 0;
        for (Index k = 0; k < steps; ++k) {
            const Index col = p * steps + k;
            const double denom = ref.col(col).norm();
            if (denom == 0.0) {
                ++stats.excluded_steps;
                std::fprintf(stderr,
                             "warning: zero-norm reference state at column %ld "
                             "excluded from the relative error\n",
                             static_cast<long>(col));
                continue;
            }
            acc += (ref.col(col) - approx.col(col)).norm() / denom;
            ++included;
        }
        stats.per_param[p] =
            divide_by_steps && included > 0 ? acc / static_cast<double>(included) : acc;
    }

    double mean = 0.0;
    for (double e : stats.per_param) mean += e;
    mean /= static_cast<double>(param_count);
    double var = 0.0;
    for (double e : stats.per_param) var += (e - mean) * (e - mean);
    stats.mean = mean;
    stats.stddev = std::sqrt(var / static_cast<double>(param_count));
    return stats;
}

ErrorStats reconstruction_error_stats(const QuadraticManifold& m,
                                      const SnapshotMatrix& test,
                                      bool divide_by_steps) {
    const MatrixXd approx = decode_columns(m, encode_columns(m, test.data));
    return relative_error(test.data, approx, test.param_count(), divide_by_steps);
}

double reconstruction_error(const QuadraticManifold& m, const SnapshotMatrix& test) {
    return reconstruction_error_stats(m, test).mean;
}

ReducedTrajectory simulate_qmng(const FullModelSpec& spec, const QuadraticManifold& m,
                                double mu, Scheme scheme) {
    validate_manifold(m);
    auto full = [&spec, mu](const VectorXd& q) { return model_rhs(spec, q, mu); };
    auto rhs = [&m, &full](const VectorXd& theta, double) {
        return qmng_rhs(m, full, theta, false);
    };
    const VectorXd theta0 = encode(m, initial_condition(spec, mu));
    ReducedTrajectory traj =
        integrate_reduced(rhs, theta0, spec.dt, spec.total_steps(), scheme);
    traj.mu = mu;
    return traj;
}

ReducedTrajectory simulate_qmng_linear(const FullModelSpec& spec,
                                       const QuadraticManifold& m,
                                       const PrecomputedOperators& ops, double mu,
                                       Scheme scheme) {
    LinearReducedWorkspace work;
    auto rhs = [&ops, &work](const VectorXd& theta, double) {
        return linear_reduced_rhs(ops, theta, work);
    };
    const VectorXd theta0 = encode(m, initial_condition(spec, mu));
    ReducedTrajectory traj =
        integrate_reduced(rhs, theta0, spec.dt, spec.total_steps(), scheme);
    traj.mu = mu;
    return traj;
}

ReducedTrajectory simulate_constant_testspace(const FullModelSpec& spec,
                                              const QuadraticManifold& m, double mu,
                                              const PrecomputedOperators* ops,
                                              Scheme scheme) {
    ReducedRhs rhs;
    if (ops != nullptr) {
        rhs = [ops](const VectorXd& theta, double) {
            return constant_testspace_linear_rhs(*ops, theta);
        };
    } else {
        auto full = [&spec, mu](const VectorXd& q) { return model_rhs(spec, q, mu); };
        rhs = [&m, full](const VectorXd& theta, double) {
            return constant_testspace_rhs(m, full, theta);
        };
    }
    const VectorXd theta0 = encode(m, initial_condition(spec, mu));
    ReducedTrajectory traj =
        integrate_reduced(rhs, theta0, spec.dt, spec.total_steps(), scheme);
    traj.mu = mu;
    return traj;
}

ReducedTrajectory simulate_interp(const FullModelSpec& spec,
                                  const QuadraticManifold& m, const SplineBasis& basis,
                                  double mu, const InterpReducedModel::Options& opts,
                                  Scheme scheme) {
    if (spec.kind != ModelKind::burgers)
        throw std::invalid_argument("simulate_interp: pointwise form only for burgers");
    InterpReducedModel model(basis, PointwiseRhs::burgers(spec.burgers_alpha), mu, opts);
    auto rhs = [&model](const VectorXd& theta, double t) { return model.rhs(theta, t); };
    auto step = [&model](Index k) { model.begin_step(k); };
    const VectorXd theta0 = encode(m, initial_condition(spec, mu));
    ReducedTrajectory traj =
        integrate_reduced(rhs, theta0, spec.dt, spec.total_steps(), scheme, step);
    traj.mu = mu;
    traj.rank_deficiency_count = model.rank_deficiency_count();
    return traj;
}

double trajectory_error(const QuadraticManifold& m, const ReducedTrajectory& traj,
                        const SnapshotMatrix& test, Index param_index,
                        bool divide_by_steps) {
    const Index steps = test.steps();
    MatrixXd thetas(m.reduced_dim(), steps);
    for (Index k = 0; k < steps; ++k) {
        const Index idx = static_cast<Index>(std::llround(test.times[k] / traj.dt));
        if (idx > traj.steps_completed)
            return std::numeric_limits<double>::infinity();
        thetas.col(k) = traj.states.col(idx);
    }
    const MatrixXd approx = decode_columns(m, thetas);
    ErrorStats stats = relative_error(test.trajectory(param_index), approx, 1,
                                      divide_by_steps);
    return stats.per_param[0];
}

namespace {

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n_values.empty())
        throw std::invalid_argument("run_experiment: empty n list");
    const bool linear = cfg.model != ModelKind::burgers;
    for (const std::string& method : cfg.methods) {
        if (method != "qmng" && method != "qmng-linear" &&
            method != "constant-testspace" && method != "interp")
            throw std::invalid_argument("run_experiment: unknown method " + method);
        if (method == "qmng-linear" && !linear)
            throw std::invalid_argument(
                "run_experiment: qmng-linear requires a linear model");
        if (method == "interp" && cfg.model != ModelKind::burgers)
            throw std::invalid_argument("run_experiment: interp requires burgers");
    }
    if (cfg.candidate_pool > 0) {
        for (Index n : cfg.n_values)
            if (n > cfg.candidate_pool)
                throw std::invalid_argument(
                    "run_experiment: n exceeds the candidate pool l");
    }
    if (cfg.gamma < 0.0) throw std::invalid_argument("run_experiment: gamma < 0");
    const bool wants_interp =
        std::find(cfg.methods.begin(), cfg.methods.end(), "interp") != cfg.methods.end();
    if (wants_interp && cfg.collocation_m.empty())
        throw std::invalid_argument("run_experiment: interp requires collocation m");
}

SnapshotMatrix load_or_generate(const ExperimentConfig& cfg, const FullModelSpec& spec,
                                const std::vector<double>& params,
                                const std::string& tag) {
    const fs::path path = fs::path(cfg.output_dir) /
                          (std::string(model_name(cfg.model)) + "_" + tag + ".qsnp");
    if (cfg.reuse_artifacts && fs::exists(path)) {
        SnapshotMatrix snaps = load_snapshots(path.string());
        if (snaps.kind == spec.kind && snaps.data.rows() == spec.state_dim() &&
            snaps.params == params &&
            snaps.steps() == spec.total_steps() / spec.snapshot_subsample + 1) {
            return snaps;
        }
        std::fprintf(stderr, "note: %s does not match the preset, regenerating\n",
                     path.string().c_str());
    }
    SnapshotMatrix snaps = generate_snapshots(spec, params, spec.snapshot_subsample);
    save_snapshots(path.string(), snaps);
    return snaps;
}

std::string manifold_file(const ExperimentConfig& cfg, Index n, Index l) {
    std::ostringstream name;
    name << model_name(cfg.model) << "_n" << n << "_g" << format_double(cfg.gamma)
         << "_l" << l << ".qmnf";
    return (fs::path(cfg.output_dir) / name.str()).string();
}

}  // namespace

ErrorReport run_experiment(const ExperimentConfig& cfg) {
    return run_experiment(cfg, FullModelSpec::preset(cfg.model, cfg.scale));
}

ErrorReport run_experiment(const ExperimentConfig& cfg, const FullModelSpec& spec) {
    validate_config(cfg);
    if (spec.kind != cfg.model)
        throw std::invalid_argument("run_experiment: spec/config model mismatch");
    fs::create_directories(cfg.output_dir);

    const SnapshotMatrix train = load_or_generate(cfg, spec, spec.train_params, "train");
    const SnapshotMatrix test = load_or_generate(cfg, spec, spec.test_params, "test");
    const Index param_count = test.param_count();

    const Index n_max = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    const Index l_request = cfg.candidate_pool > 0 ? cfg.candidate_pool : 4 * n_max;
    const VectorXd s0 = train.data.rowwise().mean();
    CandidatePool pool;
    {
        MatrixXd centered = train.data.colwise() - s0;
        pool = build_candidate_pool(centered, l_request);
    }
    if (cfg.candidate_pool > 0 && pool.basis.cols() < cfg.candidate_pool)
        throw std::invalid_argument("run_experiment: l exceeds the data rank " +
                                    std::to_string(pool.data_rank));

    const bool linear = spec.is_linear();
    const bool wants_linear_ops =
        linear &&
        std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const std::string& s) {
            return s == "qmng-linear" || s == "constant-testspace";
        });

    SystemMatrix a_shared;
    std::vector<SystemMatrix> a_per_param;
    if (wants_linear_ops) {
        if (spec.kind == ModelKind::wave2d) {
            a_shared = assemble_system_matrix(spec, test.params[0]);
        } else {
            for (double mu : test.params)
                a_per_param.push_back(assemble_system_matrix(spec, mu));
        }
    }

    TrainOptions train_opts;
    train_opts.greedy_subsample = cfg.greedy_subsample;

    ErrorReport report;
    for (Index n : cfg.n_values) {
        const Index l_n = cfg.candidate_pool > 0
                              ? cfg.candidate_pool
                              : std::min<Index>(4 * n, pool.basis.cols());
        QuadraticManifold manifold;
        double train_seconds = 0.0;
        const std::string mpath = manifold_file(cfg, n, l_n);
        bool loaded = false;
        if (cfg.reuse_artifacts && fs::exists(mpath)) {
            QuadraticManifold cand = load_manifold(mpath);
            if (cand.full_dim() == spec.state_dim() && cand.reduced_dim() == n &&
                cand.gamma == cfg.gamma) {
                manifold = std::move(cand);
                validate_manifold(manifold);
                loaded = true;
            }
        }
        if (!loaded) {
            const double t0 = now_seconds();
            manifold = train_from_pool(pool, train.data, s0, n, cfg.gamma, l_n,
                                       train_opts);
            train_seconds = now_seconds() - t0;
            save_manifold(mpath, manifold,
                          {cfg.gamma, l_n,
                           std::string(model_name(cfg.model)) + " " +
                               (cfg.scale == Scale::desk ? "desk" : "paper")});
        }

        {
            ErrorStats rec = reconstruction_error_stats(manifold, test,
                                                        cfg.divide_by_steps);
            report.rows.push_back({model_name(cfg.model), n, "reconstruction",
                                   cfg.gamma, 0, rec.mean, rec.stddev, 0, 0.0,
                                   train_seconds});
        }

        // parameter-dependent precompute, shared by the two linear methods
        std::vector<PrecomputedOperators> ops;
        double precompute_seconds = 0.0;
        if (wants_linear_ops) {
            const double t0 = now_seconds();
            const KroneckerCache cache = build_kronecker_cache(manifold);
            if (spec.kind == ModelKind::wave2d) {
                ops.push_back(precompute_linear(manifold, a_shared, cache));
            } else {
                for (Index p = 0; p < param_count; ++p)
                    ops.push_back(precompute_linear(manifold, a_per_param[p], cache));
            }
            precompute_seconds = now_seconds() - t0;
        }
        auto ops_for = [&](Index p) -> const PrecomputedOperators* {
            if (ops.empty()) return nullptr;
            return ops.size() == 1 ? &ops[0] : &ops[p];
        };

        std::optional<SplineBasis> basis;
        double basis_seconds = 0.0;
        if (std::find(cfg.methods.begin(), cfg.methods.end(), "interp") !=
            cfg.methods.end()) {
            const double t0 = now_seconds();
            basis.emplace(manifold, spec.grid);
            basis_seconds = now_seconds() - t0;
        }

        for (const std::string& method : cfg.methods) {
            const std::vector<Index> m_values =
                method == "interp" ? cfg.collocation_m : std::vector<Index>{0};
            for (Index m_pts : m_values) {
                ReportRow row{model_name(cfg.model), n, method, cfg.gamma, m_pts,
                              0.0, 0.0, 0, 0.0, train_seconds};
                std::vector<double> errors;
                try {
                    for (Index p = 0; p < param_count; ++p) {
                        const double mu = test.params[p];
                        ReducedTrajectory traj;
                        if (method == "qmng") {
                            traj = simulate_qmng(spec, manifold, mu, cfg.scheme);
                        } else if (method == "qmng-linear") {
                            traj = simulate_qmng_linear(spec, manifold, *ops_for(p),
                                                        mu, cfg.scheme);
                            row.offline_seconds = train_seconds + precompute_seconds;
                        } else if (method == "constant-testspace") {
                            traj = simulate_constant_testspace(spec, manifold, mu,
                                                               ops_for(p), cfg.scheme);
                            if (!ops.empty())
                                row.offline_seconds = train_seconds + precompute_seconds;
                        } else {
                            InterpReducedModel::Options opts;
                            opts.m = m_pts;
                            opts.strategy = cfg.strategy;
                            opts.seed = cfg.seed + static_cast<std::uint64_t>(p);
                            traj = simulate_interp(spec, manifold, *basis, mu, opts,
                                                   cfg.scheme);
                            row.offline_seconds = train_seconds + basis_seconds;
                        }
                        row.online_seconds += traj.online_seconds;

                        double err = std::numeric_limits<double>::infinity();
                        if (!traj.unstable) {
                            err = trajectory_error(manifold, traj, test, p,
                                                   cfg.divide_by_steps);
                        }
                        if (std::isfinite(err)) {
                            errors.push_back(err);
                        } else {
                            ++row.unstable_count;
                        }

                        if (cfg.save_trajectories) {
                            std::ostringstream name;
                            name << model_name(cfg.model) << "_n" << n << "_" << method;
                            if (method == "interp")
                                name << "_m" << m_pts << "_"
                                     << strategy_name(cfg.strategy);
                            name << "_mu" << p << ".csv";
                            TrajectoryExtra extra;
                            if (method == "interp") {
                                extra.collocation_m = m_pts;
                                extra.strategy = strategy_name(cfg.strategy);
                                extra.seed = cfg.seed + static_cast<std::uint64_t>(p);
                            }
                            save_trajectory(
                                (fs::path(cfg.output_dir) / name.str()).string(), traj,
                                extra);
                        }
                    }
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "sweep cell (%s, n=%ld, %s) failed: %s\n",
                                 model_name(cfg.model), static_cast<long>(n),
                                 method.c_str(), e.what());
                    continue;  // abandon this cell, keep the sweep going
                }

                if (!errors.empty()) {
                    double mean = 0.0;
                    for (double e : errors) mean += e;
                    mean /= static_cast<double>(errors.size());
                    double var = 0.0;
                    for (double e : errors) var += (e - mean) * (e - mean);
                    row.error_mean = mean;
                    row.error_std = std::sqrt(var / static_cast<double>(errors.size()));
                } else {
                    row.error_mean = std::numeric_limits<double>::quiet_NaN();
                    row.error_std = std::numeric_limits<double>::quiet_NaN();
                }
                report.rows.push_back(std::move(row));
            }
        }
    }

    write_report_csv((fs::path(cfg.output_dir) / "report.csv").string(), report);
    return report;
}

void write_report_csv(const std::string& path, const ErrorReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "model,n,method,gamma,m,error_mean,error_std,unstable_count,"
           "online_seconds,offline_seconds\n";
    for (const ReportRow& r : report.rows) {
        out << r.model << "," << r.n << "," << r.method << ","
            << format_double(r.gamma) << "," << r.m << ","
            << format_double(r.error_mean) << "," << format_double(r.error_std) << ","
            << r.unstable_count << "," << format_double(r.online_seconds) << ","
            << format_double(r.offline_seconds) << "\n";
    }
}

QuadraticManifold synthetic_manifold(Index full_dim, Index n, double w_scale,
                                     std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> dist;
    auto randn = [&](Index r, Index c) {
        MatrixXd m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = dist(engine);
        return m;
    };
    QuadraticManifold m;
    Eigen::HouseholderQR<MatrixXd> qr(randn(full_dim, n));
    m.V = qr.householderQ() * MatrixXd::Identity(full_dim, n);
    m.W = w_scale * randn(full_dim, n * n);
    m.W -= m.V * (m.V.transpose() * m.W);
    m.s0 = 0.5 * randn(full_dim, 1);
    return m;
}

BenchmarkResult benchmark_online(ModelKind kind, std::span<const Index> sizes,
                                 std::span<const Index> n_values, Index repetitions,
                                 std::uint64_t seed) {
    if (kind == ModelKind::burgers)
        throw std::invalid_argument("benchmark_online: requires a linear model preset");
    if (repetitions < 3)
        throw std::invalid_argument("benchmark_online: need at least 3 repetitions");

    BenchmarkResult result;
    for (Index size : sizes) {
        FullModelSpec spec = kind == ModelKind::wave2d
                                 ? FullModelSpec::wave2d(size, 8.0, 1e-3, 10, 40)
                                 : FullModelSpec::vlasov(size, 3.2, 1e-3, 20, 40);
        const double mu = spec.test_params[2];
        const SystemMatrix a = assemble_system_matrix(spec, mu);

        VectorXd q = initial_condition(spec, mu);
        auto full_rhs = [&spec, mu](const VectorXd& state, double) {
            return model_rhs(spec, state, mu);
        };
        const double full_step = median_call_seconds(
            [&]() {
                q = rk4_step(full_rhs, q, 0.0, spec.dt);
                g_timing_sink += q(0);
            },
            repetitions, 1);

        for (Index n : n_values) {
            const QuadraticManifold manifold =
                synthetic_manifold(spec.state_dim(), n, 0.05,
                                   seed + static_cast<std::uint64_t>(97 * n + size));
            const PrecomputedOperators ops = precompute_linear(manifold, a);

            std::mt19937_64 engine(seed + static_cast<std::uint64_t>(n));
            std::normal_distribution<double> dist;
            VectorXd theta(n);
            for (Index i = 0; i < n; ++i) theta(i) = 0.3 * dist(engine);

            LinearReducedWorkspace work;
            auto call = [&]() {
                g_timing_sink += linear_reduced_rhs(ops, theta, work)(0);
            };
            call();  // warm the workspace
            const double t0 = now_seconds();
            call();
            const double probe = std::max(now_seconds() - t0, 1e-7);
            const Index inner =
                std::max<Index>(1, static_cast<Index>(std::ceil(2e-4 / probe)));
            const double reduced_step = median_call_seconds(call, repetitions, inner);

            result.rows.push_back({size, spec.state_dim(), n, reduced_step, full_step});
        }
    }
    return result;
}

void write_benchmark_csv(const std::string& path, const BenchmarkResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "pts_per_axis,full_dim,n,reduced_step_seconds,full_step_seconds\n";
    for (const BenchmarkRow& r : result.rows) {
        out << r.pts_per_axis << "," << r.full_dim << "," << r.n << ","
            << format_double(r.reduced_step_seconds) << ","
            << format_double(r.full_step_seconds) << "\n";
    }
}

}  // namespace qmng
