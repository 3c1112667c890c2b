// Experiment pipelines: error metrics, per-method trajectory simulation,
// the offline/online sweep with its report CSV, and the online-efficiency
// benchmark.
#pragma once

#include "qmng/full_models.hpp"
#include "qmng/io.hpp"
#include "qmng/reduced_interp.hpp"
#include "qmng/reduced_vector.hpp"

#include <span>
#include <string>
#include <vector>

namespace qmng {

struct ErrorStats {
    double mean = 0.0;
    double stddev = 0.0;  // over the test parameters
    std::vector<double> per_param;
    Index excluded_steps = 0;  // zero-norm reference states skipped
};

/// Time-averaged per-step relative 2-norm error, grouped parameter-major.
/// `divide_by_steps` off reproduces the literal per-parameter sum.
ErrorStats relative_error(const MatrixXd& ref, const MatrixXd& approx,
                          Index param_count, bool divide_by_steps = true);

/// relative_error of decode(encode(.)) applied column-wise to the test set.
ErrorStats reconstruction_error_stats(const QuadraticManifold& m,
                                      const SnapshotMatrix& test,
                                      bool divide_by_steps = true);
double reconstruction_error(const QuadraticManifold& m, const SnapshotMatrix& test);

// --- per-method trajectory simulation over the spec's full horizon ---

ReducedTrajectory simulate_qmng(const FullModelSpec& spec, const QuadraticManifold& m,
                                double mu, Scheme scheme = Scheme::rk4);
ReducedTrajectory simulate_qmng_linear(const FullModelSpec& spec,
                                       const QuadraticManifold& m,
                                       const PrecomputedOperators& ops, double mu,
                                       Scheme scheme = Scheme::rk4);
/// `ops` may be null; when provided (linear models) the precomputed constant
/// terms evaluate the baseline without touching dimension N.
ReducedTrajectory simulate_constant_testspace(const FullModelSpec& spec,
                                              const QuadraticManifold& m, double mu,
                                              const PrecomputedOperators* ops,
                                              Scheme scheme = Scheme::rk4);
ReducedTrajectory simulate_interp(const FullModelSpec& spec,
                                  const QuadraticManifold& m, const SplineBasis& basis,
                                  double mu, const InterpReducedModel::Options& opts,
                                  Scheme scheme = Scheme::rk4);

/// Decodes the reduced trajectory at the stored test times and returns the
/// time-averaged relative error against that parameter's reference
/// trajectory. Trajectories truncated before the final stored time give +inf.
double trajectory_error(const QuadraticManifold& m, const ReducedTrajectory& traj,
                        const SnapshotMatrix& test, Index param_index,
                        bool divide_by_steps = true);

// --- experiment sweep ---

struct ExperimentConfig {
    ModelKind model = ModelKind::burgers;
    Scale scale = Scale::desk;
    std::vector<Index> n_values{5, 10};
    double gamma = 1e-6;
    Index candidate_pool = 0;  // 0 = min(4n, data rank) per n
    std::vector<std::string> methods{"qmng-linear"};
    std::vector<Index> collocation_m;  // interp runs, one sweep cell per value
    CollocationStrategy strategy = CollocationStrategy::uniform_resampled;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::rk4;
    std::string output_dir = "qmng-out";
    bool divide_by_steps = true;
    Index greedy_subsample = 500;
    bool reuse_artifacts = true;  // reload matching snapshot/manifold files
    bool save_trajectories = true;
};

struct ReportRow {
    std::string model;
    Index n = 0;
    std::string method;
    double gamma = 0.0;
    Index m = 0;  // collocation points (interp rows only)
    double error_mean = 0.0;
    double error_std = 0.0;
    Index unstable_count = 0;
    double online_seconds = 0.0;
    double offline_seconds = 0.0;
};

struct ErrorReport {
    std::vector<ReportRow> rows;
};

/// generate -> train (per n) -> precompute -> simulate each test parameter
/// with each method -> evaluate. Artifacts land in cfg.output_dir; the
/// report CSV is written there as report.csv. A failing sweep cell aborts
/// only that cell.
ErrorReport run_experiment(const ExperimentConfig& cfg);
/// Same pipeline on an explicit model spec instead of the named preset.
ErrorReport run_experiment(const ExperimentConfig& cfg, const FullModelSpec& spec);

void write_report_csv(const std::string& path, const ErrorReport& report);

// --- online-efficiency benchmark ---

struct BenchmarkRow {
    Index pts_per_axis = 0;
    Index full_dim = 0;
    Index n = 0;
    double reduced_step_seconds = 0.0;
    double full_step_seconds = 0.0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
};

/// Median per-step time of the precomputed linear path across full-model
/// sizes and reduced dimensions, next to the full model's per-step time.
/// Manifolds are synthetic (seeded orthonormal V, complement-projected W);
/// the operators are precomputed from the real system matrices.
BenchmarkResult benchmark_online(ModelKind kind, std::span<const Index> sizes,
                                 std::span<const Index> n_values,
                                 Index repetitions = 20, std::uint64_t seed = 1);

void write_benchmark_csv(const std::string& path, const BenchmarkResult& result);

/// Seeded manifold with the trained invariants but random content; used by
/// the benchmark and by tests that need proper manifolds without training.
QuadraticManifold synthetic_manifold(Index full_dim, Index n, double w_scale,
                                     std::uint64_t seed);

}  // namespace qmng
