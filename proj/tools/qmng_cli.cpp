// Command-line front end for the reduced-model pipelines: snapshot
// generation, manifold training, operator precompute, online simulation,
// error evaluation, timing benchmarks, and the full sweep.
#include <CLI11.hpp>

#include "qmng/harness.hpp"

#include <cstdio>
#include <filesystem>

using namespace qmng;
namespace fs = std::filesystem;

namespace {

Scale scale_from_name(const std::string& name) {
    if (name == "desk") return Scale::desk;
    if (name == "paper") return Scale::paper;
    throw CLI::ValidationError("--scale", "must be desk or paper");
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "euler") return Scheme::euler;
    if (name == "rk4") return Scheme::rk4;
    throw CLI::ValidationError("--scheme", "must be euler or rk4");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadratic-manifold Neural Galerkin reduced models"};
    app.require_subcommand(1);

    std::uint64_t global_seed = 0;
    bool seed_given = false;
    app.add_option("--seed", global_seed, "Override every RNG seed")
        ->each([&](const std::string&) { seed_given = true; });

    // ---------------- generate ----------------
    struct {
        std::string model = "wave2d", scale = "desk", out;
        bool test_set = false;
        std::vector<double> params;
    } gen;
    auto* generate = app.add_subcommand(
        "generate", "Integrate the full model and store a snapshot file");
    generate->add_option("--model", gen.model, "wave2d | vlasov | burgers")->required();
    generate->add_option("--scale", gen.scale, "desk | paper");
    generate->add_flag("--test", gen.test_set, "Use the preset test parameters");
    generate->add_option("--params", gen.params, "Explicit parameter list");
    generate->add_option("--out", gen.out, "Output .qsnp path")->required();
    generate->callback([&]() {
        FullModelSpec spec =
            FullModelSpec::preset(model_from_name(gen.model), scale_from_name(gen.scale));
        std::vector<double> params = gen.params;
        if (params.empty()) params = gen.test_set ? spec.test_params : spec.train_params;
        SnapshotMatrix snaps =
            generate_snapshots(spec, params, spec.snapshot_subsample);
        save_snapshots(gen.out, snaps);
        std::printf("wrote %s: N=%ld, %ld columns (%zu parameters)\n", gen.out.c_str(),
                    static_cast<long>(snaps.data.rows()),
                    static_cast<long>(snaps.data.cols()), params.size());
    });

    // ---------------- train ----------------
    struct {
        std::string snapshots, out;
        Index n = 10;
        double gamma = 1e-6;
        Index l = 0;
        Index subsample = 500;
    } tr;
    auto* train = app.add_subcommand("train", "Train a quadratic manifold from snapshots");
    train->add_option("--snapshots", tr.snapshots)->required();
    train->add_option("--n", tr.n, "Reduced dimension")->required();
    train->add_option("--gamma", tr.gamma, "Ridge regularization weight");
    train->add_option("--l", tr.l, "Candidate pool size (0 = min(4n, rank))");
    train->add_option("--greedy-subsample", tr.subsample);
    train->add_option("--out", tr.out, "Output .qmnf path")->required();
    train->callback([&]() {
        SnapshotMatrix snaps = load_snapshots(tr.snapshots);
        TrainOptions opts;
        opts.greedy_subsample = tr.subsample;
        Index l = tr.l;
        QuadraticManifold m;
        if (l == 0) {
            const VectorXd s0 = snaps.data.rowwise().mean();
            MatrixXd centered = snaps.data.colwise() - s0;
            CandidatePool pool = build_candidate_pool(centered, 4 * tr.n);
            centered.resize(0, 0);
            l = std::min<Index>(4 * tr.n, pool.basis.cols());
            m = train_from_pool(pool, snaps.data, s0, tr.n, tr.gamma, l, opts);
        } else {
            m = train_manifold(snaps.data, tr.n, tr.gamma, l, opts);
        }
        m.gamma = tr.gamma;
        save_manifold(tr.out, m, {tr.gamma, l, "trained from " + tr.snapshots});
        const auto inv = manifold_invariants(m);
        std::printf("wrote %s: n=%ld, l=%ld, ||V'V-I||=%.2e, ||V'W||=%.2e\n",
                    tr.out.c_str(), static_cast<long>(tr.n), static_cast<long>(l),
                    inv.orthonormality_defect, inv.cross_defect);
    });

    // ---------------- precompute ----------------
    struct {
        std::string manifold, model = "wave2d", scale = "desk", out;
        double mu = 0.5;
        double budget_gb = 2.0;
    } pre;
    auto* precompute = app.add_subcommand(
        "precompute", "Assemble the online-efficient operators for a linear model");
    precompute->add_option("--manifold", pre.manifold)->required();
    precompute->add_option("--model", pre.model)->required();
    precompute->add_option("--scale", pre.scale);
    precompute->add_option("--mu", pre.mu, "Physics parameter for the system matrix");
    precompute->add_option("--budget-gb", pre.budget_gb, "Memory budget in GiB");
    precompute->add_option("--out", pre.out, "Output .qops path")->required();
    precompute->callback([&]() {
        FullModelSpec spec =
            FullModelSpec::preset(model_from_name(pre.model), scale_from_name(pre.scale));
        QuadraticManifold m = load_manifold(pre.manifold);
        SystemMatrix a = assemble_system_matrix(spec, pre.mu);
        PrecomputedOperators ops = precompute_linear(
            m, a, static_cast<std::size_t>(pre.budget_gb * (std::size_t(1) << 30)));
        save_operators(pre.out, ops);
        std::printf("wrote %s: n=%ld\n", pre.out.c_str(), static_cast<long>(ops.n));
    });

    // ---------------- simulate ----------------
    struct {
        std::string manifold, model = "wave2d", scale = "desk", method = "qmng-linear";
        std::string ops, out, strategy = "uniform-resampled", scheme = "rk4";
        double mu = 0.5;
        Index m_pts = 0;
        std::uint64_t seed = 0;
    } sim;
    auto* simulate = app.add_subcommand("simulate", "Integrate a reduced trajectory");
    simulate->add_option("--manifold", sim.manifold)->required();
    simulate->add_option("--model", sim.model)->required();
    simulate->add_option("--scale", sim.scale);
    simulate->add_option("--mu", sim.mu)->required();
    simulate->add_option("--method", sim.method,
                         "qmng | qmng-linear | constant-testspace | interp");
    simulate->add_option("--ops", sim.ops, "Precomputed .qops (else assembled here)");
    simulate->add_option("--m", sim.m_pts, "Collocation point count (interp)");
    simulate->add_option("--strategy", sim.strategy,
                         "equidistant | uniform-fixed | uniform-resampled");
    simulate->add_option("--collocation-seed", sim.seed);
    simulate->add_option("--scheme", sim.scheme, "euler | rk4");
    simulate->add_option("--out", sim.out, "Trajectory CSV path")->required();
    simulate->callback([&]() {
        FullModelSpec spec =
            FullModelSpec::preset(model_from_name(sim.model), scale_from_name(sim.scale));
        QuadraticManifold m = load_manifold(sim.manifold);
        const Scheme scheme = scheme_from_name(sim.scheme);
        const std::uint64_t seed = seed_given ? global_seed : sim.seed;

        ReducedTrajectory traj;
        TrajectoryExtra extra;
        if (sim.method == "qmng") {
            traj = simulate_qmng(spec, m, sim.mu, scheme);
        } else if (sim.method == "qmng-linear" || sim.method == "constant-testspace") {
            PrecomputedOperators ops;
            if (!sim.ops.empty()) {
                ops = load_operators(sim.ops);
            } else {
                ops = precompute_linear(m, assemble_system_matrix(spec, sim.mu));
            }
            traj = sim.method == "qmng-linear"
                       ? simulate_qmng_linear(spec, m, ops, sim.mu, scheme)
                       : simulate_constant_testspace(spec, m, sim.mu, &ops, scheme);
        } else if (sim.method == "interp") {
            if (sim.m_pts < 1)
                throw CLI::ValidationError("--m", "interp needs a point count");
            SplineBasis basis(m, spec.grid);
            InterpReducedModel::Options opts;
            opts.m = sim.m_pts;
            opts.strategy = strategy_from_name(sim.strategy);
            opts.seed = seed;
            traj = simulate_interp(spec, m, basis, sim.mu, opts, scheme);
            extra.collocation_m = sim.m_pts;
            extra.strategy = sim.strategy;
            extra.seed = seed;
        } else {
            throw CLI::ValidationError("--method", "unknown method " + sim.method);
        }
        save_trajectory(sim.out, traj, extra);
        std::printf("wrote %s: %ld steps, %s, online %.3fs\n", sim.out.c_str(),
                    static_cast<long>(traj.steps_completed),
                    traj.unstable ? "UNSTABLE" : "stable", traj.online_seconds);
    });

    // ---------------- evaluate ----------------
    struct {
        std::string manifold, trajectory, test;
        Index param_index = 0;
        bool recon = false;
        bool literal_sum = false;
    } ev;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Relative error of a trajectory (or reconstruction) vs. test data");
    evaluate->add_option("--manifold", ev.manifold)->required();
    evaluate->add_option("--test", ev.test, "Test snapshot .qsnp")->required();
    evaluate->add_option("--trajectory", ev.trajectory, "Trajectory CSV");
    evaluate->add_option("--param-index", ev.param_index);
    evaluate->add_flag("--reconstruction", ev.recon,
                       "Score decode(encode(.)) on the whole test set");
    evaluate->add_flag("--literal-sum", ev.literal_sum,
                       "Per-parameter sums without the 1/K average");
    evaluate->callback([&]() {
        QuadraticManifold m = load_manifold(ev.manifold);
        SnapshotMatrix test = load_snapshots(ev.test);
        if (ev.recon) {
            ErrorStats stats = reconstruction_error_stats(m, test, !ev.literal_sum);
            std::printf("reconstruction error: mean %.6e, std %.6e\n", stats.mean,
                        stats.stddev);
            return;
        }
        if (ev.trajectory.empty())
            throw CLI::ValidationError("--trajectory", "required unless --reconstruction");
        ReducedTrajectory traj = load_trajectory_csv(ev.trajectory);
        const double err =
            trajectory_error(m, traj, test, ev.param_index, !ev.literal_sum);
        std::printf("relative error (parameter %ld): %.6e\n",
                    static_cast<long>(ev.param_index), err);
    });

    // ---------------- benchmark ----------------
    struct {
        std::string model = "wave2d", out;
        std::vector<Index> sizes{64, 128};
        std::vector<Index> n_values{10, 20, 40};
        Index reps = 20;
        std::uint64_t seed = 1;
    } bm;
    auto* benchmark = app.add_subcommand(
        "benchmark", "Per-step online timings across model sizes and n");
    benchmark->add_option("--model", bm.model, "wave2d | vlasov");
    benchmark->add_option("--sizes", bm.sizes, "Grid points per axis");
    benchmark->add_option("--n-values", bm.n_values);
    benchmark->add_option("--reps", bm.reps);
    benchmark->add_option("--out", bm.out, "Output CSV path");
    benchmark->callback([&]() {
        BenchmarkResult res =
            benchmark_online(model_from_name(bm.model), bm.sizes, bm.n_values, bm.reps,
                             seed_given ? global_seed : bm.seed);
        for (const BenchmarkRow& r : res.rows) {
            std::printf("N=%-8ld n=%-3ld reduced %.3e s/step, full %.3e s/step, "
                        "speedup %.1fx\n",
                        static_cast<long>(r.full_dim), static_cast<long>(r.n),
                        r.reduced_step_seconds, r.full_step_seconds,
                        r.full_step_seconds / r.reduced_step_seconds);
        }
        if (!bm.out.empty()) write_benchmark_csv(bm.out, res);
    });

    // ---------------- sweep ----------------
    struct {
        std::string model = "wave2d", scale = "desk", strategy = "uniform-resampled";
        std::string scheme = "rk4", out_dir = "qmng-out";
        std::vector<Index> n_values{5, 10};
        std::vector<Index> collocation_m;
        std::vector<std::string> methods{"qmng-linear"};
        double gamma = 1e-6;
        Index l = 0;
        Index greedy_subsample = 500;
        std::uint64_t seed = 0;
        bool literal_sum = false;
        bool fresh = false;
        bool no_trajectories = false;
    } sw;
    auto* sweep =
        app.add_subcommand("sweep", "Full offline/online pipeline with a report CSV");
    sweep->set_config("--config", "", "Read options from a key/value config file");
    sweep->add_option("--model", sw.model);
    sweep->add_option("--scale", sw.scale);
    sweep->add_option("--n-values", sw.n_values);
    sweep->add_option("--gamma", sw.gamma);
    sweep->add_option("--l", sw.l, "Candidate pool size (0 = min(4n, rank))");
    sweep->add_option("--methods", sw.methods);
    sweep->add_option("--collocation-m", sw.collocation_m);
    sweep->add_option("--strategy", sw.strategy);
    sweep->add_option("--greedy-subsample", sw.greedy_subsample);
    sweep->add_option("--collocation-seed", sw.seed);
    sweep->add_option("--scheme", sw.scheme);
    sweep->add_option("--out-dir", sw.out_dir);
    sweep->add_flag("--literal-sum", sw.literal_sum);
    sweep->add_flag("--fresh", sw.fresh, "Ignore cached artifacts");
    sweep->add_flag("--no-trajectories", sw.no_trajectories);
    sweep->callback([&]() {
        ExperimentConfig cfg;
        cfg.model = model_from_name(sw.model);
        cfg.scale = scale_from_name(sw.scale);
        cfg.n_values = sw.n_values;
        cfg.gamma = sw.gamma;
        cfg.candidate_pool = sw.l;
        cfg.methods = sw.methods;
        cfg.collocation_m = sw.collocation_m;
        cfg.strategy = strategy_from_name(sw.strategy);
        cfg.seed = seed_given ? global_seed : sw.seed;
        cfg.scheme = scheme_from_name(sw.scheme);
        cfg.output_dir = sw.out_dir;
        cfg.divide_by_steps = !sw.literal_sum;
        cfg.greedy_subsample = sw.greedy_subsample;
        cfg.reuse_artifacts = !sw.fresh;
        cfg.save_trajectories = !sw.no_trajectories;
        ErrorReport report = run_experiment(cfg);
        std::printf("%zu report rows -> %s/report.csv\n", report.rows.size(),
                    sw.out_dir.c_str());
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
