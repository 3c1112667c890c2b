#include "qmng/io.hpp"

#include <json.hpp>

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmng {

namespace {

using nlohmann::json;

void require_little_endian() {
    if constexpr (std::endian::native != std::endian::little) {
        throw std::runtime_error("binary I/O requires a little-endian host");
    }
}

struct Writer {
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        require_little_endian();
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
    }
    void magic(const char m[4]) { out.write(m, 4); }
    void u32(std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
    void u64(std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
    void f64(double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
    void doubles(const double* p, std::size_t count) {
        out.write(reinterpret_cast<const char*>(p), 8 * count);
    }
    void bytes(const char* p, std::size_t count) { out.write(p, count); }
    std::ofstream out;
};

struct Reader {
    explicit Reader(const std::string& path) : in(path, std::ios::binary), file(path) {
        require_little_endian();
        if (!in) throw std::runtime_error("cannot open for reading: " + path);
    }
    void magic(const char expect[4]) {
        char got[4];
        in.read(got, 4);
        if (!in || std::memcmp(got, expect, 4) != 0)
            throw std::runtime_error(file + ": bad magic bytes");
    }
    std::uint32_t u32() {
        std::uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        check();
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        in.read(reinterpret_cast<char*>(&v), 8);
        check();
        return v;
    }
    double f64() {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        check();
        return v;
    }
    void doubles(double* p, std::size_t count) {
        in.read(reinterpret_cast<char*>(p), 8 * count);
        check();
    }
    void bytes(char* p, std::size_t count) {
        in.read(p, count);
        check();
    }
    void check() {
        if (!in) throw std::runtime_error(file + ": truncated file");
    }
    std::ifstream in;
    std::string file;
};

constexpr std::uint32_t kFormatVersion = 1;

void write_grid(Writer& w, const Grid& g, ModelKind kind) {
    w.u32(static_cast<std::uint32_t>(g.dim));
    for (int a = 0; a < 2; ++a) {
        w.f64(g.lo[a]);
        w.f64(g.hi[a]);
        w.u64(static_cast<std::uint64_t>(g.npts[a]));
    }
    // state packing tag (wave packs the three fields block-wise)
    char packing[8] = {};
    std::snprintf(packing, sizeof(packing), "%s",
                  kind == ModelKind::wave2d ? "rho-v12" : "scalar");
    w.bytes(packing, 8);
}

Grid read_grid(Reader& r) {
    Grid g;
    g.dim = static_cast<int>(r.u32());
    for (int a = 0; a < 2; ++a) {
        g.lo[a] = r.f64();
        g.hi[a] = r.f64();
        g.npts[a] = static_cast<Index>(r.u64());
    }
    char packing[8];
    r.bytes(packing, 8);
    return g;
}

std::string sidecar_path(const std::string& path) { return path + ".json"; }

}  // namespace

void save_manifold(const std::string& path, const QuadraticManifold& m,
                   const ManifoldProvenance& prov) {
    Writer w(path);
    w.magic("QMNF");
    w.u32(kFormatVersion);
    w.u64(static_cast<std::uint64_t>(m.full_dim()));
    w.u64(static_cast<std::uint64_t>(m.reduced_dim()));
    w.doubles(m.s0.data(), m.s0.size());
    w.doubles(m.V.data(), m.V.size());  // column-major
    w.doubles(m.W.data(), m.W.size());

    json side{{"gamma", prov.gamma},
              {"candidate_pool", prov.candidate_pool},
              {"source", prov.source}};
    std::ofstream js(sidecar_path(path));
    js << side.dump(2) << "\n";
}

QuadraticManifold load_manifold(const std::string& path) {
    Reader r(path);
    r.magic("QMNF");
    if (r.u32() != kFormatVersion)
        throw std::runtime_error(path + ": unsupported format version");
    const Index n_full = static_cast<Index>(r.u64());
    const Index n_red = static_cast<Index>(r.u64());
    QuadraticManifold m;
    m.s0.resize(n_full);
    m.V.resize(n_full, n_red);
    m.W.resize(n_full, n_red * n_red);
    r.doubles(m.s0.data(), m.s0.size());
    r.doubles(m.V.data(), m.V.size());
    r.doubles(m.W.data(), m.W.size());
    if (auto prov = load_manifold_provenance(path)) m.gamma = prov->gamma;
    return m;
}

std::optional<ManifoldProvenance> load_manifold_provenance(const std::string& path) {
    std::ifstream js(sidecar_path(path));
    if (!js) return std::nullopt;
    json side = json::parse(js, nullptr, false);
    if (side.is_discarded()) return std::nullopt;
    ManifoldProvenance prov;
    prov.gamma = side.value("gamma", 0.0);
    prov.candidate_pool = side.value("candidate_pool", Index{0});
    prov.source = side.value("source", "");
    return prov;
}

void save_snapshots(const std::string& path, const SnapshotMatrix& snaps) {
    Writer w(path);
    w.magic("QSNP");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(snaps.kind));
    w.u64(static_cast<std::uint64_t>(snaps.data.rows()));
    w.u64(static_cast<std::uint64_t>(snaps.data.cols()));
    w.u64(static_cast<std::uint64_t>(snaps.steps()));
    w.u64(static_cast<std::uint64_t>(snaps.param_count()));
    write_grid(w, snaps.grid, snaps.kind);
    w.doubles(snaps.times.data(), snaps.times.size());
    w.doubles(snaps.params.data(), snaps.params.size());
    w.doubles(snaps.data.data(), snaps.data.size());
}

SnapshotMatrix load_snapshots(const std::string& path) {
    Reader r(path);
    r.magic("QSNP");
    if (r.u32() != kFormatVersion)
        throw std::runtime_error(path + ": unsupported format version");
    SnapshotMatrix s;
    s.kind = static_cast<ModelKind>(r.u32());
    const Index rows = static_cast<Index>(r.u64());
    const Index cols = static_cast<Index>(r.u64());
    const Index steps = static_cast<Index>(r.u64());
    const Index params = static_cast<Index>(r.u64());
    if (steps * params != cols)
        throw std::runtime_error(path + ": inconsistent column count");
    s.grid = read_grid(r);
    s.times.resize(steps);
    s.params.resize(params);
    s.data.resize(rows, cols);
    r.doubles(s.times.data(), s.times.size());
    r.doubles(s.params.data(), s.params.size());
    r.doubles(s.data.data(), s.data.size());
    return s;
}

void save_operators(const std::string& path, const PrecomputedOperators& ops) {
    Writer w(path);
    w.magic("QOPS");
    w.u32(kFormatVersion);
    w.u64(static_cast<std::uint64_t>(ops.n));
    w.doubles(ops.gram.data(), ops.gram.size());
    w.doubles(ops.s0_hat.data(), ops.s0_hat.size());
    w.doubles(ops.a_hat.data(), ops.a_hat.size());
    w.doubles(ops.h_hat.data(), ops.h_hat.size());
    w.doubles(ops.s_op.data(), ops.s_op.size());
    w.doubles(ops.a_op.data(), ops.a_op.size());
    w.doubles(ops.h_op.data(), ops.h_op.size());
}

PrecomputedOperators load_operators(const std::string& path) {
    Reader r(path);
    r.magic("QOPS");
    if (r.u32() != kFormatVersion)
        throw std::runtime_error(path + ": unsupported format version");
    PrecomputedOperators ops;
    ops.n = static_cast<Index>(r.u64());
    const Index n = ops.n;
    ops.gram = Tensor4(n, n, n, n);
    ops.s0_hat.resize(n);
    ops.a_hat.resize(n, n);
    ops.h_hat.resize(n, n * n);
    ops.s_op.resize(n, n);
    ops.a_op = Tensor3(n, n, n);
    ops.h_op = Tensor3(n, n, n * n);
    r.doubles(ops.gram.data(), ops.gram.size());
    r.doubles(ops.s0_hat.data(), ops.s0_hat.size());
    r.doubles(ops.a_hat.data(), ops.a_hat.size());
    r.doubles(ops.h_hat.data(), ops.h_hat.size());
    r.doubles(ops.s_op.data(), ops.s_op.size());
    r.doubles(ops.a_op.data(), ops.a_op.size());
    r.doubles(ops.h_op.data(), ops.h_op.size());
    return ops;
}

void save_trajectory(const std::string& csv_path, const ReducedTrajectory& traj,
                     const TrajectoryExtra& extra) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + csv_path);
    const Index n = traj.states.rows();
    out << "t";
    for (Index i = 1; i <= n; ++i) out << ",theta_" << i;
    out << "\n";
    char buf[32];
    for (Index k = 0; k < traj.states.cols(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[k]);
        out << buf;
        for (Index i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.states(i, k));
            out << "," << buf;
        }
        out << "\n";
    }

    json side{{"scheme", scheme_name(traj.scheme)},
              {"dt", traj.dt},
              {"mu", traj.mu},
              {"steps_completed", traj.steps_completed},
              {"unstable", traj.unstable},
              {"online_seconds", traj.online_seconds},
              {"rank_deficiency_count", traj.rank_deficiency_count}};
    if (extra.collocation_m) side["collocation_m"] = *extra.collocation_m;
    if (extra.strategy) side["strategy"] = *extra.strategy;
    if (extra.seed) side["seed"] = *extra.seed;
    std::ofstream js(sidecar_path(csv_path));
    js << side.dump(2) << "\n";
}

ReducedTrajectory load_trajectory_csv(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open for reading: " + csv_path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(csv_path + ": empty trajectory file");
    Index n = -1;
    std::vector<double> times;
    std::vector<double> flat;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (n < 0) n = static_cast<Index>(row.size()) - 1;
        if (static_cast<Index>(row.size()) != n + 1)
            throw std::runtime_error(csv_path + ": ragged trajectory row");
        times.push_back(row[0]);
        flat.insert(flat.end(), row.begin() + 1, row.end());
    }
    ReducedTrajectory traj;
    traj.times = times;
    const Index cols = static_cast<Index>(times.size());
    traj.states.resize(n, cols);
    for (Index k = 0; k < cols; ++k)
        for (Index i = 0; i < n; ++i) traj.states(i, k) = flat[k * n + i];
    traj.steps_completed = cols > 0 ? cols - 1 : 0;
    if (cols > 1) traj.dt = times[1] - times[0];

    std::ifstream js(sidecar_path(csv_path));
    if (js) {
        json side = json::parse(js, nullptr, false);
        if (!side.is_discarded()) {
            traj.unstable = side.value("unstable", false);
            traj.mu = side.value("mu", 0.0);
            traj.dt = side.value("dt", traj.dt);
            traj.online_seconds = side.value("online_seconds", 0.0);
            traj.rank_deficiency_count = side.value("rank_deficiency_count", Index{0});
            if (side.value("scheme", "rk4") == std::string("euler"))
                traj.scheme = Scheme::euler;
        }
    }
    return traj;
}

}  // namespace qmng
