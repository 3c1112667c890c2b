// Binary persistence for manifolds, snapshots, and precomputed operators,
// plus CSV trajectory/report export. All binary payloads are little-endian
// f64; headers carry magic bytes and a format version.
#pragma once

#include "qmng/manifold.hpp"
#include "qmng/reduced_vector.hpp"

#include <optional>
#include <string>

namespace qmng {

struct ManifoldProvenance {
    double gamma = 0.0;
    Index candidate_pool = 0;
    std::string source;
};

/// "QMNF" file plus a .json sidecar with gamma, l, and provenance.
void save_manifold(const std::string& path, const QuadraticManifold& m,
                   const ManifoldProvenance& prov);
QuadraticManifold load_manifold(const std::string& path);
std::optional<ManifoldProvenance> load_manifold_provenance(const std::string& path);

/// "QSNP" file: model kind, dimensions, grid descriptor (with the state
/// packing tag), stored times, parameters, and the column-major data block.
void save_snapshots(const std::string& path, const SnapshotMatrix& snaps);
SnapshotMatrix load_snapshots(const std::string& path);

/// "QOPS" file: all seven offline objects in declaration order.
void save_operators(const std::string& path, const PrecomputedOperators& ops);
PrecomputedOperators load_operators(const std::string& path);

/// Trajectory CSV with header t,theta_1..theta_n and a .json sidecar holding
/// scheme, step size, timings, the stability flag, and any extra fields
/// (collocation settings for the interpolated path).
struct TrajectoryExtra {
    std::optional<Index> collocation_m;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
};
void save_trajectory(const std::string& csv_path, const ReducedTrajectory& traj,
                     const TrajectoryExtra& extra = {});
ReducedTrajectory load_trajectory_csv(const std::string& csv_path);

}  // namespace qmng
