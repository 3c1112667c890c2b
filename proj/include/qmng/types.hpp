// Shared plain types: periodic grids and model tags.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace qmng {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ModelKind { wave2d = 0, vlasov = 1, burgers = 2 };

const char* model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

/// Equidistant periodic grid over [lo, hi) per axis, 1-D or 2-D.
/// In 2-D the axis-0 coordinate varies fastest in the flattened ordering.
struct Grid {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<Index, 2> npts{1, 1};

    double spacing(int axis) const {
        return (hi[axis] - lo[axis]) / static_cast<double>(npts[axis]);
    }
    Index points() const { return dim == 1 ? npts[0] : npts[0] * npts[1]; }
    double coord(int axis, Index i) const { return lo[axis] + spacing(axis) * i; }

    static Grid periodic_1d(double a, double b, Index m) {
        if (m < 3 || b <= a) throw std::invalid_argument("Grid: bad 1-D grid");
        Grid g;
        g.dim = 1;
        g.lo = {a, 0.0};
        g.hi = {b, 1.0};
        g.npts = {m, 1};
        return g;
    }
    static Grid periodic_2d(double a0, double b0, Index m0, double a1, double b1,
                            Index m1) {
        if (m0 < 3 || m1 < 3 || b0 <= a0 || b1 <= a1)
            throw std::invalid_argument("Grid: bad 2-D grid");
        Grid g;
        g.dim = 2;
        g.lo = {a0, a1};
        g.hi = {b0, b1};
        g.npts = {m0, m1};
        return g;
    }

    bool operator==(const Grid& other) const = default;
};

}  // namespace qmng
