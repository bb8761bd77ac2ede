#pragma once

#include <Eigen/Core>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"

namespace kfl {

// Unitary-frame components of nabla^s nablabar^r h at each node. The S^1 weight
// of the component is r - s (barred minus unbarred indices).
struct DerivativeStack {
    GridPtr grid;
    int r = 0;
    int s = 0;
    Eigen::VectorXcd values;

    int weight() const { return r - s; }
};

inline constexpr int kMaxStackOrder = 3;

// Supports r + s <= 3. The mixed second derivative is evaluated with the
// conservative Laplacian, so the (1,1) stack is exactly laplacian(m, h).
// Third-order stacks are built by applying one more covariant derivative to
// the second-order ones; (2,1) and conj(1,2) therefore differ by R * (1,0),
// the curvature commutator.
DerivativeStack derivative_stack(const ConformalMetric& m, const Eigen::VectorXd& h, int r, int s);

// Integral of |stack|^2 against omega.
double l2_norm(const ConformalMetric& m, const DerivativeStack& stack);

namespace ops {

// Chern-connection derivatives of a weight-w frame component.
// nablabar raises the weight by one, nabla lowers it by one.
Eigen::VectorXcd nabla_bar(const ConformalMetric& m, const Eigen::VectorXcd& t, int weight);
Eigen::VectorXcd nabla(const ConformalMetric& m, const Eigen::VectorXcd& t, int weight);

}  // namespace ops

}  // namespace kfl
