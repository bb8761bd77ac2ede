#include "kfl/derivatives.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kfl/error.hpp"
#include "kfl/geometry.hpp"

namespace kfl {

namespace {

using cvec = Eigen::VectorXcd;

cvec complexify(const Eigen::VectorXd& v) { return v.cast<std::complex<double>>(); }

// e^{-u} / sqrt 2: length of the unitary frame vector in round coordinates.
Eigen::VectorXd frame_scale(const ConformalMetric& m) {
    return (-m.u().array()).exp().matrix() / std::numbers::sqrt2;
}

// u' + cot(xi), the connection coefficient of the frame.
Eigen::VectorXd connection(const ConformalMetric& m) {
    Eigen::VectorXd a = ops::central_difference(m.grid(), m.u(), 1.0);
    for (int i = 0; i < a.size(); ++i) a[i] += 1.0 / std::tan(m.grid().node(i));
    return a;
}

cvec covariant(const ConformalMetric& m, const cvec& t, int weight, double sign) {
    const double parity = (weight % 2 == 0) ? 1.0 : -1.0;
    const cvec dt = ops::central_difference(m.grid(), t, parity);
    const Eigen::VectorXd e = frame_scale(m);
    const Eigen::VectorXd a = connection(m);
    cvec out(t.size());
    for (int i = 0; i < t.size(); ++i) out[i] = e[i] * (dt[i] + sign * weight * a[i] * t[i]);
    return out;
}

}  // namespace

namespace ops {

Eigen::VectorXcd nabla_bar(const ConformalMetric& m, const Eigen::VectorXcd& t, int weight) {
    return covariant(m, t, weight, -1.0);
}

Eigen::VectorXcd nabla(const ConformalMetric& m, const Eigen::VectorXcd& t, int weight) {
    return covariant(m, t, weight, +1.0);
}

}  // namespace ops

DerivativeStack derivative_stack(const ConformalMetric& m, const Eigen::VectorXd& h, int r, int s) {
    if (r < 0 || s < 0 || r + s > kMaxStackOrder) {
        fail(ErrorKind::capability, "derivative stack of order (" + std::to_string(r) + "," + std::to_string(s) +
                                        ") is not supported; r + s must be at most 3");
    }
    if (h.size() != m.grid().size()) fail(ErrorKind::input, "derivative_stack: field/grid size mismatch");

    const LatitudeGrid& grid = m.grid();
    const Eigen::VectorXd e = frame_scale(m);
    const Eigen::VectorXd dh = ops::central_difference(grid, h, 1.0);

    auto first = [&] { return complexify(e.cwiseProduct(dh)); };
    auto mixed = [&] {
        return complexify(0.5 * ops::round_laplacian(grid, h).array() / m.factor().array());
    };
    auto pure_second = [&] {
        // e^{-2u} (h'' - 2 u' h' - cot(xi) h') / 2
        const Eigen::VectorXd d2 = ops::second_difference(grid, h);
        const Eigen::VectorXd du = ops::central_difference(grid, m.u(), 1.0);
        Eigen::VectorXd q(h.size());
        for (int i = 0; i < h.size(); ++i) {
            q[i] = 0.5 * (d2[i] - 2.0 * du[i] * dh[i] - dh[i] / std::tan(grid.node(i))) / m.factor()[i];
        }
        return complexify(q);
    };

    DerivativeStack out{m.grid_ptr(), r, s, {}};
    const int order = r + s;
    if (order == 0) {
        out.values = complexify(h);
    } else if (order == 1) {
        out.values = first();
    } else if (order == 2) {
        out.values = (r == 1) ? mixed() : pure_second();
    } else if (r == 3) {
        out.values = ops::nabla_bar(m, pure_second(), 2);
    } else if (r == 2) {
        out.values = ops::nabla(m, pure_second(), 2);
    } else if (r == 1) {
        out.values = ops::nabla(m, mixed(), 0);
    } else {
        out.values = ops::nabla(m, pure_second(), -2);
    }
    return out;
}

double l2_norm(const ConformalMetric& m, const DerivativeStack& stack) {
    if (!stack.grid) fail(ErrorKind::input, "l2_norm: stack without a grid");
    require_same_grid(m.grid(), *stack.grid, "l2_norm");
    if (stack.values.size() != m.grid().size()) fail(ErrorKind::input, "l2_norm: stack has the wrong length");
    return m.omega().dot(stack.values.cwiseAbs2());
}

}  // namespace kfl
