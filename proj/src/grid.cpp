#include "kfl/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kfl/error.hpp"

namespace kfl {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::input: return "input";
        case ErrorKind::config: return "config";
        case ErrorKind::degenerate_metric: return "degenerate-metric";
        case ErrorKind::solvability: return "solvability";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::capability: return "capability";
        case ErrorKind::step_size: return "step-size";
        case ErrorKind::blow_up: return "blow-up";
        case ErrorKind::degeneracy: return "degeneracy";
    }
    return "unknown";
}

LatitudeGrid::LatitudeGrid(int n) : n_(n) {
    if (n < 4) fail(ErrorKind::input, "latitude grid needs at least 4 cells, got " + std::to_string(n));
    const double pi = std::numbers::pi;
    h_ = pi / n;
    kappa_ = h_ / std::sin(h_);
    nodes_.resize(n);
    weights_.resize(n);
    const double half = std::sin(0.5 * h_);
    for (int i = 0; i < n; ++i) {
        nodes_[i] = (i + 0.5) * h_;
        // exact round area of the band between the two faces
        weights_[i] = 4.0 * pi * std::sin(nodes_[i]) * half;
    }
    face_sin_.resize(n + 1);
    face_cos_.resize(n + 1);
    for (int f = 0; f <= n; ++f) {
        face_sin_[f] = std::sin(f * h_);
        face_cos_[f] = std::cos(f * h_);
    }
    face_sin_[0] = 0.0;
    face_sin_[n] = 0.0;
    face_cos_[0] = 1.0;
    face_cos_[n] = -1.0;
}

GridPtr make_grid(int n) { return std::make_shared<const LatitudeGrid>(n); }

ScalarField::ScalarField(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) fail(ErrorKind::input, "scalar field without a grid");
    if (values.size() != grid->size()) {
        fail(ErrorKind::input, "scalar field has " + std::to_string(values.size()) +
                                   " samples on a grid of size " + std::to_string(grid->size()));
    }
    if (!values.allFinite()) fail(ErrorKind::input, "scalar field has non-finite samples");
}

void require_same_grid(const LatitudeGrid& a, const LatitudeGrid& b, const char* context) {
    if (!(a == b)) {
        fail(ErrorKind::input, std::string(context) + ": grid mismatch (" + std::to_string(a.size()) +
                                   " vs " + std::to_string(b.size()) + ")");
    }
}

}  // namespace kfl
