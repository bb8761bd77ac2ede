#pragma once

#include <memory>

#include <Eigen/Core>

namespace kfl {

// Cell-centred co-latitude grid on (0, pi). Node i sits at (i + 1/2) h with
// h = pi / N; faces sit at f h for f = 0..N, so faces 0 and N are the poles.
class LatitudeGrid {
public:
    explicit LatitudeGrid(int n);

    int size() const { return n_; }
    double spacing() const { return h_; }
    double node(int i) const { return nodes_[i]; }
    const Eigen::VectorXd& nodes() const { return nodes_; }

    // Round-sphere area of each cell (the 2 pi from the S^1 factor included).
    const Eigen::VectorXd& weights() const { return weights_; }

    double face_sin(int f) const { return face_sin_[f]; }
    double face_cos(int f) const { return face_cos_[f]; }

    // Flux correction h / sin h. With it the discrete round Laplacian has
    // cos(xi) as an exact eigenfunction with eigenvalue -2, which keeps the
    // conformal (l = 1) modes of the flow neutral instead of slightly unstable.
    double flux_factor() const { return kappa_; }

    bool operator==(const LatitudeGrid& other) const { return n_ == other.n_; }

private:
    int n_;
    double h_;
    double kappa_;
    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd face_sin_;
    Eigen::VectorXd face_cos_;
};

using GridPtr = std::shared_ptr<const LatitudeGrid>;

GridPtr make_grid(int n);

// Real samples on a grid. Values must be finite.
struct ScalarField {
    ScalarField(GridPtr grid, Eigen::VectorXd values);

    GridPtr grid;
    Eigen::VectorXd values;
};

void require_same_grid(const LatitudeGrid& a, const LatitudeGrid& b, const char* context);

}  // namespace kfl
