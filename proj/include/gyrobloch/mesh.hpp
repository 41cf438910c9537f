#pragma once

#include <array>
#include <iosfwd>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace gyrobloch {

using Point2 = Eigen::Vector2d;

/// Quadratic Lagrange basis on the reference triangle (0,0), (1,0), (0,1).
/// Local ordering: vertices 0,1,2 then edge midpoints (0,1), (1,2), (2,0).
template <typename Scalar>
struct ShapeValues {
  Eigen::Matrix<Scalar, 6, 1> values;
  Eigen::Matrix<Scalar, 6, 2> gradients;
};

template <typename Scalar>
ShapeValues<Scalar> shape_functions(const Eigen::Matrix<Scalar, 2, 1>& ref_point) {
  const Scalar xi = ref_point(0);
  const Scalar eta = ref_point(1);
  const Scalar l0 = Scalar(1) - xi - eta;
  const Scalar l1 = xi;
  const Scalar l2 = eta;
  // d(l0, l1, l2)/d(xi, eta)
  const Eigen::Matrix<Scalar, 3, 2> dl{{-1, -1}, {1, 0}, {0, 1}};
  const std::array<Scalar, 3> l{l0, l1, l2};

  ShapeValues<Scalar> out;
  for (int i = 0; i < 3; ++i) {
    out.values(i) = l[i] * (Scalar(2) * l[i] - Scalar(1));
    out.gradients.row(i) = (Scalar(4) * l[i] - Scalar(1)) * dl.row(i);
  }
  constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
  for (int e = 0; e < 3; ++e) {
    const int a = edges[e][0];
    const int b = edges[e][1];
    out.values(3 + e) = Scalar(4) * l[a] * l[b];
    out.gradients.row(3 + e) = Scalar(4) * (l[b] * dl.row(a) + l[a] * dl.row(b));
  }
  return out;
}

/// Quadrature rule on the reference triangle. Weights sum to 1/2.
struct Quadrature {
  std::vector<Point2> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Symmetric 6-point rule, exact for polynomials of total degree 4.
const Quadrature& triangle_rule_degree4();

/// The degree-4 rule replicated on the 4^levels subtriangles obtained by
/// repeated midpoint subdivision of the reference triangle.
Quadrature subdivided_rule(int levels);

/// Periodic quadratic-element mesh of the torus (-pi, pi]^2.
///
/// Geometric nodes live on the closed square [-pi, pi]^2 so each element is
/// an ordinary affine triangle; nodes on the faces x = pi, y = pi share a
/// global degree of freedom with their translates on x = -pi, y = -pi.
struct PeriodicMesh {
  using Cell = std::array<int, 6>;

  std::vector<Point2> nodes;
  std::vector<Cell> cells;
  /// Geometric node -> global periodic DOF.
  std::vector<int> dof_map;
  /// Canonical representative in (-pi, pi]^2 of every DOF.
  std::vector<Point2> dof_coordinates;
  int n_dofs = 0;
  int n_per_side = 0;
  double h = 0.0;
  static constexpr int element_order = 2;

  /// Global DOF indices of a cell's six local nodes.
  std::array<int, 6> cell_dofs(int cell) const;
  /// Vertex coordinates of a cell (rows: vertex 0, 1, 2).
  Eigen::Matrix<double, 3, 2> cell_vertices(int cell) const;
  /// Affine map Jacobian d(x)/d(xi, eta).
  Eigen::Matrix2d jacobian(int cell) const;
  /// Map a reference point to physical coordinates.
  Point2 map_to_physical(int cell, const Point2& ref_point) const;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kCellArea = 4.0 * kPi * kPi;

/// Structured mesh: n x n squares, each split along its (+,+) diagonal into
/// two quadratic triangles. Throws std::invalid_argument for n < 2.
PeriodicMesh build_structured_mesh(int n_per_side);

/// Reduce a point to its representative in (-pi, pi]^2 modulo 2*pi*Z^2.
Point2 reduce_to_cell(const Point2& x);

/// Plain-text dump: a "nodes" block (id x1 x2) and an "elements" block
/// (id n0 .. n5), ids zero-based, geometric node numbering.
void write_mesh(std::ostream& os, const PeriodicMesh& mesh);

}  // namespace gyrobloch
