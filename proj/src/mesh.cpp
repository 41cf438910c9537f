#include "gyrobloch/mesh.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gyrobloch {

const Quadrature& triangle_rule_degree4() {
  static const Quadrature rule = [] {
    constexpr double a1 = 0.44594849091596488632;
    constexpr double b1 = 1.0 - 2.0 * a1;
    constexpr double w1 = 0.22338158967801146570;
    constexpr double a2 = 0.09157621350977074346;
    constexpr double b2 = 1.0 - 2.0 * a2;
    constexpr double w2 = 0.10995174365532186764;
    Quadrature q;
    q.degree = 4;
    // Barycentric (b, a, a) and permutations; (xi, eta) = (l1, l2).
    q.points = {{a1, a1}, {b1, a1}, {a1, b1}, {a2, a2}, {b2, a2}, {a2, b2}};
    for (int i = 0; i < 3; ++i) q.weights.push_back(0.5 * w1);
    for (int i = 0; i < 3; ++i) q.weights.push_back(0.5 * w2);
    return q;
  }();
  return rule;
}

namespace {

struct RefTriangle {
  Point2 a, b, c;
};

void subdivide(const RefTriangle& t, int levels, std::vector<RefTriangle>& out) {
  if (levels == 0) {
    out.push_back(t);
    return;
  }
  const Point2 ab = 0.5 * (t.a + t.b);
  const Point2 bc = 0.5 * (t.b + t.c);
  const Point2 ca = 0.5 * (t.c + t.a);
  subdivide({t.a, ab, ca}, levels - 1, out);
  subdivide({ab, t.b, bc}, levels - 1, out);
  subdivide({ca, bc, t.c}, levels - 1, out);
  subdivide({bc, ca, ab}, levels - 1, out);
}

}  // namespace

Quadrature subdivided_rule(int levels) {
  if (levels < 0) throw std::invalid_argument("subdivision depth must be non-negative");
  const Quadrature& base = triangle_rule_degree4();
  std::vector<RefTriangle> pieces;
  subdivide({{0, 0}, {1, 0}, {0, 1}}, levels, pieces);

  Quadrature q;
  q.degree = base.degree;
  for (const auto& t : pieces) {
    Eigen::Matrix2d jac;
    jac.col(0) = t.b - t.a;
    jac.col(1) = t.c - t.a;
    const double det = std::abs(jac.determinant());
    for (std::size_t i = 0; i < base.points.size(); ++i) {
      q.points.push_back(t.a + jac * base.points[i]);
      q.weights.push_back(base.weights[i] * det);
    }
  }
  return q;
}

std::array<int, 6> PeriodicMesh::cell_dofs(int cell) const {
  std::array<int, 6> out{};
  for (int i = 0; i < 6; ++i) out[i] = dof_map[cells[cell][i]];
  return out;
}

Eigen::Matrix<double, 3, 2> PeriodicMesh::cell_vertices(int cell) const {
  Eigen::Matrix<double, 3, 2> v;
  for (int i = 0; i < 3; ++i) v.row(i) = nodes[cells[cell][i]].transpose();
  return v;
}

Eigen::Matrix2d PeriodicMesh::jacobian(int cell) const {
  const Point2& p0 = nodes[cells[cell][0]];
  Eigen::Matrix2d jac;
  jac.col(0) = nodes[cells[cell][1]] - p0;
  jac.col(1) = nodes[cells[cell][2]] - p0;
  return jac;
}

Point2 PeriodicMesh::map_to_physical(int cell, const Point2& ref_point) const {
  return nodes[cells[cell][0]] + jacobian(cell) * ref_point;
}

PeriodicMesh build_structured_mesh(int n_per_side) {
  if (n_per_side < 2) {
    throw std::invalid_argument("n_per_side must be >= 2, got " + std::to_string(n_per_side));
  }
  const int n = n_per_side;
  const int side = 2 * n + 1;  // geometric nodes per side, both faces included
  const double half_h = kPi / n;

  PeriodicMesh mesh;
  mesh.n_per_side = n;
  mesh.h = 2.0 * kPi / n;
  mesh.n_dofs = 4 * n * n;
  mesh.nodes.reserve(side * side);
  mesh.dof_map.reserve(side * side);
  mesh.dof_coordinates.resize(mesh.n_dofs);

  for (int b = 0; b < side; ++b) {
    for (int a = 0; a < side; ++a) {
      mesh.nodes.emplace_back(-kPi + a * half_h, -kPi + b * half_h);
      const int dof = (a % (2 * n)) + 2 * n * (b % (2 * n));
      mesh.dof_map.push_back(dof);
    }
  }
  // Canonical representatives: index 0 on a periodic axis is the face at
  // -pi, which is identified with +pi.
  for (int b = 0; b < 2 * n; ++b) {
    for (int a = 0; a < 2 * n; ++a) {
      const int ca = a == 0 ? 2 * n : a;
      const int cb = b == 0 ? 2 * n : b;
      mesh.dof_coordinates[a + 2 * n * b] = Point2(-kPi + ca * half_h, -kPi + cb * half_h);
    }
  }

  const auto id = [side](int a, int b) { return a + side * b; };
  mesh.cells.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = 2 * i;
      const int b = 2 * j;
      // Lower-right triangle: (a,b) (a+2,b) (a+2,b+2).
      mesh.cells.push_back({id(a, b), id(a + 2, b), id(a + 2, b + 2), id(a + 1, b),
                            id(a + 2, b + 1), id(a + 1, b + 1)});
      // Upper-left triangle: (a,b) (a+2,b+2) (a,b+2).
      mesh.cells.push_back({id(a, b), id(a + 2, b + 2), id(a, b + 2), id(a + 1, b + 1),
                            id(a + 1, b + 2), id(a, b + 1)});
    }
  }
  return mesh;
}

Point2 reduce_to_cell(const Point2& x) {
  constexpr double period = 2.0 * kPi;
  Point2 r;
  for (int d = 0; d < 2; ++d) {
    // Map into (-pi, pi]: shift so the half-open interval is (0, 2pi].
    double t = std::fmod(x(d) + kPi, period);
    if (t <= 0.0) t += period;
    r(d) = t - kPi;
  }
  return r;
}

void write_mesh(std::ostream& os, const PeriodicMesh& mesh) {
  os << "# nodes: id x1 x2\n";
  os << "nodes " << mesh.nodes.size() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    os << i << ' ' << mesh.nodes[i](0) << ' ' << mesh.nodes[i](1) << '\n';
  }
  os << "# elements: id n0 n1 n2 n3 n4 n5\n";
  os << "elements " << mesh.cells.size() << '\n';
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    os << c;
    for (int v : mesh.cells[c]) os << ' ' << v;
    os << '\n';
  }
}

}  // namespace gyrobloch
