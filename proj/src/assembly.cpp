#include "gyrobloch/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "gyrobloch/error.hpp"

namespace gyrobloch {

namespace {

using ElementMatrix = Eigen::Matrix<double, 6, 6>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Distance from p to the closed triangle (a, b, c).
double point_triangle_distance(const Point2& p, const Point2& a, const Point2& b,
                               const Point2& c) {
  const auto cross = [](const Point2& u, const Point2& v) { return u(0) * v(1) - u(1) * v(0); };
  const double d0 = cross(b - a, p - a);
  const double d1 = cross(c - b, p - b);
  const double d2 = cross(a - c, p - c);
  const bool has_neg = d0 < 0 || d1 < 0 || d2 < 0;
  const bool has_pos = d0 > 0 || d1 > 0 || d2 > 0;
  if (!(has_neg && has_pos)) return 0.0;
  const auto seg = [&p](const Point2& s, const Point2& t) {
    const Point2 d = t - s;
    const double u = std::clamp((p - s).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (s + u * d - p).norm();
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

bool element_is_cut(const PeriodicMesh& mesh, int cell, const MaterialModel& model) {
  const auto v = mesh.cell_vertices(cell);
  const Point2 a = v.row(0).transpose();
  const Point2 b = v.row(1).transpose();
  const Point2 c = v.row(2).transpose();
  const Point2& center = model.inclusion_center;
  const double r = model.inclusion_radius;
  const double far = std::max({(a - center).norm(), (b - center).norm(), (c - center).norm()});
  const double near = point_triangle_distance(center, a, b, c);
  return near < r && far >= r;
}

struct ElementGeometry {
  Eigen::Matrix2d inv_jac_t;
  double det = 0.0;
};

ElementGeometry element_geometry(const PeriodicMesh& mesh, int cell) {
  const Eigen::Matrix2d jac = mesh.jacobian(cell);
  const double det = jac.determinant();
  if (!(det > 0.0)) {
    std::ostringstream os;
    os << "element " << cell << " has non-positive Jacobian determinant " << det;
    throw AssemblyError(os.str());
  }
  return {jac.inverse().transpose(), det};
}

/// Mirror the upper triangle so symmetry is bitwise exact.
void symmetrize_from_upper(ElementMatrix& a) {
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) a(i, j) = a(j, i);
}

/// (P^T - P) where P(m, n) = integral of phi_n d(phi_m); the element-level
/// skew part of -2 * integral phi_n d(phi_m). Summed over the torus the
/// symmetric part vanishes, so this equals the exact global matrix while
/// being skew bitwise.
ElementMatrix skew_part(const ElementMatrix& p) {
  ElementMatrix g;
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 6; ++n) g(m, n) = p(n, m) - p(m, n);
  return g;
}

void scatter(const std::array<int, 6>& dofs, const ElementMatrix& a, Triplets& out) {
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out.emplace_back(dofs[i], dofs[j], a(i, j));
}

SparseMatrix to_sparse(int n, const Triplets& t) {
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

const Quadrature& interface_rule(int levels) {
  // Only a handful of depths are ever requested; cache them.
  static thread_local std::vector<Quadrature> cache;
  if (levels >= static_cast<int>(cache.size())) {
    for (int l = static_cast<int>(cache.size()); l <= levels; ++l)
      cache.push_back(subdivided_rule(l));
  }
  return cache[levels];
}

void check_direction(const Eigen::Vector2d& k_hat) {
  if (std::abs(k_hat.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "k_hat must be a unit vector, |k_hat| = " << std::setprecision(17) << k_hat.norm();
    throw RangeError(os.str());
  }
}

}  // namespace

Eigen::Vector2d direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

PencilBasis build_pencil_basis(const PeriodicMesh& mesh, const MaterialModel& model,
                               AssemblyOptions options) {
  const Quadrature& rule = triangle_rule_degree4();
  const Quadrature& fine = interface_rule(options.interface_levels);
  const int n = mesh.n_dofs;
  const std::size_t reserve = mesh.cells.size() * 36;

  Triplets t_mass, t_stiff, t_bg, t_in, t_gx, t_gy;
  for (Triplets* t : {&t_mass, &t_stiff, &t_bg, &t_in, &t_gx, &t_gy}) t->reserve(reserve);

  PencilBasis basis;
  for (int cell = 0; cell < static_cast<int>(mesh.cells.size()); ++cell) {
    const ElementGeometry geo = element_geometry(mesh, cell);
    const auto dofs = mesh.cell_dofs(cell);

    ElementMatrix mass = ElementMatrix::Zero();
    ElementMatrix stiff = ElementMatrix::Zero();
    ElementMatrix px = ElementMatrix::Zero();
    ElementMatrix py = ElementMatrix::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto s = shape_functions<double>(rule.points[q]);
      const double w = rule.weights[q] * geo.det;
      const Eigen::Matrix<double, 6, 2> grad = s.gradients * geo.inv_jac_t.transpose();
      mass.noalias() += w * s.values * s.values.transpose();
      stiff.noalias() += w * grad * grad.transpose();
      // P(m, n) = sum w * phi_n * d(phi_m)
      px.noalias() += w * grad.col(0) * s.values.transpose();
      py.noalias() += w * grad.col(1) * s.values.transpose();
    }
    symmetrize_from_upper(mass);
    symmetrize_from_upper(stiff);

    ElementMatrix inside = ElementMatrix::Zero();
    ElementMatrix outside = ElementMatrix::Zero();
    if (element_is_cut(mesh, cell, model)) {
      ++basis.cut_elements;
      for (std::size_t q = 0; q < fine.points.size(); ++q) {
        const auto s = shape_functions<double>(fine.points[q]);
        const double w = fine.weights[q] * geo.det;
        const Point2 x = mesh.map_to_physical(cell, fine.points[q]);
        ElementMatrix& target = model.region(x) == Region::Inclusion ? inside : outside;
        target.noalias() += w * s.values * s.values.transpose();
      }
      symmetrize_from_upper(inside);
      symmetrize_from_upper(outside);
    } else {
      // Whole element on one side: centroid decides.
      const Point2 x = mesh.map_to_physical(cell, Point2(1.0 / 3.0, 1.0 / 3.0));
      (model.region(x) == Region::Inclusion ? inside : outside) = mass;
    }

    scatter(dofs, mass, t_mass);
    scatter(dofs, stiff, t_stiff);
    scatter(dofs, outside, t_bg);
    scatter(dofs, inside, t_in);
    scatter(dofs, skew_part(px), t_gx);
    scatter(dofs, skew_part(py), t_gy);
  }

  basis.mass = to_sparse(n, t_mass);
  basis.stiffness = to_sparse(n, t_stiff);
  basis.mass_background = to_sparse(n, t_bg);
  basis.mass_inclusion = to_sparse(n, t_in);
  basis.gyro_x = to_sparse(n, t_gx);
  basis.gyro_y = to_sparse(n, t_gy);
  return basis;
}

PencilMatrices assemble_pencil(const PencilBasis& basis, const MaterialModel& model,
                               double omega, const Eigen::Vector2d& k_hat) {
  check_direction(k_hat);
  const double eps_bg = region_permittivity(model, Region::Background, omega);
  const double eps_in = region_permittivity(model, Region::Inclusion, omega);
  const double w2 = omega * omega;

  PencilMatrices p;
  p.omega = omega;
  p.k_hat = k_hat;
  p.M = basis.mass;
  p.G = k_hat(0) * basis.gyro_x + k_hat(1) * basis.gyro_y;
  p.K = (w2 * eps_bg) * basis.mass_background + (w2 * eps_in) * basis.mass_inclusion -
        basis.stiffness;
  return p;
}

PencilMatrices assemble_pencil(const PeriodicMesh& mesh, const MaterialModel& model,
                               double omega, const Eigen::Vector2d& k_hat,
                               AssemblyOptions options) {
  check_direction(k_hat);
  if (!model.valid_range.contains(omega)) {
    // Same error eval_permittivity raises, before any work is done.
    region_permittivity(model, Region::Background, omega);
  }
  const Quadrature& rule = triangle_rule_degree4();
  const Quadrature& fine = interface_rule(options.interface_levels);
  const int n = mesh.n_dofs;
  const double w2 = omega * omega;

  Triplets t_m, t_g, t_k;
  for (Triplets* t : {&t_m, &t_g, &t_k}) t->reserve(mesh.cells.size() * 36);

  for (int cell = 0; cell < static_cast<int>(mesh.cells.size()); ++cell) {
    const ElementGeometry geo = element_geometry(mesh, cell);
    const auto dofs = mesh.cell_dofs(cell);

    ElementMatrix mass = ElementMatrix::Zero();
    ElementMatrix stiff = ElementMatrix::Zero();
    ElementMatrix p = ElementMatrix::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto s = shape_functions<double>(rule.points[q]);
      const double w = rule.weights[q] * geo.det;
      const Eigen::Matrix<double, 6, 2> grad = s.gradients * geo.inv_jac_t.transpose();
      mass.noalias() += w * s.values * s.values.transpose();
      stiff.noalias() += w * grad * grad.transpose();
      p.noalias() += w * (grad * k_hat) * s.values.transpose();
    }

    const Quadrature& eps_rule = element_is_cut(mesh, cell, model) ? fine : rule;
    ElementMatrix weighted = ElementMatrix::Zero();
    for (std::size_t q = 0; q < eps_rule.points.size(); ++q) {
      const auto s = shape_functions<double>(eps_rule.points[q]);
      const double w = eps_rule.weights[q] * geo.det;
      const double eps =
          eval_permittivity(model, mesh.map_to_physical(cell, eps_rule.points[q]), omega);
      weighted.noalias() += (w * eps) * s.values * s.values.transpose();
    }
    symmetrize_from_upper(mass);
    symmetrize_from_upper(stiff);
    symmetrize_from_upper(weighted);

    scatter(dofs, mass, t_m);
    scatter(dofs, skew_part(p), t_g);
    scatter(dofs, ElementMatrix(w2 * weighted - stiff), t_k);
  }

  PencilMatrices out;
  out.omega = omega;
  out.k_hat = k_hat;
  out.M = to_sparse(n, t_m);
  out.G = to_sparse(n, t_g);
  out.K = to_sparse(n, t_k);
  return out;
}

ComplexVector apply_pencil(const PencilMatrices& p, Complex mu, const ComplexVector& u) {
  if (u.size() != p.n_dofs()) {
    std::ostringstream os;
    os << "apply_pencil: vector of size " << u.size() << " for pencil of size " << p.n_dofs();
    throw AssemblyError(os.str());
  }
  return mu * mu * (p.M * u) + mu * (p.G * u) +
         p.K * u;
}

ComplexVector apply_pencil_transposed(const PencilMatrices& p, Complex mu,
                                      const ComplexVector& u) {
  if (u.size() != p.n_dofs()) {
    std::ostringstream os;
    os << "apply_pencil_transposed: vector of size " << u.size() << " for pencil of size "
       << p.n_dofs();
    throw AssemblyError(os.str());
  }
  return mu * mu * (p.M.transpose() * u) +
         mu * (p.G.transpose() * u) + p.K.transpose() * u;
}

double pencil_residual(const PencilMatrices& p, Complex mu, const ComplexVector& u) {
  const double norm = u.norm();
  if (norm == 0.0) return 0.0;
  return apply_pencil(p, mu, u).norm() / norm;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace gyrobloch
