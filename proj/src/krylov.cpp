#include "gyrobloch/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gyrobloch/error.hpp"

namespace gyrobloch {

namespace {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Vec<Scalar> random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Vec<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
      v(i) = Scalar(dist(rng), dist(rng));
    } else {
      v(i) = dist(rng);
    }
  }
  return v;
}

/// Two rounds of classical Gram-Schmidt against the first `cols` columns of
/// `basis`; in isotropic mode also against J times those columns. Returns the
/// projection coefficients onto the basis itself.
template <typename Scalar>
Vec<Scalar> orthogonalize(Vec<Scalar>& w, const Mat<Scalar>& basis, Eigen::Index cols,
                          bool isotropic) {
  Vec<Scalar> coeffs = Vec<Scalar>::Zero(cols);
  if (cols == 0) return coeffs;
  const auto v = basis.leftCols(cols);
  for (int pass = 0; pass < 2; ++pass) {
    const Vec<Scalar> h = v.adjoint() * w;
    w.noalias() -= v * h;
    coeffs += h;
    if constexpr (!Eigen::NumTraits<Scalar>::IsComplex) {
      if (isotropic) {
        const Eigen::Index n = w.size() / 2;
        const auto v1 = v.topRows(n);
        const auto v2 = v.bottomRows(n);
        // J v = (v2, -v1); <J v, w> = v2^T w1 - v1^T w2.
        const Vec<Scalar> g = v2.transpose() * w.head(n) - v1.transpose() * w.tail(n);
        w.head(n).noalias() -= v2 * g;
        w.tail(n).noalias() += v1 * g;
      }
    }
  }
  return coeffs;
}

struct Eigenpairs {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
};

template <typename Scalar>
Eigenpairs projected_eigenpairs(const Mat<Scalar>& h) {
  if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
    Eigen::ComplexEigenSolver<Mat<Scalar>> es(h);
    if (es.info() != Eigen::Success) throw SolverError("projected eigenproblem failed");
    return {es.eigenvalues(), es.eigenvectors()};
  } else {
    // The real solver returns exact conjugate pairs.
    Eigen::EigenSolver<Mat<Scalar>> es(h);
    if (es.info() != Eigen::Success) throw SolverError("projected eigenproblem failed");
    return {es.eigenvalues(), es.eigenvectors()};
  }
}

/// Indices ordered by decreasing modulus; ties put Im >= 0 first.
std::vector<int> order_by_modulus(const Eigen::VectorXcd& values) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double ma = std::abs(values(a));
    const double mb = std::abs(values(b));
    if (ma != mb) return ma > mb;
    return values(a).imag() > values(b).imag();
  });
  return idx;
}

/// Orthonormal real basis of span(Re U, Im U).
Eigen::MatrixXd real_span(const Eigen::MatrixXcd& u) {
  Eigen::MatrixXd x(u.rows(), 2 * u.cols());
  x << u.real(), u.imag();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > 1e-9 * s(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

void swap_schur_entries(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, Eigen::Index k) {
  const Complex t11 = t(k, k);
  const Complex t22 = t(k + 1, k + 1);
  // Eigenvector of the 2x2 block for t22 is (t12, t22 - t11); rotate it
  // into the leading position.
  Eigen::JacobiRotation<Complex> rot;
  rot.makeGivens(t(k, k + 1), t22 - t11);
  t.applyOnTheLeft(k, k + 1, rot.adjoint());
  t.applyOnTheRight(k, k + 1, rot);
  u.applyOnTheRight(k, k + 1, rot);
  t(k, k) = t22;
  t(k + 1, k + 1) = t11;
  t(k + 1, k) = 0.0;
}

double isotropy_defect(const Eigen::MatrixXd& basis) {
  if (basis.cols() == 0) return 0.0;
  const Eigen::Index n = basis.rows() / 2;
  const Eigen::MatrixXd g = basis.topRows(n).transpose() * basis.bottomRows(n) -
                            basis.bottomRows(n).transpose() * basis.topRows(n);
  return g.cwiseAbs().maxCoeff();
}

template <typename Scalar>
KrylovOutcome krylov_schur(const KrylovOperator<Scalar>& op, Eigen::Index dim,
                           const KrylovOptions<Scalar>& options,
                           const std::function<bool(const RitzPair&)>& accept) {
  constexpr bool kComplex = Eigen::NumTraits<Scalar>::IsComplex;
  const bool isotropic = !kComplex && options.isotropic;
  const Eigen::Index capacity = isotropic ? dim / 2 : dim;

  int nev = options.n_wanted;
  int m = options.subspace > 0 ? options.subspace : std::max(2 * nev + 8, 20);
  m = static_cast<int>(std::min<Eigen::Index>(m, capacity - 1));
  if (nev < 1 || m < nev + 1) {
    throw SolverError("Krylov subspace too small for the requested number of eigenvalues");
  }

  std::mt19937_64 rng(options.seed);
  Mat<Scalar> v = Mat<Scalar>::Zero(dim, m + 1);
  Mat<Scalar> h = Mat<Scalar>::Zero(m + 1, m);
  {
    Vec<Scalar> v0 = random_vector<Scalar>(dim, rng);
    v.col(0) = v0 / v0.norm();
  }

  KrylovOutcome out;
  int k = 0;
  for (int restart = 0;; ++restart) {
    for (int j = k; j < m; ++j) {
      Vec<Scalar> w = op(v.col(j));
      ++out.applications;
      const double norm_in = w.norm();
      h.col(j).head(j + 1) += orthogonalize<Scalar>(w, v, j + 1, isotropic);
      double beta = w.norm();
      if (!(beta > 1e-13 * norm_in)) {
        // Invariant subspace: continue from a fresh direction.
        w = random_vector<Scalar>(dim, rng);
        orthogonalize<Scalar>(w, v, j + 1, isotropic);
        orthogonalize<Scalar>(w, v, j + 1, isotropic);
        h(j + 1, j) = 0.0;
        v.col(j + 1) = w / w.norm();
        continue;
      }
      h(j + 1, j) = beta;
      v.col(j + 1) = w / beta;
    }

    const Mat<Scalar> hm = h.topLeftCorner(m, m);
    const Eigenpairs ritz = projected_eigenpairs<Scalar>(hm);
    const std::vector<int> order = order_by_modulus(ritz.values);

    int n_take = nev;
    if (!kComplex && ritz.values(order[n_take - 1]).imag() > 0.0 && n_take < m) ++n_take;

    out.wanted.clear();
    out.accepted.clear();
    bool all_ok = true;
    const Scalar beta_last = h(m, m - 1);
    for (int i = 0; i < n_take; ++i) {
      const int idx = order[i];
      RitzPair pair;
      pair.value = ritz.values(idx);
      const Eigen::VectorXcd y = ritz.vectors.col(idx).normalized();
      pair.estimate = std::abs(Complex(beta_last) * y(m - 1)) / std::abs(pair.value);
      pair.vector = v.leftCols(m).template cast<Complex>() * y;
      const bool ok = pair.estimate <= options.screen_tolerance && accept(pair);
      all_ok = all_ok && ok;
      out.wanted.push_back(std::move(pair));
      out.accepted.push_back(ok);
    }
    out.restarts = restart;
    if (all_ok) {
      out.converged = true;
      break;
    }
    if (restart >= options.max_restarts) break;

    // Restart: keep an invariant subspace of the projected matrix belonging
    // to the largest Ritz values.
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(hm.template cast<Complex>());
    Eigen::MatrixXcd t = schur.matrixT();
    Eigen::MatrixXcd u = schur.matrixU();
    Eigen::VectorXcd diag = t.diagonal();
    std::vector<int> sorted = order_by_modulus(diag);

    int keep = std::min(nev + (m - nev) / 2, m - 1);
    Mat<Scalar> q;
    for (;; --keep) {
      std::vector<bool> selected(m, false);
      for (int i = 0; i < keep; ++i) selected[sorted[i]] = true;
      // Bubble selected entries to the top of T.
      Eigen::MatrixXcd ts = t;
      Eigen::MatrixXcd us = u;
      std::vector<bool> sel = selected;
      int top = 0;
      for (int i = 0; i < m; ++i) {
        if (!sel[i]) continue;
        for (int p = i; p > top; --p) {
          swap_schur_entries(ts, us, p - 1);
          std::swap(sel[p], sel[p - 1]);
        }
        ++top;
      }
      if constexpr (kComplex) {
        q = us.leftCols(keep);
        break;
      } else {
        q = real_span(us.leftCols(keep));
        if (q.cols() <= m - 1 || keep <= 1) break;
      }
    }
    const int k_new = static_cast<int>(q.cols());
    const Mat<Scalar> s = q.adjoint() * hm * q;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> b = beta_last * q.row(m - 1);

    Mat<Scalar> v_new = Mat<Scalar>::Zero(dim, m + 1);
    v_new.leftCols(k_new) = v.leftCols(m) * q;
    v_new.col(k_new) = v.col(m);
    v = std::move(v_new);
    h.setZero();
    h.topLeftCorner(k_new, k_new) = s;
    h.row(k_new).head(k_new) = b;
    k = k_new;

    if constexpr (!kComplex) {
      if (isotropic) out.isotropy_defects.push_back(isotropy_defect(v.leftCols(k + 1)));
    }
  }
  if constexpr (!kComplex) {
    if (isotropic) out.isotropy_defects.push_back(isotropy_defect(v));
  }
  return out;
}

template KrylovOutcome krylov_schur<double>(const KrylovOperator<double>&, Eigen::Index,
                                            const KrylovOptions<double>&,
                                            const std::function<bool(const RitzPair&)>&);
template KrylovOutcome krylov_schur<Complex>(const KrylovOperator<Complex>&, Eigen::Index,
                                             const KrylovOptions<Complex>&,
                                             const std::function<bool(const RitzPair&)>&);

}  // namespace gyrobloch
