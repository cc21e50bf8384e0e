#include "qgame/linalg.hpp"

#include "qgame/errors.hpp"

#include <Eigen/Eigenvalues>

namespace qgame {

double spectral_radius(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_singular_value(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().minCoeff();
}

double min_eigenvalue(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

int half_vec_size(int dim) { return dim * (dim + 1) / 2; }

Vec half_vec(const Mat& s) {
  const int m = static_cast<int>(s.rows());
  Vec v(half_vec_size(m));
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) v(k++) = s(i, j);
  return v;
}

Mat from_half_vec(const Vec& v, int dim) {
  if (v.size() != half_vec_size(dim))
    throw Error(ErrorKind::DimensionMismatch, "half-vectorized length does not match dimension");
  Mat s(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      s(i, j) = v(k);
      s(j, i) = v(k);
      ++k;
    }
  return s;
}

Mat discrete_lyapunov(const Mat& a, const Mat& q) {
  const Eigen::Index n = a.rows();
  if (spectral_radius(a) >= 1.0)
    throw Error(ErrorKind::NotAdmissible, "closed loop is not Schur stable");
  // vec(P) - (a' kron a') vec(P) = vec(q)
  const Mat at = a.transpose();
  Mat lhs = Mat::Identity(n * n, n * n) - kron(at, at);
  Vec rhs = Eigen::Map<const Vec>(q.data(), n * n);
  Vec sol = lhs.partialPivLu().solve(rhs);
  Mat p = Eigen::Map<Mat>(sol.data(), n, n);
  return symmetrize(p);
}

bool all_finite(const Mat& a) { return a.allFinite(); }

}  // namespace qgame
