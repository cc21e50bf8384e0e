#pragma once

#include <Eigen/Dense>

namespace qgame {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

double spectral_radius(const Mat& a);
double min_singular_value(const Mat& a);
// Smallest eigenvalue of the symmetric part of a.
double min_eigenvalue(const Mat& a);
double max_eigenvalue(const Mat& a);

Mat symmetrize(const Mat& a);
Mat kron(const Mat& a, const Mat& b);

// Upper triangle of a symmetric matrix, row by row, diagonal included.
Vec half_vec(const Mat& s);
Mat from_half_vec(const Vec& v, int dim);
int half_vec_size(int dim);

// Solves P = a' P a + q for Schur-stable a.
Mat discrete_lyapunov(const Mat& a, const Mat& q);

bool all_finite(const Mat& a);

}  // namespace qgame
