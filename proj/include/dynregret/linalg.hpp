#pragma once

// Small dense linear algebra for state/policy dimensions up to ~16.
// Everything is deterministic: fixed iteration orders, fixed starting
// vectors, no parallelism.  Row-major storage over std::vector<double>.

#include <utility>

#include "dynregret/common.hpp"

namespace dynregret {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;  // row-major, size rows*cols

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Mat identity(int n);
  static Mat diag(const Vec& d);
  static Mat from_rows(int r, int c, const Vec& entries);  // entries row-major
};

bool same_shape(const Mat& x, const Mat& y);

Mat operator+(const Mat& x, const Mat& y);
Mat operator-(const Mat& x, const Mat& y);
Mat operator*(double s, const Mat& x);
Mat matmul(const Mat& x, const Mat& y);
Mat transpose(const Mat& x);
Vec matvec(const Mat& x, const Vec& v);

double trace(const Mat& x);
// <X, Y> = tr(X^T Y) = sum of elementwise products.
double frobenius_inner(const Mat& x, const Mat& y);
double frobenius_norm(const Mat& x);
double max_abs(const Mat& x);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
Vec vec_add(const Vec& x, const Vec& y);
Vec vec_sub(const Vec& x, const Vec& y);
Vec vec_scale(double s, const Vec& x);

// Largest singular value via power iteration on M^T M, deterministic start,
// relative tolerance 1e-10 on the Rayleigh quotient.
double spectral_norm(const Mat& m);

struct EighResult {
  Vec values;      // descending
  Mat vectors;     // columns are the matching orthonormal eigenvectors
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
EighResult jacobi_eigh(const Mat& m);

// Symmetric PSD square root via Jacobi.  Eigenvalues below -1e-10 * scale
// raise NumericError; small negatives are clamped to zero.
Mat matrix_sqrt_psd(const Mat& m);

// Gaussian elimination with partial pivoting.  Throws NumericError on a
// singular (or numerically singular) system.
Vec solve_linear(Mat m, Vec b);
Mat solve_linear_multi(Mat m, Mat b);
Mat inverse(const Mat& m);

// Smallest nonzero singular value (zero means the matrix is exactly zero).
double min_nonzero_singular_value(const Mat& m);

// Solves X = A X A^T + W for symmetric W when the spectral radius of A is
// below one, by fixed-point iteration with doubling acceleration:
//   X_{k+1} = X_k + A_k X_k A_k^T,  A_{k+1} = A_k A_k,  X_0 = W.
// Preconditions: spectral_norm(A) < 1 - 1e-6 (checked).  Stops when the
// Frobenius step falls below 1e-12, verifies residual <= 1e-8.
Mat solve_discrete_lyapunov(const Mat& a, const Mat& w);

}  // namespace dynregret
