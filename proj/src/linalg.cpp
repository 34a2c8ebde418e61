#include "dynregret/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynregret {

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const Vec& d) {
  Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < m.rows; ++i) m(i, i) = d[i];
  return m;
}

Mat Mat::from_rows(int r, int c, const Vec& entries) {
  if (entries.size() != static_cast<std::size_t>(r) * c)
    throw ValidationError("Mat::from_rows: entry count does not match shape");
  Mat m(r, c);
  m.a = entries;
  return m;
}

bool same_shape(const Mat& x, const Mat& y) { return x.rows == y.rows && x.cols == y.cols; }

static void require_same_shape(const Mat& x, const Mat& y, const char* op) {
  if (!same_shape(x, y)) throw ValidationError(std::string(op) + ": shape mismatch");
}

Mat operator+(const Mat& x, const Mat& y) {
  require_same_shape(x, y, "Mat+");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Mat operator-(const Mat& x, const Mat& y) {
  require_same_shape(x, y, "Mat-");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Mat operator*(double s, const Mat& x) {
  Mat r = x;
  for (double& v : r.a) v *= s;
  return r;
}

Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw ValidationError("matmul: inner dimension mismatch");
  Mat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double xv = x(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += xv * y(k, j);
    }
  return r;
}

Mat transpose(const Mat& x) {
  Mat r(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r(j, i) = x(i, j);
  return r;
}

Vec matvec(const Mat& x, const Vec& v) {
  if (v.size() != static_cast<std::size_t>(x.cols))
    throw ValidationError("matvec: dimension mismatch");
  Vec r(x.rows, 0.0);
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) s += x(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

double trace(const Mat& x) {
  double s = 0.0;
  for (int i = 0; i < std::min(x.rows, x.cols); ++i) s += x(i, i);
  return s;
}

double frobenius_inner(const Mat& x, const Mat& y) {
  require_same_shape(x, y, "frobenius_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) s += x.a[i] * y.a[i];
  return s;
}

double frobenius_norm(const Mat& x) { return std::sqrt(frobenius_inner(x, x)); }

double max_abs(const Mat& x) {
  double m = 0.0;
  for (double v : x.a) m = std::max(m, std::fabs(v));
  return m;
}

double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ValidationError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec vec_add(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ValidationError("vec_add: dimension mismatch");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vec vec_sub(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ValidationError("vec_sub: dimension mismatch");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

Vec vec_scale(double s, const Vec& x) {
  Vec r = x;
  for (double& v : r) v *= s;
  return r;
}

double spectral_norm(const Mat& m) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  if (max_abs(m) == 0.0) return 0.0;
  const Mat mt = transpose(m);
  // Gram matrix G = M^T M; power iteration estimates its top eigenvalue.
  const Mat g = matmul(mt, m);
  const int n = g.rows;
  Vec v(n);
  // Fixed start with unequal entries so no coordinate hyperplane traps it.
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * (i + 1);
  double nv = norm2(v);
  for (double& e : v) e /= nv;
  double lambda = 0.0;
  const int max_iters = 2000000;
  for (int it = 0; it < max_iters; ++it) {
    Vec gv = matvec(g, v);
    const double next = dot(v, gv);  // Rayleigh quotient
    const double gvn = norm2(gv);
    if (gvn == 0.0) return 0.0;  // v landed in the kernel; norm is attained elsewhere
    for (int i = 0; i < n; ++i) v[i] = gv[i] / gvn;
    if (it > 0 && std::fabs(next - lambda) <= 1e-10 * std::max(std::fabs(next), 1e-300)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

EighResult jacobi_eigh(const Mat& m) {
  if (m.rows != m.cols) throw ValidationError("jacobi_eigh: matrix must be square");
  const int n = m.rows;
  Mat a = m;
  // Symmetrize defensively; callers promise symmetry up to rounding.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  Mat v = Mat::identity(n);
  const double scale = std::max(max_abs(a), 1e-300);
  const double stop = 1e-14 * scale;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a(p, q)));
    if (off <= stop) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= stop * 1e-2) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });
  EighResult out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

Mat matrix_sqrt_psd(const Mat& m) {
  EighResult e = jacobi_eigh(m);
  const int n = m.rows;
  double scale = 1.0;
  for (double l : e.values) scale = std::max(scale, std::fabs(l));
  Vec roots(n);
  for (int i = 0; i < n; ++i) {
    if (e.values[i] < -1e-10 * scale)
      throw NumericError("matrix_sqrt_psd: matrix has a significantly negative eigenvalue");
    roots[i] = std::sqrt(std::max(e.values[i], 0.0));
  }
  Mat r = matmul(matmul(e.vectors, Mat::diag(roots)), transpose(e.vectors));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (r(i, j) + r(j, i));
      r(i, j) = avg;
      r(j, i) = avg;
    }
  return r;
}

Mat solve_linear_multi(Mat m, Mat b) {
  if (m.rows != m.cols) throw ValidationError("solve_linear: matrix must be square");
  if (m.rows != b.rows) throw ValidationError("solve_linear: rhs row mismatch");
  const int n = m.rows;
  const int k = b.cols;
  double scale = std::max(max_abs(m), 1e-300);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(m(r, col)) > std::fabs(m(piv, col))) piv = r;
    if (std::fabs(m(piv, col)) <= 1e-13 * scale)
      throw NumericError("solve_linear: singular system");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(m(col, j), m(piv, j));
      for (int j = 0; j < k; ++j) std::swap(b(col, j), b(piv, j));
    }
    const double inv_p = 1.0 / m(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = m(r, col) * inv_p;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
      for (int j = 0; j < k; ++j) b(r, j) -= f * b(col, j);
    }
  }
  Mat x(n, k);
  for (int col = n - 1; col >= 0; --col) {
    for (int j = 0; j < k; ++j) {
      double s = b(col, j);
      for (int r = col + 1; r < n; ++r) s -= m(col, r) * x(r, j);
      x(col, j) = s / m(col, col);
    }
  }
  return x;
}

Vec solve_linear(Mat m, Vec b) {
  Mat rhs(static_cast<int>(b.size()), 1);
  rhs.a = b;
  Mat x = solve_linear_multi(std::move(m), std::move(rhs));
  return x.a;
}

Mat inverse(const Mat& m) { return solve_linear_multi(m, Mat::identity(m.rows)); }

double min_nonzero_singular_value(const Mat& m) {
  if (m.rows == 0 || m.cols == 0 || max_abs(m) == 0.0) return 0.0;
  const Mat g = matmul(transpose(m), m);
  EighResult e = jacobi_eigh(g);
  const double top = std::max(e.values.front(), 0.0);
  double best = 0.0;
  for (double l : e.values)
    if (l > 1e-12 * std::max(top, 1.0)) best = l;  // values are descending
  return std::sqrt(std::max(best, 0.0));
}

Mat solve_discrete_lyapunov(const Mat& a, const Mat& w) {
  if (a.rows != a.cols) throw ValidationError("solve_discrete_lyapunov: A must be square");
  require_same_shape(a, w, "solve_discrete_lyapunov");
  const double an = spectral_norm(a);
  if (!(an < 1.0 - 1e-6))
    throw NumericError("solve_discrete_lyapunov: spectral norm of A is " + fmt_double(an) +
                       ", not below 1 - 1e-6");
  Mat x = w;
  // Symmetrize W so the iteration preserves symmetry exactly.
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.cols; ++j) {
      const double avg = 0.5 * (x(i, j) + x(j, i));
      x(i, j) = avg;
      x(j, i) = avg;
    }
  Mat ak = a;
  // Doubling: after k steps x = sum_{s<2^k} a^s w a^s^T, so convergence is
  // geometric with exponent 2^k; the cap is far beyond what contraction needs.
  for (long iter = 0; iter < 1000000; ++iter) {
    Mat step = matmul(ak, matmul(x, transpose(ak)));
    x = x + step;
    if (frobenius_norm(step) < 1e-12) break;
    ak = matmul(ak, ak);
  }
  const Mat residual = x - (matmul(a, matmul(x, transpose(a))) + w);
  if (frobenius_norm(residual) > 1e-8)
    throw NumericError("solve_discrete_lyapunov: residual " +
                       fmt_double(frobenius_norm(residual)) + " exceeds 1e-8");
  return x;
}

}  // namespace dynregret
