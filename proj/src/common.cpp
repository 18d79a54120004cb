#include "epilna/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epilna {

Rng make_stream(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the stream name, mixed with both halves of the seed.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

Mat psd_factor(const Mat& M) {
  const Mat sym = 0.5 * (M + M.transpose());
  const Eigen::Index n = sym.rows();
  if (n == 0) return sym;
  const double scale = std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());

  Eigen::LLT<Mat> llt(sym);
  if (llt.info() == Eigen::Success) {
    Mat L = llt.matrixL();
    if (L.allFinite()) return L;
  }

  // Semidefinite matrices (zero-variance components) factor exactly through
  // the pivoted LDL' decomposition.
  Eigen::LDLT<Mat> ldlt(sym);
  if (ldlt.info() == Eigen::Success) {
    const Vec D = ldlt.vectorD();
    if (D.minCoeff() >= -1e-10 * scale) {
      Mat L = ldlt.matrixL();
      L = L * D.cwiseMax(0.0).cwiseSqrt().asDiagonal();
      Mat out = ldlt.transpositionsP().transpose() * L;
      if (out.allFinite()) return out;
    }
  }

  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0000001; jitter *= 10.0) {
    Mat A = sym;
    A.diagonal().array() += jitter * scale;
    Eigen::LLT<Mat> jittered(A);
    if (jittered.info() == Eigen::Success) {
      Mat L = jittered.matrixL();
      if (L.allFinite()) return L;
    }
  }
  throw NumericalFailure("matrix is not positive semidefinite (factorisation failed after jitter)");
}

}  // namespace epilna
