#include "saddle/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "saddle/errors.hpp"

namespace saddle {

namespace {
constexpr double kResonanceTol = 1e-8;  // relative
}

SpectralData eigendecompose(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M,
                            double lambda) {
  if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows()) {
    throw PreconditionError("spectral:ShapeMismatch", "K and M must be square and same size");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, M,
                                                                   Eigen::ComputeEigenvectors |
                                                                       Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral:EigFailed", "generalized eigensolve did not converge");
  }

  SpectralData spec;
  spec.eigenvalues = solver.eigenvalues();
  spec.eigenvectors = solver.eigenvectors();  // M-orthonormal columns
  spec.lambda = lambda;

  // Deterministic sign convention: largest-magnitude component positive.
  for (int j = 0; j < spec.eigenvectors.cols(); ++j) {
    int idx = 0;
    spec.eigenvectors.col(j).cwiseAbs().maxCoeff(&idx);
    if (spec.eigenvectors(idx, j) < 0.0) spec.eigenvectors.col(j) *= -1.0;
  }

  int k = 0;
  for (int i = 0; i < spec.eigenvalues.size(); ++i) {
    const double li = spec.eigenvalues[i];
    if (std::abs(lambda - li) <= kResonanceTol * std::max(1.0, std::abs(li))) {
      throw resonant_lambda(lambda, i, li);
    }
    if (li < lambda) ++k;
  }
  spec.k = k;

  spec.coeff_map = spec.eigenvectors.transpose() * M;
  spec.norm1_weights = (spec.eigenvalues.array() - lambda).abs().matrix();
  return spec;
}

std::pair<Field, Field> split(const SpectralData& spec, const Field& u) {
  Field u_minus = Field::Zero(u.size());
  if (spec.k > 0) {
    const Eigen::VectorXd coeffs = spec.coeff_map.topRows(spec.k) * u;
    u_minus = spec.eigenvectors.leftCols(spec.k) * coeffs;
  }
  return {u - u_minus, u_minus};
}

Norm1 norm1(const SpectralData& spec, const Field& u) {
  const Eigen::VectorXd coeffs = spec.coefficients(u);
  double plus_sq = 0.0;
  double minus_sq = 0.0;
  for (int i = 0; i < coeffs.size(); ++i) {
    const double term = spec.norm1_weights[i] * coeffs[i] * coeffs[i];
    if (i < spec.k) {
      minus_sq += term;
    } else {
      plus_sq += term;
    }
  }
  Norm1 out;
  out.plus = std::sqrt(plus_sq);
  out.minus = std::sqrt(minus_sq);
  out.total = std::sqrt(plus_sq + minus_sq);
  return out;
}

double norm1_inner(const SpectralData& spec, const Field& u, const Field& v) {
  const Eigen::VectorXd cu = spec.coefficients(u);
  const Eigen::VectorXd cv = spec.coefficients(v);
  return (spec.norm1_weights.array() * cu.array() * cv.array()).sum();
}

double h_lambda(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, double lambda,
                const Field& u) {
  return u.dot(K * u) - lambda * u.dot(M * u);
}

std::pair<double, double> norm_equivalence_constants(const SpectralData& spec) {
  double c0 = std::numeric_limits<double>::infinity();
  double c1 = 0.0;
  for (int i = 0; i < spec.size(); ++i) {
    const double ratio = spec.eigenvalues[i] / spec.norm1_weights[i];
    c0 = std::min(c0, ratio);
    c1 = std::max(c1, ratio);
  }
  return {c0, c1};
}

}  // namespace saddle
