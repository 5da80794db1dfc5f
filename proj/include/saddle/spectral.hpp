#pragma once

#include <Eigen/Dense>
#include <utility>

#include "saddle/mesh.hpp"

namespace saddle {

// Decomposition of ||u||_1^2 into the W+ / W- parts.
struct Norm1 {
  double plus = 0.0;
  double minus = 0.0;
  double total = 0.0;
};

// Full eigendecomposition of K e = lambda_i M e with the splitting induced by
// a fixed lambda in the open gap (lambda_k, lambda_{k+1}).
//
// Normalization: |e_i|_{L^2} = 1 (M-orthonormal columns), which gives
// ||e_i||_W^2 = lambda_i. Coefficients of a field are u_i = e_i^T M u.
struct SpectralData {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column i is e_{i+1}
  double lambda = 0.0;
  int k = 0;  // #{ i : lambda_i < lambda }; 0 when lambda < lambda_1

  Eigen::MatrixXd coeff_map;      // E^T M
  Eigen::VectorXd norm1_weights;  // |lambda_i - lambda|

  Eigen::VectorXd coefficients(const Field& u) const { return coeff_map * u; }
  Field synthesize(const Eigen::VectorXd& coeffs) const { return eigenvectors * coeffs; }

  // i-th eigenvector scaled to ||.||_1 = 1 (requires lambda_i != lambda).
  Field unit_mode(int i) const {
    return eigenvectors.col(i) / std::sqrt(norm1_weights[i]);
  }

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

// Dense generalized symmetric-definite eigensolve. Rejects lambda within a
// relative tolerance of 1e-8 of any eigenvalue (open-gap requirement).
SpectralData eigendecompose(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, double lambda);

// u = u_plus + u_minus with u_minus in span{e_1..e_k}.
std::pair<Field, Field> split(const SpectralData& spec, const Field& u);

// ||u||_1^2 = sum_{i>k} (lambda_i - lambda) u_i^2 + sum_{i<=k} (lambda - lambda_i) u_i^2.
Norm1 norm1(const SpectralData& spec, const Field& u);

// The ||.||_1 inner product of two fields.
double norm1_inner(const SpectralData& spec, const Field& u, const Field& v);

// H_lambda(u) = u^T K u - lambda u^T M u.
double h_lambda(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, double lambda,
                const Field& u);

// Constants c0, c1 with c0 ||u||_1^2 <= ||u||_W^2 <= c1 ||u||_1^2 at the
// discrete level (ratios of the diagonal weights lambda_i / |lambda_i - lambda|).
std::pair<double, double> norm_equivalence_constants(const SpectralData& spec);

}  // namespace saddle
