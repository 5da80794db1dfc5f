#include "saddle/mesh.hpp"

namespace saddle {

namespace {

constexpr std::array<double, 2> kPoints2 = {-0.5773502691896257, 0.5773502691896257};
constexpr std::array<double, 2> kWeights2 = {1.0, 1.0};

constexpr std::array<double, 3> kPoints3 = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kWeights3 = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

constexpr std::array<double, 4> kPoints4 = {-0.8611363115940526, -0.3399810435848563,
                                            0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kWeights4 = {0.3478548451374538, 0.6521451548625461,
                                             0.6521451548625461, 0.3478548451374538};

constexpr std::array<double, 5> kPoints5 = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                            0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kWeights5 = {0.2369268850561891, 0.4786286704993665,
                                             0.5688888888888889, 0.4786286704993665,
                                             0.2369268850561891};

}  // namespace

QuadRule gauss_rule(int order) {
  switch (order) {
    case 2:
      return {kPoints2, kWeights2};
    case 3:
      return {kPoints3, kWeights3};
    case 4:
      return {kPoints4, kWeights4};
    case 5:
      return {kPoints5, kWeights5};
    default:
      throw PreconditionError("mesh:QuadOrder",
                              "quadrature order must be in {2,3,4,5}, got " +
                                  std::to_string(order));
  }
}

Mesh build_mesh(int n, int quad_order) {
  if (n < 2) {
    throw PreconditionError("mesh:DegenerateMesh",
                            "at least 2 interior nodes required, got " + std::to_string(n));
  }
  gauss_rule(quad_order);  // validates the order
  Mesh mesh;
  mesh.n = n;
  mesh.h = 1.0 / (n + 1);
  mesh.quad_order = quad_order;
  return mesh;
}

Eigen::MatrixXd stiffness(const Mesh& mesh) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(mesh.n, mesh.n);
  const double d = 2.0 / mesh.h;
  const double o = -1.0 / mesh.h;
  for (int i = 0; i < mesh.n; ++i) {
    k(i, i) = d;
    if (i + 1 < mesh.n) {
      k(i, i + 1) = o;
      k(i + 1, i) = o;
    }
  }
  return k;
}

Eigen::MatrixXd mass(const Mesh& mesh) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mesh.n, mesh.n);
  const double d = 2.0 * mesh.h / 3.0;
  const double o = mesh.h / 6.0;
  for (int i = 0; i < mesh.n; ++i) {
    m(i, i) = d;
    if (i + 1 < mesh.n) {
      m(i, i + 1) = o;
      m(i + 1, i) = o;
    }
  }
  return m;
}

}  // namespace saddle
