#include "mcs/element.hpp"

namespace mcs {

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  ElementGeometry g;
  g.index = t;
  const auto& tri = mesh.triangles()[t];
  for (int i = 0; i < 3; ++i) g.vertex[i] = mesh.vertices()[tri[i]];
  g.jac.col(0) = g.vertex[1] - g.vertex[0];
  g.jac.col(1) = g.vertex[2] - g.vertex[0];
  g.det = g.jac.determinant();
  g.jac_inv = g.jac.inverse();
  g.area = 0.5 * g.det;
  g.diameter = mesh.diameter(t);
  for (int e = 0; e < 3; ++e) {
    const int f = mesh.element_facets()[t][e];
    g.facet[e] = f;
    g.normal_sign[e] = (mesh.facet_elements()[f][0] == t) ? 1.0 : -1.0;
    g.reversed[e] = tri[(e + 1) % 3] != mesh.facets()[f][0];
    Vec2 d = g.vertex[(e + 2) % 3] - g.vertex[(e + 1) % 3];
    g.edge_length[e] = d.norm();
    g.outward_normal[e] = Vec2(d.y(), -d.x()) / g.edge_length[e];
    Vec2 n = g.normal_sign[e] * g.outward_normal[e];
    g.facet_tangent[e] = Vec2(-n.y(), n.x());
  }
  return g;
}

VectorTable piola_vector(const Tabulation& ref, const ElementGeometry& g, const Eigen::VectorXd& sign,
                         bool with_derivatives) {
  const Mat2& J = g.jac;
  const double s = 1.0 / g.det;
  const auto S = sign.asDiagonal();
  VectorTable out;
  out.x = s * (J(0, 0) * ref.val[0] + J(0, 1) * ref.val[1]) * S;
  out.y = s * (J(1, 0) * ref.val[0] + J(1, 1) * ref.val[1]) * S;
  if (!with_derivatives) return out;
  // grad u = J (grad_hat uhat) J^{-1} / det
  const Mat2& Ji = g.jac_inv;
  const Eigen::MatrixXd* d[2][2] = {{&ref.dx[0], &ref.dy[0]}, {&ref.dx[1], &ref.dy[1]}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ref.val[0].rows(), ref.val[0].cols());
      for (int a = 0; a < 2; ++a)
        for (int m = 0; m < 2; ++m) {
          double c = J(i, a) * Ji(m, j);
          if (c != 0.0) acc += c * (*d[a][m]);
        }
      out.grad[i][j] = s * acc * S;
    }
  out.div = out.grad[0][0] + out.grad[1][1];
  return out;
}

MatrixTable map_stress(const Tabulation& ref, const ElementGeometry& g, bool with_derivatives) {
  const Mat2 A = g.jac_inv.transpose();
  const Mat2 B = g.jac.transpose();
  MatrixTable out;
  const auto rows = ref.val[0].rows(), cols = ref.val[0].cols();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double c = A(i, a) * B(b, j);
          if (c != 0.0) acc += c * ref.val[2 * a + b];
        }
      out.m[2 * i + j] = std::move(acc);
    }
  if (!with_derivatives) return out;
  // row-wise divergence: div_i = (J^{-T} divhat tauhat)_i
  Eigen::MatrixXd dh[2];
  for (int a = 0; a < 2; ++a) dh[a] = ref.dx[2 * a + 0] + ref.dy[2 * a + 1];
  for (int i = 0; i < 2; ++i) out.div[i] = A(i, 0) * dh[0] + A(i, 1) * dh[1];
  return out;
}

MatrixTable map_compose(const Tabulation& ref) {
  MatrixTable out;
  for (int c = 0; c < 4; ++c) out.m[c] = ref.val[c];
  return out;
}

}  // namespace mcs
