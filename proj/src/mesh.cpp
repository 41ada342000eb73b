#include "mcs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

namespace mcs {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  build_topology();
}

void Mesh::build_topology() {
  const int nv = num_vertices();
  facets_.clear();
  facet_elements_.clear();
  element_facets_.assign(triangles_.size(), {-1, -1, -1});
  std::map<std::pair<int, int>, int> lookup;
  for (int t = 0; t < num_elements(); ++t) {
    const auto& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      if (tri[i] < 0 || tri[i] >= nv) throw std::logic_error("triangle references unknown vertex");
      int a = tri[(i + 1) % 3], b = tri[(i + 2) % 3];
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        int f = static_cast<int>(facets_.size());
        lookup.emplace(key, f);
        facets_.push_back({key.first, key.second});
        facet_elements_.push_back({t, -1});
        element_facets_[t][i] = f;
      } else {
        int f = it->second;
        if (facet_elements_[f][1] >= 0) throw std::logic_error("facet shared by more than two triangles");
        facet_elements_[f][1] = t;
        element_facets_[t][i] = f;
      }
    }
  }
  facet_tags_.assign(facets_.size(), kInterior);
  h_max_ = 0.0;
  for (int t = 0; t < num_elements(); ++t) h_max_ = std::max(h_max_, diameter(t));
}

double Mesh::diameter(int t) const {
  const auto& tri = triangles_[t];
  double d = 0.0;
  for (int i = 0; i < 3; ++i)
    d = std::max(d, (vertices_[tri[(i + 1) % 3]] - vertices_[tri[i]]).norm());
  return d;
}

double Mesh::area(int t) const {
  const auto& tri = triangles_[t];
  return 0.5 * cross2(vertices_[tri[1]] - vertices_[tri[0]], vertices_[tri[2]] - vertices_[tri[0]]);
}

double Mesh::facet_length(int f) const {
  return (vertices_[facets_[f][1]] - vertices_[facets_[f][0]]).norm();
}

Vec2 Mesh::facet_midpoint(int f) const {
  return 0.5 * (vertices_[facets_[f][0]] + vertices_[facets_[f][1]]);
}

Vec2 Mesh::facet_normal(int f) const {
  Vec2 d = vertices_[facets_[f][1]] - vertices_[facets_[f][0]];
  Vec2 n(d.y(), -d.x());
  n.normalize();
  // orient out of the lower-index triangle
  int t = facet_elements_[f][0];
  const auto& tri = triangles_[t];
  Vec2 centroid = (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
  if (n.dot(facet_midpoint(f) - centroid) < 0) n = -n;
  return n;
}

Vec2 Mesh::facet_tangent(int f) const {
  Vec2 n = facet_normal(f);
  return Vec2(-n.y(), n.x());
}

double Mesh::shape_ratio(int t) const {
  const auto& tri = triangles_[t];
  double a = (vertices_[tri[1]] - vertices_[tri[2]]).norm();
  double b = (vertices_[tri[2]] - vertices_[tri[0]]).norm();
  double c = (vertices_[tri[0]] - vertices_[tri[1]]).norm();
  double A = area(t);
  double s = 0.5 * (a + b + c);
  double circum = a * b * c / (4.0 * A);
  double in = A / s;
  return circum / in;
}

void Mesh::check_invariants() const {
  for (int t = 0; t < num_elements(); ++t)
    if (!(area(t) > 0.0)) throw std::logic_error("triangle with non-positive signed area");
  for (int f = 0; f < num_facets(); ++f) {
    const auto& fe = facet_elements_[f];
    if (fe[0] < 0) throw std::logic_error("facet without incident triangle");
    if (fe[1] >= 0 && fe[1] <= fe[0]) throw std::logic_error("facet adjacency not ordered");
    if (facets_[f][0] >= facets_[f][1]) throw std::logic_error("facet vertices not ordered");
    if (fe[1] >= 0 && facet_tags_[f] != kInterior) throw std::logic_error("interior facet carries a boundary tag");
  }
  if (num_vertices() - num_facets() + num_elements() != 1)
    throw std::logic_error("Euler relation V - E + F = 1 violated");
}

void Mesh::write_text(std::ostream& os) const {
  os << num_vertices() << ' ' << num_elements() << ' ' << num_facets() << '\n';
  os.precision(17);
  for (const auto& v : vertices_) os << "v " << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : triangles_) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int f = 0; f < num_facets(); ++f)
    os << "f " << facets_[f][0] << ' ' << facets_[f][1] << ' ' << facet_elements_[f][0] << ' '
       << facet_elements_[f][1] << ' ' << facet_tags_[f] << '\n';
}

Mesh build_structured(int nx, int ny, const Rect& rect) {
  if (nx < 1 || ny < 1) throw ConfigError("build_structured: nx and ny must be positive");
  const double w = rect.x1 - rect.x0, h = rect.y1 - rect.y0;
  if (!(w > 0.0) || !(h > 0.0)) throw ConfigError("build_structured: degenerate rectangle");
  std::vector<Vec2> verts;
  verts.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) verts.emplace_back(rect.x0 + w * i / nx, rect.y0 + h * j / ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }
  Mesh m(std::move(verts), std::move(tris));
  const double tol = 1e-12 * std::max(w, h);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (!m.is_boundary_facet(f)) continue;
    Vec2 c = m.facet_midpoint(f);
    if (std::abs(c.y() - rect.y0) < tol) m.facet_tags_[f] = kBottom;
    else if (std::abs(c.x() - rect.x1) < tol) m.facet_tags_[f] = kRight;
    else if (std::abs(c.y() - rect.y1) < tol) m.facet_tags_[f] = kTop;
    else m.facet_tags_[f] = kLeft;
  }
  m.check_invariants();
  return m;
}

Mesh refine_uniform(const Mesh& m) {
  const int nv = m.num_vertices();
  std::vector<Vec2> verts = m.vertices();
  verts.reserve(nv + m.num_facets());
  for (int f = 0; f < m.num_facets(); ++f) verts.push_back(m.facet_midpoint(f));
  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * m.num_elements());
  for (int t = 0; t < m.num_elements(); ++t) {
    const auto& v = m.triangles()[t];
    const auto& e = m.element_facets()[t];
    // midpoint opposite local vertex i
    int m0 = nv + e[0], m1 = nv + e[1], m2 = nv + e[2];
    tris.push_back({v[0], m2, m1});
    tris.push_back({m2, v[1], m0});
    tris.push_back({m1, m0, v[2]});
    tris.push_back({m0, m1, m2});
  }
  Mesh r(std::move(verts), std::move(tris));
  for (int f = 0; f < r.num_facets(); ++f) {
    if (!r.is_boundary_facet(f)) continue;
    // a boundary child facet joins an old vertex and the midpoint of its parent
    int a = r.facets()[f][0], b = r.facets()[f][1];
    int mid = std::max(a, b);
    if (mid < nv) throw std::logic_error("refine_uniform: unexpected boundary facet");
    r.facet_tags_[f] = m.facet_tags()[mid - nv];
  }
  r.check_invariants();
  return r;
}

BoundaryRegions classify_boundary(const Mesh& m, const RegionPredicates& predicates,
                                  std::function<Vec2(const Vec2&)> dirichlet_value) {
  BoundaryRegions reg;
  reg.kind.assign(m.num_facets(), BoundaryKind::Interior);
  reg.dirichlet_value = std::move(dirichlet_value);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (!m.is_boundary_facet(f)) continue;
    Vec2 c = m.facet_midpoint(f);
    int tag = m.facet_tags()[f];
    bool d = predicates.dirichlet && predicates.dirichlet(c, tag);
    bool n = predicates.neumann && predicates.neumann(c, tag);
    bool tn = predicates.tilde_neumann && predicates.tilde_neumann(c, tag);
    int count = int(d) + int(n) + int(tn);
    if (count != 1) {
      std::ostringstream msg;
      msg << "boundary facet " << f << " at (" << c.x() << ", " << c.y() << ") matches " << count
          << " boundary regions; exactly one is required";
      throw ConfigError(msg.str());
    }
    if (d) {
      reg.kind[f] = BoundaryKind::Dirichlet;
      reg.dirichlet_facets.push_back(f);
    } else if (n) {
      reg.kind[f] = BoundaryKind::Neumann;
      reg.neumann_facets.push_back(f);
    } else {
      reg.kind[f] = BoundaryKind::TildeNeumann;
      reg.tilde_neumann_facets.push_back(f);
    }
  }
  if (reg.dirichlet_facets.empty()) throw ConfigError("boundary classification: Dirichlet part is empty");
  reg.mean_zero_pressure = reg.neumann_facets.empty() && reg.tilde_neumann_facets.empty();
  return reg;
}

BoundaryRegions all_dirichlet(const Mesh& m, std::function<Vec2(const Vec2&)> dirichlet_value) {
  RegionPredicates p;
  p.dirichlet = [](const Vec2&, int) { return true; };
  return classify_boundary(m, p, std::move(dirichlet_value));
}

BoundaryRegions all_natural(const Mesh& m) {
  BoundaryRegions r;
  r.kind.assign(m.num_facets(), BoundaryKind::Interior);
  for (int f = 0; f < m.num_facets(); ++f)
    if (m.is_boundary_facet(f)) {
      r.kind[f] = BoundaryKind::Neumann;
      r.neumann_facets.push_back(f);
    }
  return r;
}

}  // namespace mcs
