#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mcs {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Raised for invalid user-level configuration (bad mesh parameters,
/// overlapping boundary predicates, unsupported degree, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

/// Side labels assigned by build_structured and inherited under refinement.
enum SideTag : int { kInterior = 0, kBottom = 1, kRight = 2, kTop = 3, kLeft = 4 };

/// Conforming triangulation. Local edge i of a triangle is opposite local vertex i.
/// A facet's unit normal points out of facet_elements[f][0] (the lower triangle
/// index); its unit tangent is the normal rotated by +90 degrees.
class Mesh {
 public:
  Mesh() = default;
  /// Facet tags are all zero for meshes built this way.
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  /// Facet vertex pairs, stored with the lower global vertex index first.
  const std::vector<std::array<int, 2>>& facets() const { return facets_; }
  /// Incident triangles per facet; second entry is -1 on the boundary.
  const std::vector<std::array<int, 2>>& facet_elements() const { return facet_elements_; }
  const std::vector<std::array<int, 3>>& element_facets() const { return element_facets_; }
  const std::vector<int>& facet_tags() const { return facet_tags_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(triangles_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }
  bool is_boundary_facet(int f) const { return facet_elements_[f][1] < 0; }

  double h_max() const { return h_max_; }
  double diameter(int t) const;
  double area(int t) const;
  double facet_length(int f) const;
  Vec2 facet_midpoint(int f) const;
  Vec2 facet_normal(int f) const;
  Vec2 facet_tangent(int f) const;
  /// Ratio circumradius / inradius of triangle t.
  double shape_ratio(int t) const;

  /// Throws std::logic_error when a structural invariant is violated.
  void check_invariants() const;

  /// Plain text dump: counts line, then "v x y", "t a b c", "f a b t0 t1 tag" lines.
  void write_text(std::ostream& os) const;

 private:
  friend Mesh build_structured(int nx, int ny, const Rect& rect);
  friend Mesh refine_uniform(const Mesh& m);
  void build_topology();

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 2>> facets_;
  std::vector<std::array<int, 2>> facet_elements_;
  std::vector<std::array<int, 3>> element_facets_;
  std::vector<int> facet_tags_;
  double h_max_ = 0.0;
};

/// nx*ny cells, each split along its lower-left to upper-right diagonal.
Mesh build_structured(int nx, int ny, const Rect& rect);

/// Red refinement: every triangle split into four congruent children.
Mesh refine_uniform(const Mesh& m);

enum class BoundaryKind : int { Interior = 0, Dirichlet = 1, Neumann = 2, TildeNeumann = 3 };

/// Predicate on a boundary facet: (midpoint, side tag) -> belongs to the region.
using FacetPredicate = std::function<bool(const Vec2& midpoint, int tag)>;

struct RegionPredicates {
  FacetPredicate dirichlet;
  FacetPredicate neumann;
  FacetPredicate tilde_neumann;
};

struct BoundaryRegions {
  std::vector<int> dirichlet_facets;
  std::vector<int> neumann_facets;
  std::vector<int> tilde_neumann_facets;
  /// Per-facet classification (Interior for interior facets).
  std::vector<BoundaryKind> kind;
  /// Set whenever neither natural boundary part exists.
  bool mean_zero_pressure = false;
  std::function<Vec2(const Vec2&)> dirichlet_value;

  BoundaryKind of(int f) const { return kind[f]; }
};

BoundaryRegions classify_boundary(const Mesh& m, const RegionPredicates& predicates,
                                  std::function<Vec2(const Vec2&)> dirichlet_value = {});

/// All boundary facets Dirichlet.
BoundaryRegions all_dirichlet(const Mesh& m, std::function<Vec2(const Vec2&)> dirichlet_value = {});

/// All boundary facets Neumann, without the Dirichlet check. Only for element-level
/// experiments where rigid modes must stay in the kernel.
BoundaryRegions all_natural(const Mesh& m);

}  // namespace mcs
