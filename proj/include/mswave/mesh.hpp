#pragma once

#include "mswave/types.hpp"

#include <array>
#include <vector>

namespace mswave {

/// Position of a point inside a mesh element.
struct Location {
  int element = -1;
  std::array<double, 3> bary{};  ///< barycentric weights matching the element's vertex order
};

/// Structured simplicial mesh of an interval or a square box.
///
/// 1D: N segments, element e = (e, e+1).
/// 2D: N x N squares, vertex (i, j) -> j (N + 1) + i. Square (i, j) is split
/// along its (0,0)-(1,1) diagonal into element 2 (j N + i) = (v00, v10, v11)
/// and element 2 (j N + i) + 1 = (v00, v11, v01).
///
/// Periodic meshes keep the duplicated vertices on the far faces and record
/// their identification through periodic_master().
class Mesh {
 public:
  static Mesh uniform(int dim, int N, const Box& domain, bool periodic);

  int dim() const { return dim_; }
  int cells_per_axis() const { return N_; }
  const Box& domain() const { return domain_; }
  bool periodic() const { return periodic_; }
  double h() const { return h_; }
  double spacing(int axis) const { return domain_.length(axis) / N_; }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }
  int vertices_per_element() const { return dim_ + 1; }

  const Point& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& element(int e) const { return elements_[e]; }
  const std::vector<int>& boundary_vertices() const { return boundary_; }
  bool is_boundary_vertex(int v) const { return on_boundary_[v] != 0; }

  /// Canonical representative of v under the periodic identification (v itself otherwise).
  int periodic_master(int v) const { return master_[v]; }
  /// Elements containing the canonical vertex master (after identification).
  const std::vector<int>& vertex_elements(int master) const { return vertex_elements_[master]; }

  double element_measure(int e) const;
  Point barycenter(int e) const;
  /// Constant gradients of the element's barycentric functions, one column per local vertex.
  Eigen::Matrix<double, 2, 3> gradients(int e) const;
  /// Maps barycentric weights to the physical point.
  Point map_point(int e, const std::array<double, 3>& bary) const;

  /// Element containing x (closure of the domain) with its barycentric weights.
  Location locate(const Point& x) const;

 private:
  int dim_ = 1;
  int N_ = 0;
  Box domain_;
  bool periodic_ = false;
  double h_ = 0.0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<int> boundary_;
  std::vector<char> on_boundary_;
  std::vector<int> master_;
  std::vector<std::vector<int>> vertex_elements_;
};

Mesh build_uniform_mesh(int dim, int N, const Box& domain, bool periodic);

/// Same dimension, domain and periodicity, and the fine cell count is a multiple of the coarse one.
bool is_nested(const Mesh& coarse, const Mesh& fine);
/// Throws StructureError unless is_nested(coarse, fine).
void require_nested(const Mesh& coarse, const Mesh& fine);

struct ElementPatch {
  int center_element = 0;
  int k = 0;
  std::vector<int> elements;  ///< sorted
};

/// U_0 = {K}; U_k = elements sharing a vertex with U_{k-1}. Periodic meshes
/// wrap around.
ElementPatch element_patch(const Mesh& mesh, int K, int k);

/// Coarse element and barycentric weights of fine vertex v for a nested
/// pair, computed from integer grid indices so that coinciding vertices get
/// exact 0/1 weights.
Location nested_location(const Mesh& coarse, const Mesh& fine, int v);

/// Coarse element containing fine element t of a nested pair.
int coarse_parent(const Mesh& coarse, const Mesh& fine, int t);

/// Nodal interpolation of a piecewise linear coarse function (vertex values)
/// at the fine vertices.
Vector transfer_coarse_to_fine(const Mesh& coarse, const Mesh& fine, const Vector& coarse_values);

}  // namespace mswave
