#include "mswave/mesh.hpp"

#include "mswave/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mswave {

Mesh Mesh::uniform(int dim, int N, const Box& domain, bool periodic) {
  if (dim != 1 && dim != 2) throw ArgumentError("mesh dimension must be 1 or 2");
  if (N < 2) throw ArgumentError("mesh needs N >= 2");
  if (domain.dim() != dim) throw ArgumentError("domain dimension does not match mesh dimension");
  for (int a = 0; a < dim; ++a) {
    if (!(domain.length(a) > 0.0)) throw ArgumentError("domain must have positive extent");
  }

  Mesh m;
  m.dim_ = dim;
  m.N_ = N;
  m.domain_ = domain;
  m.periodic_ = periodic;

  if (dim == 1) {
    const double hx = domain.length(0) / N;
    m.h_ = hx;
    for (int i = 0; i <= N; ++i) {
      m.vertices_.push_back(make_point(i == N ? domain.hi(0) : domain.lo(0) + i * hx));
    }
    for (int e = 0; e < N; ++e) m.elements_.push_back({e, e + 1, -1});
    m.boundary_ = {0, N};
    m.master_.resize(N + 1);
    for (int i = 0; i <= N; ++i) m.master_[i] = (periodic && i == N) ? 0 : i;
  } else {
    const double hx = domain.length(0) / N;
    const double hy = domain.length(1) / N;
    m.h_ = std::sqrt(hx * hx + hy * hy);
    const int nv = N + 1;
    for (int j = 0; j <= N; ++j) {
      const double y = j == N ? domain.hi(1) : domain.lo(1) + j * hy;
      for (int i = 0; i <= N; ++i) {
        const double x = i == N ? domain.hi(0) : domain.lo(0) + i * hx;
        m.vertices_.push_back(make_point(x, y));
        if (i == 0 || j == 0 || i == N || j == N) m.boundary_.push_back(j * nv + i);
      }
    }
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        const int v00 = j * nv + i;
        const int v10 = v00 + 1;
        const int v01 = v00 + nv;
        const int v11 = v01 + 1;
        m.elements_.push_back({v00, v10, v11});
        m.elements_.push_back({v00, v11, v01});
      }
    }
    m.master_.resize(nv * nv);
    for (int j = 0; j <= N; ++j) {
      for (int i = 0; i <= N; ++i) {
        const int mi = (periodic && i == N) ? 0 : i;
        const int mj = (periodic && j == N) ? 0 : j;
        m.master_[j * nv + i] = mj * nv + mi;
      }
    }
  }

  m.on_boundary_.assign(m.vertices_.size(), 0);
  for (int v : m.boundary_) m.on_boundary_[v] = 1;

  m.vertex_elements_.resize(m.vertices_.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    for (int l = 0; l <= dim; ++l) {
      auto& list = m.vertex_elements_[m.master_[m.elements_[e][l]]];
      if (list.empty() || list.back() != e) list.push_back(e);
    }
  }
  return m;
}

double Mesh::element_measure(int) const {
  if (dim_ == 1) return spacing(0);
  return 0.5 * spacing(0) * spacing(1);
}

Point Mesh::barycenter(int e) const {
  Point c = Point::Zero(dim_);
  for (int l = 0; l <= dim_; ++l) c += vertices_[elements_[e][l]];
  return c / (dim_ + 1);
}

Eigen::Matrix<double, 2, 3> Mesh::gradients(int e) const {
  Eigen::Matrix<double, 2, 3> g = Eigen::Matrix<double, 2, 3>::Zero();
  const double ix = 1.0 / spacing(0);
  if (dim_ == 1) {
    g(0, 0) = -ix;
    g(0, 1) = ix;
    return g;
  }
  const double iy = 1.0 / spacing(1);
  if (e % 2 == 0) {
    // (v00, v10, v11)
    g.col(0) << -ix, 0.0;
    g.col(1) << ix, -iy;
    g.col(2) << 0.0, iy;
  } else {
    // (v00, v11, v01)
    g.col(0) << 0.0, -iy;
    g.col(1) << ix, 0.0;
    g.col(2) << -ix, iy;
  }
  return g;
}

Point Mesh::map_point(int e, const std::array<double, 3>& bary) const {
  Point x = Point::Zero(dim_);
  for (int l = 0; l <= dim_; ++l) x += bary[l] * vertices_[elements_[e][l]];
  return x;
}

Location Mesh::locate(const Point& x) const {
  if (x.size() != dim_ || !domain_.contains(x)) throw DomainError("point outside the mesh domain");
  auto cell = [&](int axis, double& local) {
    const double s = (x(axis) - domain_.lo(axis)) / spacing(axis);
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, N_ - 1);
    local = std::clamp(s - i, 0.0, 1.0);
    return i;
  };
  Location loc;
  double s = 0.0;
  const int i = cell(0, s);
  if (dim_ == 1) {
    loc.element = i;
    loc.bary = {1.0 - s, s, 0.0};
    return loc;
  }
  double t = 0.0;
  const int j = cell(1, t);
  const int base = 2 * (j * N_ + i);
  if (s >= t) {
    loc.element = base;
    loc.bary = {1.0 - s, s - t, t};
  } else {
    loc.element = base + 1;
    loc.bary = {1.0 - t, s, t - s};
  }
  return loc;
}

Mesh build_uniform_mesh(int dim, int N, const Box& domain, bool periodic) {
  return Mesh::uniform(dim, N, domain, periodic);
}

bool is_nested(const Mesh& coarse, const Mesh& fine) {
  return coarse.dim() == fine.dim() && coarse.domain() == fine.domain() && coarse.periodic() == fine.periodic() &&
         fine.cells_per_axis() % coarse.cells_per_axis() == 0;
}

void require_nested(const Mesh& coarse, const Mesh& fine) {
  if (!is_nested(coarse, fine)) throw StructureError("fine mesh is not a refinement of the coarse mesh");
}

ElementPatch element_patch(const Mesh& mesh, int K, int k) {
  if (K < 0 || K >= mesh.n_elements()) throw ArgumentError("element index out of range");
  if (k < 0) throw ArgumentError("patch layer count must be nonnegative");
  ElementPatch patch;
  patch.center_element = K;
  patch.k = k;

  std::vector<char> in_patch(mesh.n_elements(), 0);
  std::vector<char> vertex_seen(mesh.n_vertices(), 0);
  std::vector<int> frontier = {K};
  in_patch[K] = 1;
  for (int layer = 0; layer < k; ++layer) {
    std::vector<int> next;
    for (int e : frontier) {
      for (int l = 0; l < mesh.vertices_per_element(); ++l) {
        const int v = mesh.periodic_master(mesh.element(e)[l]);
        if (vertex_seen[v]) continue;
        vertex_seen[v] = 1;
        for (int n : mesh.vertex_elements(v)) {
          if (!in_patch[n]) {
            in_patch[n] = 1;
            next.push_back(n);
          }
        }
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (in_patch[e]) patch.elements.push_back(e);
  }
  return patch;
}

Location nested_location(const Mesh& coarse, const Mesh& fine, int v) {
  const int Nf = fine.cells_per_axis();
  const int m = Nf / coarse.cells_per_axis();
  const int Nc = coarse.cells_per_axis();
  const double dm = m;
  const int i = fine.dim() == 1 ? v : v % (Nf + 1);
  const int ic = std::min(i / m, Nc - 1);
  const int a = i - ic * m;
  Location loc;
  if (fine.dim() == 1) {
    loc.element = ic;
    loc.bary = {(m - a) / dm, a / dm, 0.0};
    return loc;
  }
  const int j = v / (Nf + 1);
  const int jc = std::min(j / m, Nc - 1);
  const int b = j - jc * m;
  const int base = 2 * (jc * Nc + ic);
  if (a >= b) {
    loc.element = base;
    loc.bary = {(m - a) / dm, (a - b) / dm, b / dm};
  } else {
    loc.element = base + 1;
    loc.bary = {(m - b) / dm, a / dm, (b - a) / dm};
  }
  return loc;
}

int coarse_parent(const Mesh& coarse, const Mesh& fine, int t) {
  const int m = fine.cells_per_axis() / coarse.cells_per_axis();
  if (fine.dim() == 1) return t / m;
  const int Nf = fine.cells_per_axis();
  const int square = t / 2;
  const int i = square % Nf;
  const int j = square / Nf;
  const int a = i % m;
  const int b = j % m;
  // A fine square on the coarse diagonal is split along that diagonal.
  const bool lower = a > b || (a == b && t % 2 == 0);
  return 2 * ((j / m) * coarse.cells_per_axis() + i / m) + (lower ? 0 : 1);
}

Vector transfer_coarse_to_fine(const Mesh& coarse, const Mesh& fine, const Vector& coarse_values) {
  require_nested(coarse, fine);
  if (coarse_values.size() != coarse.n_vertices()) {
    throw ArgumentError("coarse vector length does not match the coarse vertex count");
  }
  Vector out(fine.n_vertices());
  for (int v = 0; v < fine.n_vertices(); ++v) {
    const Location loc = nested_location(coarse, fine, v);
    const auto& el = coarse.element(loc.element);
    double value = 0.0;
    for (int l = 0; l < coarse.vertices_per_element(); ++l) value += loc.bary[l] * coarse_values(el[l]);
    out(v) = value;
  }
  return out;
}

}  // namespace mswave
