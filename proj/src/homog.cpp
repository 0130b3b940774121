#include "mswave/homog.hpp"

#include "mswave/errors.hpp"
#include "mswave/parallel.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace mswave {

std::string to_string(MicroCoupling c) { return c == MicroCoupling::periodic ? "periodic" : "dirichlet"; }

MicroCoupling micro_coupling_from_string(const std::string& name) {
  if (name == "periodic") return MicroCoupling::periodic;
  if (name == "dirichlet") return MicroCoupling::dirichlet;
  throw ArgumentError("unknown micro coupling '" + name + "'");
}

namespace {

// |K| times the quadrature mean of a over each element.
std::vector<Tensor> integrated_tensors(const Mesh& mesh, const TensorFn& a, int quad_order) {
  const QuadratureRule rule = quadrature_rule(mesh.dim(), quad_order);
  std::vector<Tensor> out(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Tensor acc = Tensor::Zero(mesh.dim(), mesh.dim());
    for (std::size_t q = 0; q < rule.weights.size(); ++q) acc += rule.weights[q] * a(mesh.map_point(e, rule.nodes[q]));
    out[e] = mesh.element_measure(e) * acc;
  }
  return out;
}

Point element_gradient(const Mesh& mesh, const DofMap& dofs, int e, const Vector& u) {
  const auto g = mesh.gradients(e);
  Point grad = Point::Zero(mesh.dim());
  for (int l = 0; l < mesh.vertices_per_element(); ++l) {
    const int d = dofs.dof(mesh.element(e)[l]);
    if (d >= 0) grad += u(d) * g.col(l).head(mesh.dim());
  }
  return grad;
}

Tensor constant_tensor(const Tensor& a0) { return a0; }

}  // namespace

CorrectorSolution solve_correctors(const Box& box, int n_per_axis, const TensorFn& a, MicroCoupling coupling,
                                   int quad_order) {
  const int dim = box.dim();
  CorrectorSolution sol;
  sol.coupling = coupling;
  sol.mesh = Mesh::uniform(dim, n_per_axis, box, coupling == MicroCoupling::periodic);
  const Mesh& mesh = sol.mesh;
  const auto acc = integrated_tensors(mesh, a, quad_order);
  const BoundaryCondition bc =
      coupling == MicroCoupling::periodic ? BoundaryCondition::periodic : BoundaryCondition::dirichlet;
  const SparseOperator K = assemble_stiffness(
      mesh, [&](int e, const Point&) -> Tensor { return acc[e] / mesh.element_measure(e); }, 1, bc);
  const SparseOperator M = assemble_mass(mesh, bc);
  sol.dofs = K.dofs;
  const int n = K.size();

  std::vector<Vector> rhs(dim, Vector::Zero(n));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto g = mesh.gradients(e);
    for (int l = 0; l < mesh.vertices_per_element(); ++l) {
      const int d = sol.dofs.dof(mesh.element(e)[l]);
      if (d < 0) continue;
      const Point flux_row = acc[e].transpose() * g.col(l).head(dim);
      for (int j = 0; j < dim; ++j) rhs[j](d) -= flux_row(j);
    }
  }

  if (coupling == MicroCoupling::periodic) {
    // Bordered system [K c; c^T 0] with c = M 1 fixes int chi = 0.
    const Vector c = M.matrix * Vector::Ones(n);
    std::vector<Triplet> trip;
    trip.reserve(K.matrix.nonZeros() + 2 * n);
    for (int k = 0; k < K.matrix.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(K.matrix, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    }
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(i, n, c(i));
      trip.emplace_back(n, i, c(i));
    }
    SparseMatrix bordered(n + 1, n + 1);
    bordered.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(bordered);
    if (lu.info() != Eigen::Success) throw SolverError("cell problem factorization failed");
    for (int j = 0; j < dim; ++j) {
      Vector r = Vector::Zero(n + 1);
      r.head(n) = rhs[j];
      const Vector x = lu.solve(r);
      if (lu.info() != Eigen::Success) throw SolverError("cell problem solve failed");
      sol.chi.push_back(x.head(n));
    }
  } else {
    SpdSolver solver(K.matrix);
    for (int j = 0; j < dim; ++j) sol.chi.push_back(solver.solve(rhs[j]));
  }

  for (int j = 0; j < dim; ++j) {
    const double rn = rhs[j].norm();
    if (rn > 0.0) sol.residual = std::max(sol.residual, (K.matrix * sol.chi[j] - rhs[j]).norm() / rn);
  }

  const double vol = box.measure();
  sol.energy = Tensor::Zero(dim, dim);
  sol.second_moment = Tensor::Zero(dim, dim);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Tensor grads(dim, dim);  // column j = e_j + grad chi_j
    for (int j = 0; j < dim; ++j) {
      grads.col(j) = element_gradient(mesh, sol.dofs, e, sol.chi[j]);
      grads(j, j) += 1.0;
    }
    sol.energy += grads.transpose() * acc[e] * grads;
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double v = sol.chi[i].dot(M.matrix * sol.chi[j]);
      sol.second_moment(i, j) = v;
      sol.second_moment(j, i) = v;
    }
  }
  sol.energy = 0.5 * (sol.energy + sol.energy.transpose()) / vol;
  sol.second_moment /= vol;
  return sol;
}

CellSolution solve_cell_problems(const CoefficientField& field, const Point& slow_point, int N_cell,
                                 int quad_order) {
  if (!field.has_unit_cell()) throw ArgumentError("cell problems need a coefficient with a unit cell");
  if (N_cell < 4) throw ArgumentError("cell problems need N_cell >= 4");
  if (slow_point.size() != field.dim()) throw ArgumentError("slow point dimension mismatch");
  CellSolution cell;
  cell.slow_point = slow_point;
  cell.correctors = solve_correctors(
      Box::unit(field.dim()), N_cell, [&](const Point& y) { return field.cell_eval(slow_point, y); },
      MicroCoupling::periodic, quad_order);
  return cell;
}

HomogenizedTensorReport homogenized_tensor_report(const CellSolution& cell, const CoefficientField& field,
                                                  int quad_order) {
  const Mesh& mesh = cell.correctors.mesh;
  const int dim = mesh.dim();
  const auto acc =
      integrated_tensors(mesh, [&](const Point& y) { return field.cell_eval(cell.slow_point, y); }, quad_order);
  Tensor a0 = Tensor::Zero(dim, dim);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Tensor grads(dim, dim);
    for (int j = 0; j < dim; ++j) {
      grads.col(j) = element_gradient(mesh, cell.correctors.dofs, e, cell.correctors.chi[j]);
      grads(j, j) += 1.0;
    }
    a0 += acc[e] * grads;
  }
  a0 /= mesh.domain().measure();
  HomogenizedTensorReport rep;
  rep.asymmetry = (a0 - a0.transpose()).cwiseAbs().maxCoeff() / std::max(1e-300, a0.cwiseAbs().maxCoeff());
  if (rep.asymmetry > 1e-8) throw ConsistencyError("homogenized tensor is not symmetric");
  rep.a0 = 0.5 * (a0 + a0.transpose());
  const auto [lo, hi] = symmetric_eigenvalue_range(rep.a0);
  if (lo < field.alpha() * (1.0 - 1e-8) || hi > field.beta() * (1.0 + 1e-8)) {
    throw ConsistencyError("homogenized tensor violates the spectral bounds");
  }
  return rep;
}

Tensor homogenized_tensor(const CellSolution& cell, const CoefficientField& field) {
  return homogenized_tensor_report(cell, field).a0;
}

double dispersive_coefficient_1d(const CellSolution& cell) {
  if (cell.dim() != 1) throw ArgumentError("b0 is only defined in 1D");
  return cell.correctors.second_moment(0, 0);
}

EffectiveTensors effective_tensors(const CoefficientField& field, const Point& slow_point, int N_cell) {
  const CellSolution cell = solve_cell_problems(field, slow_point, N_cell);
  EffectiveTensors t;
  t.a0 = homogenized_tensor(cell, field);
  if (field.dim() == 1) t.b0 = dispersive_coefficient_1d(cell);
  return t;
}

TensorFn homogenized_coefficient(const CoefficientField& field, int N_cell, int n_sample_points) {
  const Box& box = field.domain();
  const int dim = field.dim();
  if (field.kind() != CoeffKind::locally_periodic) {
    const Point center = 0.5 * (box.lo + box.hi);
    const Tensor a0 = effective_tensors(field, center, N_cell).a0;
    return [a0](const Point&) { return constant_tensor(a0); };
  }
  if (n_sample_points > 0) {
    const int n = n_sample_points;
    auto node = [&box, n](int axis, int k) {
      return n == 1 ? 0.5 * (box.lo(axis) + box.hi(axis)) : box.lo(axis) + box.length(axis) * k / (n - 1);
    };
    const int total = dim == 1 ? n : n * n;
    std::vector<Tensor> samples(total);
    parallel_for(total, [&](int idx) {
      const Point x = dim == 1 ? make_point(node(0, idx)) : make_point(node(0, idx % n), node(1, idx / n));
      samples[idx] = effective_tensors(field, x, N_cell).a0;
    });
    return [samples, box, n, dim](const Point& x) -> Tensor {
      if (n == 1) return samples[0];
      std::array<int, 2> k{0, 0};
      std::array<double, 2> w{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        const double s = std::clamp((x(a) - box.lo(a)) / box.length(a), 0.0, 1.0) * (n - 1);
        k[a] = std::min(static_cast<int>(std::floor(s)), n - 2);
        w[a] = s - k[a];
      }
      if (dim == 1) return (1.0 - w[0]) * samples[k[0]] + w[0] * samples[k[0] + 1];
      auto at = [&](int i, int j) -> const Tensor& { return samples[(k[1] + j) * n + k[0] + i]; };
      return (1.0 - w[0]) * (1.0 - w[1]) * at(0, 0) + w[0] * (1.0 - w[1]) * at(1, 0) +
             (1.0 - w[0]) * w[1] * at(0, 1) + w[0] * w[1] * at(1, 1);
    };
  }
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<double, double>, Tensor> values;
  };
  auto cache = std::make_shared<Cache>();
  return [cache, field, N_cell](const Point& x) -> Tensor {
    const std::pair<double, double> key{x(0), x.size() > 1 ? x(1) : 0.0};
    {
      std::lock_guard<std::mutex> lock(cache->mutex);
      auto it = cache->values.find(key);
      if (it != cache->values.end()) return it->second;
    }
    Tensor a0 = effective_tensors(field, x, N_cell).a0;
    std::lock_guard<std::mutex> lock(cache->mutex);
    cache->values.emplace(key, a0);
    return a0;
  };
}

Trajectory solve_homogenized_wave(const TensorFn& a0, const Mesh& mesh, BoundaryCondition bc,
                                  const WaveData& data, const TimeGrid& grid, int quad_order) {
  const SparseOperator K = assemble_stiffness(mesh, a0, quad_order, bc);
  const SparseOperator M = assemble_mass(mesh, bc);
  const WaveState s0 = initial_state(mesh, M, data, &K, a0);
  return integrate(M.matrix, K.matrix, make_load(mesh, M.dofs, data), s0, grid);
}

Trajectory solve_homogenized_wave(const Tensor& a0, const Mesh& mesh, BoundaryCondition bc, const WaveData& data,
                                  const TimeGrid& grid) {
  return solve_homogenized_wave([a0](const Point&) { return constant_tensor(a0); }, mesh, bc, data, grid, 2);
}

Trajectory solve_boussinesq_1d(double a0, double b0, double eps, const Mesh& mesh, const WaveData& data,
                               const TimeGrid& grid) {
  if (mesh.dim() != 1 || !mesh.periodic()) throw ArgumentError("the Boussinesq solver needs a periodic 1D mesh");
  if (!(b0 >= 0.0) || !(a0 > 0.0)) throw ArgumentError("Boussinesq coefficients need a0 > 0 and b0 >= 0");
  Tensor a(1, 1);
  a(0, 0) = a0;
  const TensorFn coeff = [a](const Point&) { return a; };
  const SparseOperator K = assemble_stiffness(mesh, coeff, 2, BoundaryCondition::periodic);
  const SparseOperator M = assemble_mass(mesh, BoundaryCondition::periodic);
  const SparseOperator L = assemble_laplacian(mesh, BoundaryCondition::periodic);
  const SparseMatrix Meff = M.matrix + (eps * eps * b0) * L.matrix;
  const WaveState s0 = initial_state(mesh, M, data, &K, coeff);
  return integrate(Meff, K.matrix, make_load(mesh, M.dofs, data), s0, grid);
}

double boussinesq_energy(double a0, double b0, double eps, const SparseMatrix& mass, const SparseMatrix& laplacian,
                         const Vector& u, const Vector& v) {
  return 0.5 * v.dot(mass * v) + 0.5 * eps * eps * b0 * v.dot(laplacian * v) + 0.5 * a0 * u.dot(laplacian * u);
}

Vector wellprepared_initial(const CoefficientField& field, const TensorFn& a0, const Vector& g1,
                            const Mesh& fine_mesh, BoundaryCondition bc) {
  const SparseOperator Ke = assemble_stiffness(fine_mesh, field, 2, bc);
  const SparseOperator K0 = assemble_stiffness(fine_mesh, a0, 2, bc);
  if (g1.size() != Ke.size()) throw ArgumentError("g1 has the wrong length");
  Vector x = solve_direct(Ke, K0.matrix * g1);
  if (Ke.dofs.semidefinite()) x.array() += g1.mean();
  return x;
}

Vector harmonic_coordinate_1d(const CoefficientField& field, const Mesh& fine_mesh) {
  if (fine_mesh.dim() != 1 || field.dim() != 1) throw ArgumentError("harmonic coordinate is 1D only");
  const SparseOperator K = assemble_stiffness(fine_mesh, field, 3, BoundaryCondition::dirichlet);
  const Vector rhs = -assemble_flux_load(
      fine_mesh, K.dofs, [&](int, const Point& x) -> Point { return field.eval_extended(x).col(0); }, 3);
  const Vector w = K.dofs.expand(SpdSolver(K.matrix).solve(rhs));
  Vector G(fine_mesh.n_vertices());
  for (int v = 0; v < fine_mesh.n_vertices(); ++v) G(v) = fine_mesh.vertex(v)(0) + w(v);
  return G;
}

}  // namespace mswave
