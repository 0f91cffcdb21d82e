#include "eki/groundwater.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCholesky>

#include "eki/run_record.hpp"

namespace eki {

SquareGrid::SquareGrid(int n) : n_(n), h_(2.0 / (n + 1)) {
  if (n < 1) {
    throw std::invalid_argument("grid needs at least one interior node per axis");
  }
  interior_of_node_.assign(static_cast<std::size_t>(node_count()), -1);
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      interior_of_node_[static_cast<std::size_t>(node(i, j))] = static_cast<Index>(node_of_interior_.size());
      node_of_interior_.push_back(node(i, j));
    }
  }
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      triangles_.push_back({node(i, j), node(i + 1, j), node(i + 1, j + 1)});
      triangles_.push_back({node(i, j), node(i + 1, j + 1), node(i, j + 1)});
    }
  }
}

Eigen::Vector2d SquareGrid::coordinate(Index node) const {
  const Index stride = n_ + 2;
  return {-1.0 + h_ * static_cast<double>(node % stride), -1.0 + h_ * static_cast<double>(node / stride)};
}

Vector SquareGrid::extend(const Vector& interior_values) const {
  if (interior_values.size() != interior_count()) {
    throw std::invalid_argument("interior field has " + std::to_string(interior_values.size()) +
                                " values, grid has " + std::to_string(interior_count()));
  }
  Vector full = Vector::Zero(node_count());
  for (Index k = 0; k < interior_count(); ++k) {
    full[interior_node(k)] = interior_values[k];
  }
  return full;
}

SparseMatrix SquareGrid::negative_laplacian() const {
  std::vector<Eigen::Triplet<double>> entries;
  const double inv_h = 1.0 / h_;
  for (Index k = 0; k < interior_count(); ++k) {
    const Index nd = interior_node(k);
    entries.emplace_back(k, k, 4.0 * inv_h);
    for (Index neighbour : {nd - 1, nd + 1, nd - (n_ + 2), nd + (n_ + 2)}) {
      const Index m = interior_index(neighbour);
      if (m >= 0) entries.emplace_back(k, m, -inv_h);
    }
  }
  SparseMatrix lap(interior_count(), interior_count());
  lap.setFromTriplets(entries.begin(), entries.end());
  return lap;
}

GroundwaterModel::GroundwaterModel(int n, double force, int lattice) : grid_(n), force_(force) {
  if (lattice < 1 || (n + 1) % (lattice + 1) != 0) {
    throw std::invalid_argument("grid resolution n=" + std::to_string(n) + " cannot host a " +
                                std::to_string(lattice) + "x" + std::to_string(lattice) +
                                " observation lattice (n+1 must be a multiple of " +
                                std::to_string(lattice + 1) + ")");
  }
  const int stride = (n + 1) / (lattice + 1);
  for (int l = 1; l <= lattice; ++l) {
    for (int k = 1; k <= lattice; ++k) {
      observation_nodes_.push_back(grid_.node(stride * k, stride * l));
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (const auto& tri : grid_.triangles()) {
    Eigen::Matrix2d edges;
    const Eigen::Vector2d p0 = grid_.coordinate(tri[0]);
    edges.col(0) = grid_.coordinate(tri[1]) - p0;
    edges.col(1) = grid_.coordinate(tri[2]) - p0;
    const double area = 0.5 * std::abs(edges.determinant());
    const Eigen::Matrix2d inv_t = edges.inverse().transpose();
    Eigen::Matrix<double, 2, 3> grads;
    grads.col(1) = inv_t.col(0);
    grads.col(2) = inv_t.col(1);
    grads.col(0) = -grads.col(1) - grads.col(2);
    local_stiffness_.push_back(area * grads.transpose() * grads);
    areas_.push_back(area);

    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const Index ra = grid_.interior_index(tri[static_cast<std::size_t>(a)]);
        const Index cb = grid_.interior_index(tri[static_cast<std::size_t>(b)]);
        if (ra >= 0 && cb >= 0) entries.emplace_back(ra, cb, 1.0);
      }
    }
  }
  pattern_.resize(grid_.interior_count(), grid_.interior_count());
  pattern_.setFromTriplets(entries.begin(), entries.end());
  pattern_.makeCompressed();

  // Slot of every local (a,b) pair inside the compressed value array.
  for (const auto& tri : grid_.triangles()) {
    std::array<Index, 9> slots{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const Index row = grid_.interior_index(tri[static_cast<std::size_t>(a)]);
        const Index col = grid_.interior_index(tri[static_cast<std::size_t>(b)]);
        Index slot = -1;
        if (row >= 0 && col >= 0) {
          const auto* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col];
          const auto* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col + 1];
          slot = static_cast<Index>(std::lower_bound(begin, end, row) - pattern_.innerIndexPtr());
        }
        slots[static_cast<std::size_t>(3 * a + b)] = slot;
      }
    }
    value_slot_.push_back(slots);
  }
}

double GroundwaterModel::element_mean(const Vector& interior_values, std::size_t t) const {
  double sum = 0.0;
  int count = 0;
  for (Index node : grid_.triangles()[t]) {
    const Index k = grid_.interior_index(node);
    if (k >= 0) {
      sum += interior_values[k];
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

Vector GroundwaterModel::element_conductivity(const Vector& u) const {
  if (u.size() != control_dim()) {
    throw std::invalid_argument("log conductivity has " + std::to_string(u.size()) + " values, expected " +
                                std::to_string(control_dim()));
  }
  if (!u.allFinite()) {
    throw std::domain_error("log conductivity contains non-finite values");
  }
  const std::size_t count = grid_.triangles().size();
  Vector kappa(static_cast<Index>(count));
  for (std::size_t t = 0; t < count; ++t) kappa[static_cast<Index>(t)] = std::exp(element_mean(u, t));
  if (!kappa.allFinite()) {
    throw std::domain_error("conductivity overflows");
  }
  return kappa;
}

SparseMatrix GroundwaterModel::stiffness(const Vector& u) const {
  const Vector kappa = element_conductivity(u);
  SparseMatrix a = pattern_;
  std::fill(a.valuePtr(), a.valuePtr() + a.nonZeros(), 0.0);
  double* values = a.valuePtr();
  for (std::size_t t = 0; t < local_stiffness_.size(); ++t) {
    const auto& slots = value_slot_[t];
    const Eigen::Matrix3d& local = local_stiffness_[t];
    for (int a_ = 0; a_ < 3; ++a_) {
      for (int b = 0; b < 3; ++b) {
        const Index slot = slots[static_cast<std::size_t>(3 * a_ + b)];
        if (slot >= 0) values[slot] += kappa[static_cast<Index>(t)] * local(a_, b);
      }
    }
  }
  return a;
}

Vector GroundwaterModel::load(const SourceFunction& source) const {
  Vector b = Vector::Zero(control_dim());
  const auto& tris = grid_.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    // Edge-midpoint quadrature: phi_a is 1/2 at the midpoints of its two edges.
    std::array<double, 3> f_mid{};  // f at the midpoint opposite vertex a
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector2d mid = 0.5 * (grid_.coordinate(tris[t][static_cast<std::size_t>((a + 1) % 3)]) +
                                         grid_.coordinate(tris[t][static_cast<std::size_t>((a + 2) % 3)]));
      f_mid[static_cast<std::size_t>(a)] = source(mid.x(), mid.y());
    }
    for (int a = 0; a < 3; ++a) {
      const Index row = grid_.interior_index(tris[t][static_cast<std::size_t>(a)]);
      if (row < 0) continue;
      const double adjacent = f_mid[static_cast<std::size_t>((a + 1) % 3)] + f_mid[static_cast<std::size_t>((a + 2) % 3)];
      b[row] += areas_[t] / 6.0 * adjacent;
    }
  }
  return b;
}

Vector GroundwaterModel::solve_interior(const Vector& u, const Vector& rhs) const {
  Eigen::SimplicialLLT<SparseMatrix> llt(stiffness(u));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("stiffness matrix is not positive definite");
  }
  return llt.solve(rhs);
}

Vector GroundwaterModel::fem_solve(const Vector& u) const {
  const double f = force_;
  return fem_solve(u, [f](double, double) { return f; });
}

Vector GroundwaterModel::fem_solve(const Vector& u, const SourceFunction& source) const {
  return grid_.extend(solve_interior(u, load(source)));
}

Vector GroundwaterModel::observe(const Vector& nodal_field) const {
  if (nodal_field.size() != grid_.node_count()) {
    throw std::invalid_argument("nodal field has " + std::to_string(nodal_field.size()) + " values, grid has " +
                                std::to_string(grid_.node_count()));
  }
  Vector obs(observation_dim());
  for (std::size_t k = 0; k < observation_nodes_.size(); ++k) {
    obs[static_cast<Index>(k)] = nodal_field[observation_nodes_[k]];
  }
  return obs;
}

Vector GroundwaterModel::apply(const Vector& u) const { return observe(fem_solve(u)); }

Matrix GroundwaterModel::tangent(const Vector& u_ref, const Matrix& directions) const {
  if (directions.rows() != control_dim()) {
    throw std::invalid_argument("tangent directions must live in control space");
  }
  const Vector kappa = element_conductivity(u_ref);
  Eigen::SimplicialLLT<SparseMatrix> llt(stiffness(u_ref));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("stiffness matrix is not positive definite");
  }
  const double f = force_;
  const Vector p = grid_.extend(llt.solve(load([f](double, double) { return f; })));

  const auto& tris = grid_.triangles();
  Matrix rhs = Matrix::Zero(control_dim(), directions.cols());
  for (Index c = 0; c < directions.cols(); ++c) {
    const Vector v = directions.col(c);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& tri = tris[t];
      // d kappa_T / d v = kappa_T * mean_T(v)
      const double dk = kappa[static_cast<Index>(t)] * element_mean(v, t);
      if (dk == 0.0) continue;
      const Eigen::Vector3d p_local(p[tri[0]], p[tri[1]], p[tri[2]]);
      const Eigen::Vector3d contrib = dk * (local_stiffness_[t] * p_local);
      for (int a = 0; a < 3; ++a) {
        const Index row = grid_.interior_index(tri[static_cast<std::size_t>(a)]);
        if (row >= 0) rhs(row, c) -= contrib[a];
      }
    }
  }
  const Matrix dp_interior = llt.solve(rhs);
  Matrix out(observation_dim(), directions.cols());
  for (Index c = 0; c < directions.cols(); ++c) {
    out.col(c) = observe(grid_.extend(dp_interior.col(c)));
  }
  return out;
}

void write_field_csv(std::ostream& out, const SquareGrid& grid, const Vector& nodal_values) {
  if (nodal_values.size() != grid.node_count()) {
    throw std::invalid_argument("field dump needs one value per grid node");
  }
  out << "x,y,value\n";
  for (Index k = 0; k < grid.node_count(); ++k) {
    const Eigen::Vector2d xy = grid.coordinate(k);
    out << format_double(xy.x()) << ',' << format_double(xy.y()) << ',' << format_double(nodal_values[k]) << '\n';
  }
}

void write_node_values_csv(std::ostream& out, const SquareGrid& grid, const std::vector<Index>& nodes,
                           const Vector& values) {
  if (static_cast<Index>(nodes.size()) != values.size()) {
    throw std::invalid_argument("node list and value list differ in length");
  }
  out << "x,y,value\n";
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Eigen::Vector2d xy = grid.coordinate(nodes[k]);
    out << format_double(xy.x()) << ',' << format_double(xy.y()) << ','
        << format_double(values[static_cast<Index>(k)]) << '\n';
  }
}

}  // namespace eki
