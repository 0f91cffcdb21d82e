#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Sparse>

#include "eki/forward_model.hpp"

namespace eki {

using SparseMatrix = Eigen::SparseMatrix<double>;
using SourceFunction = std::function<double(double x, double y)>;

/// Uniform triangulation of (-1,1)^2 with (n+2)^2 nodes and spacing
/// h = 2/(n+1). Every grid square is cut along its (i,j)-(i+1,j+1) diagonal.
/// The n^2 interior nodes carry the unknowns; boundary nodes are Dirichlet.
class SquareGrid {
 public:
  explicit SquareGrid(int n);

  int n() const { return n_; }
  double h() const { return h_; }
  Index node_count() const { return static_cast<Index>(n_ + 2) * (n_ + 2); }
  Index interior_count() const { return static_cast<Index>(n_) * n_; }

  /// Node at column i, row j, both in [0, n+1].
  Index node(int i, int j) const { return i + static_cast<Index>(n_ + 2) * j; }
  Eigen::Vector2d coordinate(Index node) const;

  /// Unknown index of a node, or -1 on the boundary.
  Index interior_index(Index node) const { return interior_of_node_[static_cast<std::size_t>(node)]; }
  Index interior_node(Index k) const { return node_of_interior_[static_cast<std::size_t>(k)]; }

  const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }

  /// Interior values scattered into a full nodal vector (zero on the boundary).
  Vector extend(const Vector& interior_values) const;

  /// Negative Laplacian on the interior nodes with homogeneous Dirichlet
  /// conditions, L = M^{-1/2} K: K is the P1 stiffness of -Laplace (the 5-point
  /// stencil on this mesh) and M = h^2 I the lumped mass, so L is the stencil
  /// scaled by 1/h and L^{-1} xi solves -Laplace u = white noise.
  SparseMatrix negative_laplacian() const;

 private:
  int n_;
  double h_;
  std::vector<Index> interior_of_node_;
  std::vector<Index> node_of_interior_;
  std::vector<std::array<Index, 3>> triangles_;
};

/// P1 finite elements for -div(exp(u) grad p) = f on (-1,1)^2, p = 0 on the
/// boundary, observed by point evaluation on a uniform interior lattice.
///
/// The control u is the nodal log conductivity on the interior nodes; each
/// triangle uses exp of the mean of u over its interior vertices. Observations sit at nodes (s*k, s*l), k,l = 1..lattice, with
/// s = (n+1)/(lattice+1), so n+1 must be a multiple of lattice+1.
class GroundwaterModel final : public ForwardModel {
 public:
  GroundwaterModel(int n, double force, int lattice = 20);

  Index control_dim() const override { return grid_.interior_count(); }
  Index observation_dim() const override { return static_cast<Index>(observation_nodes_.size()); }
  Vector apply(const Vector& u) const override;

  /// Exact tangent: dp = -A(u)^{-1} (dA[v] p), one factorisation for all directions.
  Matrix tangent(const Vector& u_ref, const Matrix& directions) const override;

  /// Stiffness on the interior unknowns.
  SparseMatrix stiffness(const Vector& u) const;
  Vector load(const SourceFunction& source) const;

  /// Full nodal pressure, exactly zero on the boundary.
  Vector fem_solve(const Vector& u) const;
  Vector fem_solve(const Vector& u, const SourceFunction& source) const;

  Vector observe(const Vector& nodal_field) const;

  const SquareGrid& grid() const { return grid_; }
  double force() const { return force_; }
  const std::vector<Index>& observation_nodes() const { return observation_nodes_; }

 private:
  /// Mean of interior values over the interior vertices of triangle t (0 if none).
  double element_mean(const Vector& interior_values, std::size_t t) const;
  Vector element_conductivity(const Vector& u) const;
  Vector solve_interior(const Vector& u, const Vector& rhs) const;

  SquareGrid grid_;
  double force_;
  std::vector<Index> observation_nodes_;
  std::vector<Eigen::Matrix3d> local_stiffness_;  // geometric part per triangle
  std::vector<double> areas_;
  SparseMatrix pattern_;
  std::vector<std::array<Index, 9>> value_slot_;  // -1 where a row or column is Dirichlet
};

/// CSV rows (x, y, value) for a full nodal field.
void write_field_csv(std::ostream& out, const SquareGrid& grid, const Vector& nodal_values);

/// CSV rows (x, y, value) for values attached to a list of nodes.
void write_node_values_csv(std::ostream& out, const SquareGrid& grid, const std::vector<Index>& nodes,
                           const Vector& values);

}  // namespace eki
