#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "core/tube_grid.hpp"

namespace gapflow {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Maps matrix indices to tube nodes. Active lines are the interior x-lines
// that survived Dirichlet cuts, in ascending order; node index is
// rank(line) * ny + j.
struct GridMap {
  std::shared_ptr<const TubeGrid> grid;
  std::vector<int> active_lines;

  int ny() const { return grid->ny; }
  int dim() const { return static_cast<int>(active_lines.size()) * grid->ny; }
  int index(int line_rank, int j) const { return line_rank * grid->ny + j; }
  int line_rank_of(int idx) const { return idx / grid->ny; }
  int y_of(int idx) const { return idx % grid->ny; }
  double x_of(int idx) const { return grid->x(active_lines[line_rank_of(idx)]); }
  // Rank of a grid line among active lines, or -1 if cut/absent.
  int rank_of_line(int line) const;
};

struct LowRankTerm {
  Vec u;
  double c = 0.0;
};

// Symmetric operator: sparse stencil plus optional low-rank updates
// sum_k c_k u_k u_k^T. The stencil is stored post-cut; `bandwidth` is the
// half-bandwidth in the stored ordering. Instances are immutable once built.
struct DiscreteOperator {
  int dim = 0;
  SpMat stencil;
  std::vector<LowRankTerm> lowrank;
  int bandwidth = 0;
  std::optional<GridMap> map;
  std::set<int> cut_lines;  // grid line indices removed by Dirichlet cuts

  Vec apply(const Vec& v) const;
  // Gershgorin-style upper bound for ||H||_2, including low-rank terms.
  double norm_bound() const;
  Mat densify(int cap) const;
};

// Discrete Laplacian (5-point, Dirichlet x-ends, cyclic y) on the grid with
// the given lines removed. cuts are grid line indices in (0, nx).
DiscreteOperator build_laplacian(const std::shared_ptr<const TubeGrid>& grid,
                                 const std::set<int>& cuts = {});

// Node samples of the dislocated potential, in grid-map ordering.
Vec sample_dislocation(const GridMap& map, const DislocationFamily& family, double t);

// Laplacian plus dislocated potential on the diagonal.
DiscreteOperator assemble_hamiltonian(const std::shared_ptr<const TubeGrid>& grid,
                                      const DislocationFamily& family, double t,
                                      const std::set<int>& cuts = {});

// Same stencil with an explicit per-node potential (grid-map ordering).
DiscreteOperator assemble_with_potential(const std::shared_ptr<const TubeGrid>& grid,
                                         const Vec& potential,
                                         const std::set<int>& cuts = {});

// New operator with the grid line nearest x_cut removed. Requires a grid map
// and at least one active line strictly on each side. Low-rank vectors are
// restricted (their entries on the removed line are dropped); cutting is
// idempotent for an already-cut location.
DiscreteOperator insert_dirichlet_cut(const DiscreteOperator& op, double x_cut);

// Wraps a raw symmetric matrix (no grid attached); bandwidth is measured.
DiscreteOperator wrap_matrix(const SpMat& a, std::vector<LowRankTerm> lowrank = {});

}  // namespace gapflow
