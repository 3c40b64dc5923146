#include "core/discrete_operator.hpp"

#include <algorithm>
#include <cmath>

namespace gapflow {

int GridMap::rank_of_line(int line) const {
  auto it = std::lower_bound(active_lines.begin(), active_lines.end(), line);
  if (it == active_lines.end() || *it != line) return -1;
  return static_cast<int>(it - active_lines.begin());
}

Vec DiscreteOperator::apply(const Vec& v) const {
  Vec out = stencil * v;
  for (const auto& lr : lowrank) out += lr.c * lr.u.dot(v) * lr.u;
  return out;
}

double DiscreteOperator::norm_bound() const {
  double best = 0.0;
  std::vector<double> row_sum(static_cast<std::size_t>(dim), 0.0);
  for (int k = 0; k < stencil.outerSize(); ++k) {
    for (SpMat::InnerIterator it(stencil, k); it; ++it) {
      row_sum[static_cast<std::size_t>(it.row())] += std::abs(it.value());
    }
  }
  for (double s : row_sum) best = std::max(best, s);
  for (const auto& lr : lowrank) best += std::abs(lr.c) * lr.u.squaredNorm();
  return best;
}

Mat DiscreteOperator::densify(int cap) const {
  require(dim <= cap, errc::capacity,
          strf("dense materialization of dim %d exceeds cap %d", dim, cap));
  Mat a = Mat(stencil);
  for (const auto& lr : lowrank) a += lr.c * lr.u * lr.u.transpose();
  return a;
}

namespace {

GridMap make_map(const std::shared_ptr<const TubeGrid>& grid, const std::set<int>& cuts) {
  GridMap map;
  map.grid = grid;
  for (int line = 1; line < grid->nx; ++line) {
    if (!cuts.count(line)) map.active_lines.push_back(line);
  }
  require(!map.active_lines.empty(), errc::domain, "all interior lines were cut away");
  return map;
}

void check_cuts(const TubeGrid& grid, const std::set<int>& cuts) {
  for (int line : cuts) {
    require(line >= 1 && line <= grid.nx - 1, errc::domain,
            strf("cut at line %d outside interior 1..%d", line, grid.nx - 1));
  }
}

DiscreteOperator build_from_map(GridMap map, const Vec* potential) {
  const TubeGrid& g = *map.grid;
  const int ny = g.ny;
  const int nl = static_cast<int>(map.active_lines.size());
  const int dim = nl * ny;
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);

  DiscreteOperator op;
  op.dim = dim;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(dim) * 5);
  for (int r = 0; r < nl; ++r) {
    bool couple_left = r > 0 && map.active_lines[r - 1] == map.active_lines[r] - 1;
    bool couple_right = r + 1 < nl && map.active_lines[r + 1] == map.active_lines[r] + 1;
    for (int j = 0; j < ny; ++j) {
      int idx = map.index(r, j);
      double diag = 2.0 * ax + 2.0 * ay;
      if (potential) diag += (*potential)(idx);
      trip.emplace_back(idx, idx, diag);
      if (couple_left) trip.emplace_back(idx, map.index(r - 1, j), -ax);
      if (couple_right) trip.emplace_back(idx, map.index(r + 1, j), -ax);
      int jm = (j + ny - 1) % ny;
      int jp = (j + 1) % ny;
      trip.emplace_back(idx, map.index(r, jm), -ay);
      trip.emplace_back(idx, map.index(r, jp), -ay);
    }
  }
  op.stencil.resize(dim, dim);
  op.stencil.setFromTriplets(trip.begin(), trip.end());
  op.stencil.makeCompressed();
  op.bandwidth = ny;  // x-neighbor offset ny dominates the cyclic y wrap ny-1
  op.map = std::move(map);
  return op;
}

}  // namespace

DiscreteOperator build_laplacian(const std::shared_ptr<const TubeGrid>& grid,
                                 const std::set<int>& cuts) {
  check_cuts(*grid, cuts);
  DiscreteOperator op = build_from_map(make_map(grid, cuts), nullptr);
  op.cut_lines = cuts;
  return op;
}

Vec sample_dislocation(const GridMap& map, const DislocationFamily& family, double t) {
  Vec v(map.dim());
  const TubeGrid& g = *map.grid;
  for (int r = 0; r < static_cast<int>(map.active_lines.size()); ++r) {
    double x = g.x(map.active_lines[r]);
    for (int j = 0; j < g.ny; ++j) v(map.index(r, j)) = family.value(t, x, g.y(j));
  }
  return v;
}

DiscreteOperator assemble_hamiltonian(const std::shared_ptr<const TubeGrid>& grid,
                                      const DislocationFamily& family, double t,
                                      const std::set<int>& cuts) {
  check_cuts(*grid, cuts);
  GridMap map = make_map(grid, cuts);
  Vec pot = sample_dislocation(map, family, t);
  DiscreteOperator op = build_from_map(std::move(map), &pot);
  op.cut_lines = cuts;
  return op;
}

DiscreteOperator assemble_with_potential(const std::shared_ptr<const TubeGrid>& grid,
                                         const Vec& potential,
                                         const std::set<int>& cuts) {
  check_cuts(*grid, cuts);
  GridMap map = make_map(grid, cuts);
  require(potential.size() == map.dim(), errc::invalid_argument,
          strf("potential vector (%ld) does not match grid (%d nodes)",
               static_cast<long>(potential.size()), map.dim()));
  DiscreteOperator op = build_from_map(std::move(map), &potential);
  op.cut_lines = cuts;
  return op;
}

DiscreteOperator insert_dirichlet_cut(const DiscreteOperator& op, double x_cut) {
  require(op.map.has_value(), errc::invalid_argument,
          "insert_dirichlet_cut requires an operator with a grid map");
  const GridMap& map = *op.map;
  const TubeGrid& g = *map.grid;
  int line = static_cast<int>(std::lround((x_cut - g.x_min) / g.hx));
  require(line >= 1 && line <= g.nx - 1, errc::domain,
          strf("cut at x=%.6g snaps to line %d outside the interior", x_cut, line));
  if (op.cut_lines.count(line)) return op;  // cutting is idempotent
  int rank = map.rank_of_line(line);
  require(rank > 0 && rank + 1 < static_cast<int>(map.active_lines.size()), errc::domain,
          strf("cut at line %d needs at least one active line on each side", line));

  const int ny = map.ny();
  const int lo = rank * ny;         // first removed index
  const int hi = lo + ny;           // one past last removed index
  auto old_to_new = [&](int idx) { return idx < lo ? idx : idx - ny; };

  DiscreteOperator out;
  out.dim = op.dim - ny;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op.stencil.nonZeros()));
  for (int k = 0; k < op.stencil.outerSize(); ++k) {
    for (SpMat::InnerIterator it(op.stencil, k); it; ++it) {
      int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if ((r >= lo && r < hi) || (c >= lo && c < hi)) continue;
      trip.emplace_back(old_to_new(r), old_to_new(c), it.value());
    }
  }
  out.stencil.resize(out.dim, out.dim);
  out.stencil.setFromTriplets(trip.begin(), trip.end());
  out.stencil.makeCompressed();
  out.bandwidth = op.bandwidth;
  for (const auto& lr : op.lowrank) {
    LowRankTerm nlr;
    nlr.c = lr.c;
    nlr.u.resize(out.dim);
    for (int i = 0; i < lo; ++i) nlr.u(i) = lr.u(i);
    for (int i = hi; i < op.dim; ++i) nlr.u(i - ny) = lr.u(i);
    out.lowrank.push_back(std::move(nlr));
  }
  GridMap nmap;
  nmap.grid = map.grid;
  for (int l : map.active_lines) {
    if (l != line) nmap.active_lines.push_back(l);
  }
  out.map = std::move(nmap);
  out.cut_lines = op.cut_lines;
  out.cut_lines.insert(line);
  return out;
}

DiscreteOperator wrap_matrix(const SpMat& a, std::vector<LowRankTerm> lowrank) {
  require(a.rows() == a.cols(), errc::invalid_argument, "wrap_matrix: matrix must be square");
  DiscreteOperator op;
  op.dim = static_cast<int>(a.rows());
  op.stencil = a;
  op.stencil.makeCompressed();
  int bw = 0;
  for (int k = 0; k < op.stencil.outerSize(); ++k) {
    for (SpMat::InnerIterator it(op.stencil, k); it; ++it) {
      bw = std::max(bw, std::abs(static_cast<int>(it.row()) - static_cast<int>(it.col())));
    }
  }
  op.bandwidth = bw;
  for (auto& lr : lowrank) {
    require(lr.u.size() == op.dim, errc::invalid_argument, "low-rank vector dimension mismatch");
  }
  op.lowrank = std::move(lowrank);
  return op;
}

}  // namespace gapflow
