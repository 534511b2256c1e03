// Transportation-problem network simplex.
//
// The basis is a spanning tree over m row nodes and n column nodes (m + n - 1 cells).
// Every pivot rebuilds the tree's potentials and flows from scratch, which keeps the
// flows exact functions of the masses instead of accumulating pivot round-off.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "codi/errors.hpp"
#include "codi/ot.hpp"
#include "codi/simd.hpp"

namespace codi {
namespace {

constexpr double kMassMismatchLimit = 1e-6;
constexpr double kNegativeFlowSlack = 1e-9;

struct Cell {
  std::size_t row;
  std::size_t col;
};

class SpanningTree {
 public:
  SpanningTree(std::size_t m, std::size_t n)
      : m_(m), n_(n), offsets_(m + n + 1), adjacency_(2 * (m + n - 1)), parent_(m + n),
        parent_edge_(m + n), depth_(m + n), order_(m + n) {}

  std::size_t nodes() const { return m_ + n_; }

  // Rebuilds adjacency and the BFS order rooted at row node 0.
  void rebuild(const std::vector<Cell>& basis) {
    std::ranges::fill(offsets_, 0);
    for (const auto& c : basis) {
      ++offsets_[c.row + 1];
      ++offsets_[m_ + c.col + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    cursor_.assign(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adjacency_[cursor_[basis[e].row]++] = e;
      adjacency_[cursor_[m_ + basis[e].col]++] = e;
    }

    std::ranges::fill(depth_, kUnvisited);
    depth_[0] = 0;
    parent_[0] = kNone;
    parent_edge_[0] = kNone;
    order_[0] = 0;
    std::size_t head = 0;
    std::size_t tail = 1;
    while (head < tail) {
      const std::size_t x = order_[head++];
      for (std::size_t k = offsets_[x]; k < offsets_[x + 1]; ++k) {
        const std::size_t e = adjacency_[k];
        const std::size_t y = x < m_ ? m_ + basis[e].col : basis[e].row;
        if (depth_[y] != kUnvisited) continue;
        depth_[y] = depth_[x] + 1;
        parent_[y] = x;
        parent_edge_[y] = e;
        order_[tail++] = y;
      }
    }
    if (tail != nodes()) throw ValidationError("network simplex basis is not a spanning tree");
  }

  // u_i + v_j = c_ij on every basic cell, u_0 = 0.
  void potentials(const std::vector<Cell>& basis, const CostMatrix& cost, std::vector<double>& u,
                  std::vector<double>& v) const {
    u[0] = 0.0;
    for (std::size_t k = 1; k < nodes(); ++k) {
      const std::size_t y = order_[k];
      const Cell c = basis[parent_edge_[y]];
      if (y < m_) {
        u[y] = cost(c.row, c.col) - v[c.col];
      } else {
        v[y - m_] = cost(c.row, c.col) - u[c.row];
      }
    }
  }

  // Flow on each basic cell implied by the supplies, computed leaf-first.
  void flows(const std::vector<Cell>& basis, std::span<const double> a, std::span<const double> b,
             std::vector<double>& flow) {
    net_.resize(nodes());
    for (std::size_t i = 0; i < m_; ++i) net_[i] = a[i];
    for (std::size_t j = 0; j < n_; ++j) net_[m_ + j] = -b[j];
    for (std::size_t k = nodes() - 1; k > 0; --k) {
      const std::size_t y = order_[k];
      flow[parent_edge_[y]] = y < m_ ? net_[y] : -net_[y];
      net_[parent_[y]] += net_[y];
    }
    (void)basis;
  }

  // Cycle closed by entering cell (row, col): tree edges from the column node back to
  // the row node. Edges at even positions lose flow, odd positions gain.
  void cycle(std::size_t row, std::size_t col, std::vector<std::size_t>& edges) {
    edges.clear();
    up_.clear();
    std::size_t x = m_ + col;
    std::size_t y = row;
    while (depth_[x] > depth_[y]) {
      edges.push_back(parent_edge_[x]);
      x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
      up_.push_back(parent_edge_[y]);
      y = parent_[y];
    }
    while (x != y) {
      edges.push_back(parent_edge_[x]);
      x = parent_[x];
      up_.push_back(parent_edge_[y]);
      y = parent_[y];
    }
    edges.insert(edges.end(), up_.rbegin(), up_.rend());
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();

  std::size_t m_;
  std::size_t n_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cursor_;
  std::vector<std::size_t> adjacency_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> parent_edge_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> up_;
  std::vector<double> net_;
};

void check_masses(std::span<const double> masses, const char* name) {
  for (double w : masses) {
    if (!std::isfinite(w)) throw ValidationError(std::string(name) + " contains non-finite mass");
    if (w < 0.0) throw ValidationError(std::string(name) + " contains negative mass");
  }
}

std::vector<Cell> north_west_corner(std::span<const double> a, std::span<const double> b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  std::vector<Cell> basis;
  basis.reserve(m + n - 1);
  std::vector<double> supply(a.begin(), a.end());
  std::vector<double> demand(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  while (true) {
    basis.push_back({i, j});
    const double shipped = std::min(supply[i], demand[j]);
    supply[i] -= shipped;
    demand[j] -= shipped;
    if (i == m - 1 && j == n - 1) break;
    if (j == n - 1 || (i < m - 1 && supply[i] <= demand[j])) {
      ++i;
    } else {
      ++j;
    }
  }
  return basis;
}

}  // namespace

TransportPlan solve_ot(std::span<const double> a, std::span<const double> b, const CostMatrix& cost,
                       const SimplexOptions& options) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0 || n == 0) throw ShapeError("solve_ot needs non-empty mass vectors");
  if (cost.rows != m || cost.cols != n || cost.values.size() != m * n) {
    throw ShapeError("cost matrix is " + std::to_string(cost.rows) + "x" +
                     std::to_string(cost.cols) + ", masses need " + std::to_string(m) + "x" +
                     std::to_string(n));
  }
  check_masses(a, "a");
  check_masses(b, "b");
  for (double c : cost.values) {
    if (!std::isfinite(c)) throw ValidationError("cost matrix contains non-finite values");
  }
  const double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
  const double sum_b = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sum_a - sum_b) > kMassMismatchLimit) {
    throw InfeasibleError("mass totals differ: sum(a) = " + std::to_string(sum_a) +
                          ", sum(b) = " + std::to_string(sum_b));
  }
  if (!(sum_a > 0.0)) throw InfeasibleError("total mass must be positive");

  // Column masses are matched to the row total so the tree flows close exactly.
  std::vector<double> demand(b.begin(), b.end());
  if (sum_b != sum_a) {
    for (auto& w : demand) w *= sum_a / sum_b;
  }

  std::vector<double> supply_eps(a.begin(), a.end());
  std::vector<double> demand_eps = demand;
  for (auto& w : supply_eps) w += options.perturbation;
  demand_eps.back() += static_cast<double>(m) * options.perturbation;

  std::vector<Cell> basis = north_west_corner(supply_eps, demand_eps);
  SpanningTree tree(m, n);
  std::vector<double> u(m);
  std::vector<double> v(n);
  std::vector<double> flow(basis.size());
  std::vector<std::size_t> cycle;

  std::size_t pivots = 0;
  while (true) {
    tree.rebuild(basis);
    tree.potentials(basis, cost, u, v);

    // Bland: lowest-index cell (row-major) with negative reduced cost enters.
    std::size_t enter_row = m;
    std::size_t enter_col = n;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = simd::first_below(cost.row(i), v, u[i] - options.tolerance);
      if (j < n) {
        enter_row = i;
        enter_col = j;
        break;
      }
    }
    if (enter_row == m) break;

    if (++pivots > options.max_pivots) {
      throw ValidationError("network simplex exceeded " + std::to_string(options.max_pivots) +
                            " pivots");
    }

    tree.flows(basis, supply_eps, demand_eps, flow);
    tree.cycle(enter_row, enter_col, cycle);

    // Bland: among minimum-ratio candidates the lowest-index cell leaves.
    std::size_t leave = cycle.front();
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const std::size_t e = cycle[k];
      const auto index = [&](std::size_t edge) { return basis[edge].row * n + basis[edge].col; };
      if (flow[e] < flow[leave] || (flow[e] == flow[leave] && index(e) < index(leave))) leave = e;
    }
    basis[leave] = {enter_row, enter_col};
  }

  tree.flows(basis, a, demand, flow);

  TransportPlan plan;
  plan.rows = m;
  plan.cols = n;
  plan.pivots = pivots;
  plan.values.assign(m * n, 0.0);
  for (std::size_t e = 0; e < basis.size(); ++e) {
    double f = flow[e];
    if (f < 0.0) {
      if (f < -kNegativeFlowSlack) {
        throw ValidationError("network simplex produced a negative flow of " + std::to_string(f));
      }
      f = 0.0;
    }
    plan.values[basis[e].row * n + basis[e].col] = f;
  }
  for (std::size_t k = 0; k < plan.values.size(); ++k) plan.objective += plan.values[k] * cost.values[k];
  return plan;
}

}  // namespace codi
