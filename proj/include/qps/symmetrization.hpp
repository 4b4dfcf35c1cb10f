// Permutation-loop expansion of the symmetrization function.
//
// For a loop visiting particles (a_1, ..., a_l) the factor is
//
//   eta^(l) = s^(l-1) exp( -(i/hbar) sum_t p_{a_t} . (q_{a_{t-1}} - q_{a_t}) ),  a_0 = a_l,
//
// with s = +1 (Bose), -1 (Fermi), 0 (Boltzmann). Position differences are
// minimum-imaged in periodic boxes. Every loop has unit magnitude.

#ifndef QPS_SYMMETRIZATION_HPP
#define QPS_SYMMETRIZATION_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>

#include "qps/core.hpp"

namespace qps {

/// Ordered particle labels of one cyclic loop.
struct LoopIndex {
  std::vector<std::size_t> indices;

  std::size_t order() const { return indices.size(); }

  /// Rotates so the smallest label comes first. Orientation is kept: for
  /// l >= 3 the two directions are distinct arrangements.
  LoopIndex canonical() const {
    LoopIndex out = *this;
    auto it = std::min_element(out.indices.begin(), out.indices.end());
    std::rotate(out.indices.begin(), it, out.indices.end());
    return out;
  }

  void validate(std::size_t n_particles) const {
    if (indices.size() < 2) throw std::invalid_argument("LoopIndex: order must be at least 2");
    for (std::size_t a = 0; a < indices.size(); ++a) {
      if (indices[a] >= n_particles) throw std::out_of_range("LoopIndex: particle index out of range");
      for (std::size_t b = a + 1; b < indices.size(); ++b)
        if (indices[a] == indices[b]) throw std::invalid_argument("LoopIndex: repeated particle index");
    }
  }
};

/// Number of distinct l-loops among N labelled particles, N!/((N-l)! l).
inline double loop_count(std::size_t n, std::size_t l) {
  if (l > n || l == 0) return 0.0;
  double c = 1.0;
  for (std::size_t k = 0; k < l; ++k) c *= static_cast<double>(n - k);
  return c / static_cast<double>(l);
}

/// Pairs closer than f_cut * Lambda (minimum image). Adjacency lists are
/// sorted and symmetric.
class NeighborGraph {
 public:
  NeighborGraph() = default;
  explicit NeighborGraph(std::size_t n) : n_(n), offsets_(n + 1, 0) {}

  static NeighborGraph complete(std::size_t n) {
    NeighborGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
    g.finalize();
    g.complete_ = true;
    return g;
  }

  std::size_t size() const { return n_; }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  bool is_complete() const { return complete_; }

  bool connected(std::size_t i, std::size_t j) const {
    auto a = neighbors(i);
    return std::binary_search(a.begin(), a.end(), j);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Index of the directed edge i -> j in [0, 2 * edge_count()), or npos.
  std::size_t edge_index(std::size_t i, std::size_t j) const {
    auto a = neighbors(i);
    auto it = std::lower_bound(a.begin(), a.end(), j);
    return (it != a.end() && *it == j) ? offsets_[i] + static_cast<std::size_t>(it - a.begin()) : npos;
  }
  std::size_t edge_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t edge_target(std::size_t k) const { return targets_[k]; }

  std::size_t edge_count() const { return targets_.size() / 2; }

  /// Edges are staged until finalize() builds the sorted adjacency arrays.
  void add_edge(std::size_t i, std::size_t j) { pending_.push_back({i, j}); }
  void finalize() {
    std::fill(offsets_.begin(), offsets_.end(), 0);
    for (auto [i, j] : pending_) {
      ++offsets_[i + 1];
      ++offsets_[j + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
    targets_.assign(offsets_[n_], 0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (auto [i, j] : pending_) {
      targets_[fill[i]++] = j;
      targets_[fill[j]++] = i;
    }
    for (std::size_t i = 0; i < n_; ++i)
      std::sort(targets_.begin() + offsets_[i], targets_.begin() + offsets_[i + 1]);
    pending_.clear();
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> targets_;
  std::vector<std::pair<std::size_t, std::size_t>> pending_;
  bool complete_ = false;
};

namespace detail {

inline double squared_separation(const PhaseConfig& c, std::size_t i, std::size_t j, const ThermoState& s) {
  double r2 = 0.0;
  auto qi = c.position(i);
  auto qj = c.position(j);
  for (int a = 0; a < c.dimension(); ++a) {
    double d = displacement(qi[a], qj[a], s);
    r2 += d * d;
  }
  return r2;
}

/// Contribution p_b . (q_a - q_b) of the step a -> b around a loop.
inline double loop_step(const PhaseConfig& c, std::size_t a, std::size_t b, const ThermoState& s) {
  auto qa = c.position(a);
  auto qb = c.position(b);
  auto pb = c.momentum(b);
  double sum = 0.0;
  for (int k = 0; k < c.dimension(); ++k) sum += pb[k] * displacement(qa[k], qb[k], s);
  return sum;
}

inline double sign_power(int sign, std::size_t l) {
  if (sign == 0) return 0.0;
  return (sign < 0 && (l - 1) % 2 == 1) ? -1.0 : 1.0;
}

}  // namespace detail

/// Builds the neighbour graph with cut-off radius f_cut * Lambda. Uses cell
/// lists when the periodic box holds at least three cells per axis, a plain
/// pair scan otherwise.
inline NeighborGraph build_neighbor_graph(const PhaseConfig& c, const ThermoState& s, double f_cut) {
  if (!(f_cut > 0)) throw std::invalid_argument("build_neighbor_graph: f_cut must be positive");
  const std::size_t n = c.size();
  const double rc = f_cut * thermal_wavelength(s);
  const double rc2 = rc * rc;
  NeighborGraph g(n);
  const int d = c.dimension();
  const double L = s.box_edge;

  if (s.boundary != Boundary::Periodic || L <= 3.0 * rc) {
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (detail::squared_separation(c, i, j, s) < rc2) g.add_edge(i, j);
    g.finalize();
    return g;
  }

  const int nc = static_cast<int>(std::floor(L / rc));
  const double cell = L / nc;
  std::array<int, 3> dims{1, 1, 1};
  for (int a = 0; a < d; ++a) dims[a] = nc;
  const std::size_t ncells = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  auto flat = [&](const std::array<int, 3>& cc) {
    return (static_cast<std::size_t>(cc[0]) * dims[1] + cc[1]) * dims[2] + cc[2];
  };
  // wrapped coordinates padded to three axes, and particles sorted by cell:
  // members of cell k are order[start[k] .. start[k+1])
  std::vector<double> x(3 * n, 0.0);
  std::vector<std::size_t> cell_of(n), start(ncells + 1, 0), order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<int, 3> cc{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      x[3 * i + a] = wrap_coordinate(c.position(i)[a], L);
      cc[a] = std::clamp(static_cast<int>(std::floor(x[3 * i + a] / cell)), 0, nc - 1);
    }
    cell_of[i] = flat(cc);
    ++start[cell_of[i] + 1];
  }
  for (std::size_t k = 0; k < ncells; ++k) start[k + 1] += start[k];
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order[fill[cell_of[i]]++] = i;
  }
  // each cell against its (distinct, since nc >= 3) neighbour cells; the
  // periodic image shift is fixed per neighbour cell
  struct Neighbour {
    std::size_t cell;
    std::array<double, 3> shift;
  };
  std::vector<Neighbour> around;
  for (std::size_t k = 0; k < ncells; ++k) {
    if (start[k] == start[k + 1]) continue;
    const std::array<int, 3> ck{static_cast<int>(k / (dims[1] * dims[2])), static_cast<int>(k / dims[2] % dims[1]),
                                static_cast<int>(k % dims[2])};
    around.clear();
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = (d > 1 ? -1 : 0); dy <= (d > 1 ? 1 : 0); ++dy)
        for (int dz = (d > 2 ? -1 : 0); dz <= (d > 2 ? 1 : 0); ++dz) {
          std::array<int, 3> nb{ck[0] + dx, ck[1] + dy, ck[2] + dz};
          std::array<double, 3> shift{0.0, 0.0, 0.0};
          for (int a = 0; a < d; ++a) {
            if (nb[a] < 0) {
              nb[a] += nc;
              shift[a] = -L;
            } else if (nb[a] >= nc) {
              nb[a] -= nc;
              shift[a] = L;
            }
          }
          const std::size_t kk = flat(nb);
          if (start[kk] != start[kk + 1]) around.push_back({kk, shift});
        }
    for (std::size_t u = start[k]; u < start[k + 1]; ++u) {
      const std::size_t i = order[u];
      const double* xi = &x[3 * i];
      for (const auto& nb : around)
        for (std::size_t t = start[nb.cell]; t < start[nb.cell + 1]; ++t) {
          const std::size_t j = order[t];
          if (j <= i) continue;
          const double* xj = &x[3 * j];
          const double e0 = xj[0] + nb.shift[0] - xi[0];
          const double e1 = xj[1] + nb.shift[1] - xi[1];
          const double e2 = xj[2] + nb.shift[2] - xi[2];
          if (e0 * e0 + e1 * e1 + e2 * e2 < rc2) g.add_edge(i, j);
        }
    }
  }
  g.finalize();
  return g;
}

inline ComplexWeight loop_factor(const PhaseConfig& c, const LoopIndex& loop, const ThermoState& s) {
  loop.validate(c.size());
  const std::size_t l = loop.order();
  double phase = 0.0;
  for (std::size_t t = 0; t < l; ++t) {
    std::size_t prev = loop.indices[(t + l - 1) % l];
    phase += detail::loop_step(c, prev, loop.indices[t], s);
  }
  phase /= -s.hbar;
  return detail::sign_power(exchange_sign(s.statistics), l) * Complex(std::cos(phase), std::sin(phase));
}

inline ComplexWeight dimer_factor(const PhaseConfig& c, std::size_t j, std::size_t k, const ThermoState& s) {
  return loop_factor(c, LoopIndex{{j, k}}, s);
}

/// Canonical loops of orders 2..l_max restricted to graph edges, stored
/// flat per order so they can be re-evaluated for many momentum draws.
/// steps[l] holds, per loop, the directed edges into each member: the
/// closing edge last -> first, then first -> second and so on.
struct LoopList {
  std::size_t max_order = 0;
  std::vector<std::vector<std::size_t>> members;  // members[l] = concatenated loops of order l
  std::vector<std::vector<std::size_t>> steps;
  std::vector<std::size_t> edge_source, edge_target;

  std::size_t count(std::size_t l) const { return l < members.size() ? members[l].size() / l : 0; }
};

namespace detail {

struct LoopEnumerator {
  const NeighborGraph& g;
  LoopList& out;
  std::size_t l_max;
  std::size_t start = 0;
  std::vector<std::size_t> path, edges;
  std::vector<char> on_path;

  void extend() {
    const std::size_t last = path.back();
    const std::size_t k = path.size();
    if (k >= 2) {
      const std::size_t close = g.edge_index(last, start);
      if (close != NeighborGraph::npos) {
        out.members[k].insert(out.members[k].end(), path.begin(), path.end());
        out.steps[k].push_back(close);
        out.steps[k].insert(out.steps[k].end(), edges.begin(), edges.end());
      }
    }
    if (k == l_max) return;
    const std::size_t base = g.edge_offset(last);
    const auto nbs = g.neighbors(last);
    for (std::size_t e = 0; e < nbs.size(); ++e) {
      const std::size_t nb = nbs[e];
      if (nb <= start || on_path[nb]) continue;
      path.push_back(nb);
      edges.push_back(base + e);
      on_path[nb] = 1;
      extend();
      on_path[nb] = 0;
      edges.pop_back();
      path.pop_back();
    }
  }
};

}  // namespace detail

inline LoopList enumerate_loops(const NeighborGraph& g, std::size_t l_max) {
  if (l_max < 2) throw std::invalid_argument("enumerate_loops: l_max must be at least 2");
  LoopList out;
  out.max_order = l_max;
  out.members.assign(l_max + 1, {});
  out.steps.assign(l_max + 1, {});
  const std::size_t n_edges = 2 * g.edge_count();
  out.edge_source.resize(n_edges);
  out.edge_target.resize(n_edges);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t k = g.edge_offset(i); k < g.edge_offset(i + 1); ++k) {
      out.edge_source[k] = i;
      out.edge_target[k] = g.edge_target(k);
    }
  detail::LoopEnumerator en{g, out, l_max, 0, {}, {}, std::vector<char>(g.size(), 0)};
  for (std::size_t s0 = 0; s0 < g.size(); ++s0) {
    en.start = s0;
    en.path.assign(1, s0);
    en.on_path[s0] = 1;
    en.extend();
    en.on_path[s0] = 0;
  }
  return out;
}

/// Per-order single-loop sums for a precomputed loop list; index l holds
/// eta-dot^(l), entries 0 and 1 are zero.
inline std::vector<Complex> evaluate_loop_sums(const PhaseConfig& c, const ThermoState& s, const LoopList& loops) {
  std::vector<Complex> sums(loops.max_order + 1, Complex{});
  const int sign = exchange_sign(s.statistics);
  if (sign == 0) return sums;
  const double inv_hbar = 1.0 / s.hbar;
  std::vector<double> edge_phase(loops.edge_source.size());
  for (std::size_t k = 0; k < edge_phase.size(); ++k)
    edge_phase[k] = -inv_hbar * detail::loop_step(c, loops.edge_source[k], loops.edge_target[k], s);
  for (std::size_t l = 2; l <= loops.max_order; ++l) {
    const auto& st = loops.steps[l];
    double re = 0.0, im = 0.0;
    for (std::size_t base = 0; base < st.size(); base += l) {
      double phase = 0.0;
      for (std::size_t t = 0; t < l; ++t) phase += edge_phase[st[base + t]];
      re += std::cos(phase);
      im += std::sin(phase);
    }
    sums[l] = detail::sign_power(sign, l) * Complex(re, im);
  }
  return sums;
}

inline std::vector<Complex> single_loop_sums(const PhaseConfig& c, const ThermoState& s, std::size_t l_max,
                                             const NeighborGraph& g) {
  return evaluate_loop_sums(c, s, enumerate_loops(g, l_max));
}

/// eta-dot^(l): sum over distinct l-loops whose successive members are graph
/// neighbours.
inline ComplexWeight single_loop_sum(const PhaseConfig& c, const ThermoState& s, std::size_t l,
                                     const NeighborGraph& g) {
  if (l < 2) throw std::invalid_argument("single_loop_sum: order must be at least 2");
  if (c.size() < l) return {};
  return single_loop_sums(c, s, l, g)[l];
}

/// 1 + single loops + (optionally) products of disjoint loops, each loop of
/// order <= l_max along graph edges. With a complete graph, l_max = N and
/// products on, this is the full permutation sum.
inline ComplexWeight full_eta_truncated(const PhaseConfig& c, const ThermoState& s, const NeighborGraph& g,
                                        std::size_t l_max, bool products) {
  if (l_max < 2) throw std::invalid_argument("full_eta_truncated: l_max must be at least 2");
  const std::size_t n = c.size();
  if (n > 64) throw std::invalid_argument("full_eta_truncated: at most 64 particles");
  const int sign = exchange_sign(s.statistics);
  if (sign == 0 || n < 2) return {1.0, 0.0};
  if (!products) {
    Complex total{1.0, 0.0};
    auto sums = single_loop_sums(c, s, std::min(l_max, n), g);
    for (std::size_t l = 2; l < sums.size(); ++l) total += sums[l];
    return total;
  }

  const double inv_hbar = 1.0 / s.hbar;
  const std::uint64_t all = (n == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
  std::size_t path[64];

  // Sum over permutations of the unused particles, recursion on the lowest
  // unused label: either a fixed point or the head of a loop.
  std::function<Complex(std::uint64_t)> rest = [&](std::uint64_t used) -> Complex {
    if (used == all) return {1.0, 0.0};
    std::size_t head = static_cast<std::size_t>(std::countr_one(used));
    std::uint64_t with_head = used | (std::uint64_t{1} << head);
    Complex total = rest(with_head);
    path[0] = head;

    std::function<void(std::size_t, std::uint64_t, double)> walk = [&](std::size_t k, std::uint64_t mask,
                                                                       double phase) {
      const std::size_t last = path[k - 1];
      if (k >= 2 && (k == 2 || g.connected(last, head))) {
        double closed = phase + detail::loop_step(c, last, head, s);
        double ph = -closed * inv_hbar;
        total += detail::sign_power(sign, k) * Complex(std::cos(ph), std::sin(ph)) * rest(mask);
      }
      if (k == l_max) return;
      for (std::size_t nb : g.neighbors(last)) {
        if (nb <= head || (mask >> nb) & 1u) continue;
        path[k] = nb;
        walk(k + 1, mask | (std::uint64_t{1} << nb), phase + detail::loop_step(c, last, nb, s));
      }
    };
    walk(1, with_head, 0.0);
    return total;
  };
  return rest(0);
}

}  // namespace qps

#endif  // QPS_SYMMETRIZATION_HPP
