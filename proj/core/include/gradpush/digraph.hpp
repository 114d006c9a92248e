#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace gradpush {

// Ordered pair (source, target), 0-based.
using Arc = std::pair<int, int>;

// Directed communication graph. Every vertex must carry a self-loop; arcs
// are kept sorted by (source, target) with no duplicates. Instances are
// immutable after construction and safe to share across threads.
class DiGraph {
 public:
  // Throws std::invalid_argument if a vertex index is out of range, an arc
  // repeats, or some vertex is missing its self-loop.
  DiGraph(int n, std::vector<Arc> arcs);

  int size() const { return n_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  // Number of arcs leaving each vertex; at least 1 everywhere because of
  // the self-loops.
  const std::vector<int>& out_degrees() const { return out_degree_; }

  // in_neighbors()[i] lists the sources j with an arc (j, i), ascending.
  const std::vector<std::vector<int>>& in_neighbors() const { return in_; }

  bool has_arc(int source, int target) const;

 private:
  int n_ = 0;
  std::vector<Arc> arcs_;
  std::vector<int> out_degree_;
  std::vector<std::vector<int>> in_;
};

// Cycle 0 -> 1 -> ... -> n-1 -> 0 plus self-loops.
DiGraph ring_digraph(int n);

// All n^2 ordered pairs.
DiGraph complete_digraph(int n);

// Random digraph: the n self-loops are always present and each of the
// n(n-1) other ordered pairs is included independently with probability p.
// Pairs are visited row-major over (source, target) with one uniform01
// draw each, so (n, p, seed) pins the arc set exactly. Strong connectivity
// is not guaranteed; callers validate separately.
DiGraph random_digraph(int n, double p, std::uint64_t seed);

// True iff every ordered vertex pair is joined by a directed path.
// Implemented as one reachability sweep on the graph and one on its
// transpose, both from vertex 0.
bool is_strongly_connected(const DiGraph& g);

// Plain-text edge list: first line "n=<count>", then one "i j" line per
// arc in lexicographic order.
void write_edge_list(const DiGraph& g, std::ostream& out);
DiGraph read_edge_list(std::istream& in);

}  // namespace gradpush
