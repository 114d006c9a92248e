#include "gradpush/digraph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gradpush/rng.hpp"
#include "text_util.hpp"

namespace gradpush {

DiGraph::DiGraph(int n, std::vector<Arc> arcs) : n_(n), arcs_(std::move(arcs)) {
  if (n_ < 1) throw std::invalid_argument("digraph: vertex count must be >= 1");
  std::sort(arcs_.begin(), arcs_.end());
  out_degree_.assign(n_, 0);
  in_.assign(n_, {});
  std::vector<char> self_loop(n_, 0);
  const Arc* prev = nullptr;
  for (const Arc& a : arcs_) {
    if (a.first < 0 || a.first >= n_ || a.second < 0 || a.second >= n_) {
      throw std::invalid_argument("digraph: arc (" + std::to_string(a.first) +
                                  ", " + std::to_string(a.second) +
                                  ") is out of range");
    }
    if (prev && *prev == a) {
      throw std::invalid_argument("digraph: duplicate arc (" +
                                  std::to_string(a.first) + ", " +
                                  std::to_string(a.second) + ")");
    }
    prev = &a;
    ++out_degree_[a.first];
    in_[a.second].push_back(a.first);
    if (a.first == a.second) self_loop[a.first] = 1;
  }
  for (int i = 0; i < n_; ++i) {
    if (!self_loop[i]) {
      throw std::invalid_argument("digraph: vertex " + std::to_string(i) +
                                  " has no self-loop");
    }
  }
}

bool DiGraph::has_arc(int source, int target) const {
  return std::binary_search(arcs_.begin(), arcs_.end(), Arc{source, target});
}

DiGraph ring_digraph(int n) {
  std::vector<Arc> arcs;
  arcs.reserve(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    arcs.emplace_back(i, i);
    if (n > 1) arcs.emplace_back(i, (i + 1) % n);
  }
  return DiGraph(n, std::move(arcs));
}

DiGraph complete_digraph(int n) {
  std::vector<Arc> arcs;
  arcs.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) arcs.emplace_back(i, j);
  return DiGraph(n, std::move(arcs));
}

DiGraph random_digraph(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_digraph: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("random_digraph: p must lie in [0, 1]");
  DrawStream draws(seed);
  std::vector<Arc> arcs;
  // One draw per non-self pair, row-major over (source, target), so the
  // seed pins the arc set independently of p-dependent branching.
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t) {
        arcs.emplace_back(s, t);
      } else if (draws.uniform01() < p) {
        arcs.emplace_back(s, t);
      }
    }
  }
  return DiGraph(n, std::move(arcs));
}

namespace {

bool reaches_all(int n, const std::vector<std::vector<int>>& adj) {
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

}  // namespace

bool is_strongly_connected(const DiGraph& g) {
  const int n = g.size();
  std::vector<std::vector<int>> out(n), in(n);
  for (const Arc& a : g.arcs()) {
    out[a.first].push_back(a.second);
    in[a.second].push_back(a.first);
  }
  return reaches_all(n, out) && reaches_all(n, in);
}

void write_edge_list(const DiGraph& g, std::ostream& out) {
  out << "n=" << g.size() << '\n';
  for (const Arc& a : g.arcs()) out << a.first << ' ' << a.second << '\n';
}

DiGraph read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("edge list: empty input");
  std::string_view key, value;
  if (!detail::split_key_value(line, &key, &value) || key != "n")
    throw std::invalid_argument("edge list: first line must be n=<count>");
  const long n = detail::parse_long(value, "edge list n");
  std::vector<Arc> arcs;
  int s = 0, t = 0;
  while (in >> s >> t) arcs.emplace_back(s, t);
  if (!in.eof() && in.fail()) {
    in.clear();
    std::string rest;
    std::getline(in, rest);
    throw std::invalid_argument("edge list: bad arc line near '" + rest + "'");
  }
  return DiGraph(static_cast<int>(n), std::move(arcs));
}

}  // namespace gradpush
