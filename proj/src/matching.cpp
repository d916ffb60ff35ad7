#include "driftlab/matching.hpp"

namespace driftlab {

namespace {

bool augment(int u, const std::vector<std::vector<int>>& adj, std::vector<int>& left_match,
             std::vector<int>& right_match, std::vector<char>& visited) {
  for (int v : adj[u]) {
    if (visited[v]) continue;
    visited[v] = 1;
    if (right_match[v] == -1 || augment(right_match[v], adj, left_match, right_match, visited)) {
      left_match[u] = v;
      right_match[v] = u;
      return true;
    }
  }
  return false;
}

}  // namespace

MatchResult max_bipartite_match(const std::vector<std::vector<int>>& adjacency,
                                std::size_t n_right) {
  MatchResult res;
  res.left_match.assign(adjacency.size(), -1);
  res.right_match.assign(n_right, -1);
  std::vector<char> visited(n_right);
  for (std::size_t u = 0; u < adjacency.size(); ++u) {
    visited.assign(n_right, 0);
    if (augment(static_cast<int>(u), adjacency, res.left_match, res.right_match, visited)) {
      ++res.size;
    }
  }
  return res;
}

}  // namespace driftlab
