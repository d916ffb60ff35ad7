#pragma once

#include <cstddef>
#include <vector>

namespace driftlab {

/// Maximum-cardinality bipartite matching via augmenting paths (Kuhn's
/// algorithm, O(V*E)). adjacency[i] lists the right-side vertices reachable
/// from left vertex i. Deterministic: vertices are tried in index order.
struct MatchResult {
  std::size_t size = 0;
  std::vector<int> left_match;   // right index per left vertex, -1 unmatched
  std::vector<int> right_match;  // left index per right vertex, -1 unmatched
};

MatchResult max_bipartite_match(const std::vector<std::vector<int>>& adjacency,
                                std::size_t n_right);

}  // namespace driftlab
