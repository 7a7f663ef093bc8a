#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace markov::graph {

/// Adjacency lists of the support digraph of a nonnegative matrix:
/// edge i -> j iff T(i,j) > 0.
inline std::vector<std::vector<int>> support_digraph(const Eigen::MatrixXd& T) {
  const int n = static_cast<int>(T.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (T(i, j) > 0.0) adj[i].push_back(j);
  return adj;
}

/// States reachable from `start` in one or more steps (start itself is
/// included only if it lies on a cycle through itself).
inline std::vector<bool> reachable_from(const std::vector<std::vector<int>>& adj,
                                        int start) {
  const int n = static_cast<int>(adj.size());
  std::vector<bool> seen(n, false);
  std::vector<int> stack;
  for (int j : adj[start])
    if (!seen[j]) {
      seen[j] = true;
      stack.push_back(j);
    }
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int j : adj[u])
      if (!seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  return seen;
}

/// Strongly connected components (iterative Tarjan).  Components are
/// returned in a deterministic order: sorted by their smallest member.
inline std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int next_index = 0;

  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          std::vector<int> c;
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = static_cast<int>(comps.size());
            c.push_back(w);
          } while (w != f.v);
          std::sort(c.begin(), c.end());
          comps.push_back(std::move(c));
        }
        int v = f.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return comps;
}

/// Components with no edge leaving them (the closed communicating classes
/// of a stochastic matrix; each carries one extreme invariant distribution).
inline std::vector<std::vector<int>> closed_classes(
    const std::vector<std::vector<int>>& adj) {
  auto comps = strongly_connected_components(adj);
  const int n = static_cast<int>(adj.size());
  std::vector<int> comp_of(n, -1);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
  std::vector<std::vector<int>> closed;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    bool leaves = false;
    for (int v : comps[c]) {
      for (int w : adj[v])
        if (comp_of[w] != static_cast<int>(c)) {
          leaves = true;
          break;
        }
      if (leaves) break;
    }
    if (!leaves) closed.push_back(comps[c]);
  }
  return closed;
}

inline bool is_strongly_connected(const std::vector<std::vector<int>>& adj) {
  return strongly_connected_components(adj).size() == 1;
}

/// gcd of all cycle lengths within one strongly connected component,
/// via BFS levels: for every edge (u,v) inside the component the value
/// level(u) + 1 - level(v) is a multiple of the period.
inline int component_period(const std::vector<std::vector<int>>& adj,
                            const std::vector<int>& members) {
  const int n = static_cast<int>(adj.size());
  std::vector<bool> in(n, false);
  for (int v : members) in[v] = true;
  std::vector<int> level(n, -1);
  int start = members.front();
  level[start] = 0;
  std::vector<int> queue{start};
  std::size_t head = 0;
  int g = 0;
  while (head < queue.size()) {
    int u = queue[head++];
    for (int w : adj[u]) {
      if (!in[w]) continue;
      if (level[w] == -1) {
        level[w] = level[u] + 1;
        queue.push_back(w);
      } else {
        g = std::gcd(g, std::abs(level[u] + 1 - level[w]));
      }
    }
  }
  return g == 0 ? 1 : g;
}

/// BFS levels from the smallest member, used to lay out periodic classes.
inline std::vector<int> bfs_levels(const std::vector<std::vector<int>>& adj,
                                   const std::vector<int>& members) {
  const int n = static_cast<int>(adj.size());
  std::vector<bool> in(n, false);
  for (int v : members) in[v] = true;
  std::vector<int> level(n, -1);
  int start = members.front();
  level[start] = 0;
  std::vector<int> queue{start};
  std::size_t head = 0;
  while (head < queue.size()) {
    int u = queue[head++];
    for (int w : adj[u])
      if (in[w] && level[w] == -1) {
        level[w] = level[u] + 1;
        queue.push_back(w);
      }
  }
  return level;
}

}  // namespace markov::graph
