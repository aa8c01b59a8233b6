#ifndef PCHSAT_DECOMP_HPP
#define PCHSAT_DECOMP_HPP

// Tree decompositions of primal graphs: elimination-order construction
// (greedy min-fill or exact subset DP), normalization to nice form, and
// verification.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/formula.hpp"

namespace pchsat {

inline constexpr std::size_t kDefaultExactLimit = 16;

struct TreeDecomposition {
  std::size_t num_vertices = 0;
  std::vector<std::vector<VarId>> bags;  // each sorted
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& b : bags) w = std::max(w, b.size());
    return w == 0 ? 0 : w - 1;
  }
};

enum class DecompositionStrategy { greedy_minfill, exact };

namespace detail {

inline bool is_subset(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::vector<std::vector<std::size_t>> tree_adjacency(std::size_t nodes,
                                                             const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(nodes);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& l : adj) std::sort(l.begin(), l.end());
  return adj;
}

}  // namespace detail

/// Checks the tree-decomposition definition: the nodes form a tree, every
/// vertex and edge of `g` is covered, and each vertex occupies a connected
/// subtree.
inline bool is_valid(const TreeDecomposition& t, const PrimalGraph& g) {
  const std::size_t k = t.bags.size();
  if (k == 0 || t.edges.size() != k - 1 || t.num_vertices != g.num_vertices) return false;
  for (const auto& b : t.bags) {
    if (!std::is_sorted(b.begin(), b.end()) || std::adjacent_find(b.begin(), b.end()) != b.end()) return false;
    for (VarId v : b)
      if (v >= g.num_vertices) return false;
  }
  for (auto [a, b] : t.edges)
    if (a >= k || b >= k || a == b) return false;
  auto adj = detail::tree_adjacency(k, t.edges);
  std::vector<bool> seen(k, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    std::size_t x = stack.back();
    stack.pop_back();
    for (std::size_t y : adj[x])
      if (!seen[y]) {
        seen[y] = true;
        ++reached;
        stack.push_back(y);
      }
  }
  if (reached != k) return false;
  for (auto [u, v] : g.edges) {
    bool covered = false;
    for (const auto& b : t.bags)
      if (std::binary_search(b.begin(), b.end(), u) && std::binary_search(b.begin(), b.end(), v)) covered = true;
    if (!covered) return false;
  }
  // In a tree, a vertex set induces a connected subtree iff #nodes - #edges = 1.
  for (VarId v = 0; v < g.num_vertices; ++v) {
    std::size_t nodes = 0, inner = 0;
    for (const auto& b : t.bags) nodes += std::binary_search(b.begin(), b.end(), v);
    for (auto [a, b] : t.edges)
      inner += std::binary_search(t.bags[a].begin(), t.bags[a].end(), v) &&
               std::binary_search(t.bags[b].begin(), t.bags[b].end(), v);
    if (nodes == 0 || nodes - inner != 1) return false;
  }
  return true;
}

/// Greedy min-fill elimination order; ties go to the lowest vertex id.
inline std::vector<VarId> min_fill_order(const PrimalGraph& g) {
  const std::size_t n = g.num_vertices;
  std::vector<std::set<VarId>> adj(n);
  for (auto [u, v] : g.edges) {
    adj[u].insert(v);
    adj[v].insert(u);
  }
  std::vector<bool> gone(n, false);
  std::vector<VarId> order;
  for (std::size_t step = 0; step < n; ++step) {
    VarId best = n;
    std::size_t best_fill = 0;
    for (VarId v = 0; v < n; ++v) {
      if (gone[v]) continue;
      std::size_t fill = 0;
      for (auto a = adj[v].begin(); a != adj[v].end(); ++a)
        for (auto b = std::next(a); b != adj[v].end(); ++b)
          if (!adj[*a].count(*b)) ++fill;
      if (best == n || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    for (VarId a : adj[best])
      for (VarId b : adj[best])
        if (a != b) adj[a].insert(b);
    for (VarId a : adj[best]) adj[a].erase(best);
    adj[best].clear();
    gone[best] = true;
    order.push_back(best);
  }
  return order;
}

/// Width of the decomposition induced by eliminating in `order`.
inline std::size_t elimination_width(const PrimalGraph& g, const std::vector<VarId>& order) {
  std::vector<std::set<VarId>> adj(g.num_vertices);
  for (auto [u, v] : g.edges) {
    adj[u].insert(v);
    adj[v].insert(u);
  }
  std::size_t width = 0;
  for (VarId v : order) {
    width = std::max(width, adj[v].size());
    for (VarId a : adj[v])
      for (VarId b : adj[v])
        if (a != b) adj[a].insert(b);
    for (VarId a : adj[v]) adj[a].erase(v);
    adj[v].clear();
  }
  return width;
}

/// Optimal elimination order by dynamic programming over vertex subsets.
/// Throws ExactTooLarge when the graph has more than `limit` vertices.
inline std::vector<VarId> exact_order(const PrimalGraph& g, std::size_t limit = kDefaultExactLimit) {
  const std::size_t n = g.num_vertices;
  if (n > limit || n >= 31) throw ExactTooLarge(std::to_string(n), limit);
  std::vector<std::uint32_t> nbr(n, 0);
  for (auto [u, v] : g.edges) {
    nbr[u] |= 1u << v;
    nbr[v] |= 1u << u;
  }
  // q(S, v): vertices outside S + v reachable from v through S.
  auto q = [&](std::uint32_t s, VarId v) {
    std::uint32_t inside = 1u << v, frontier = 1u << v, outside = 0;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::uint32_t f = frontier; f; f &= f - 1) next |= nbr[static_cast<std::size_t>(__builtin_ctz(f))];
      outside |= next & ~s & ~(1u << v);
      next &= s & ~inside;
      inside |= next;
      frontier = next;
    }
    return static_cast<std::size_t>(__builtin_popcount(outside));
  };
  const std::uint32_t full = n == 0 ? 0 : (n == 32 ? ~0u : (1u << n) - 1);
  std::vector<std::uint8_t> best(std::size_t{1} << n, 0), last(std::size_t{1} << n, 0);
  for (std::uint32_t s = 1; s <= full && s != 0; ++s) {
    std::size_t value = SIZE_MAX;
    for (std::uint32_t f = s; f; f &= f - 1) {
      VarId v = static_cast<VarId>(__builtin_ctz(f));
      std::uint32_t rest = s & ~(1u << v);
      std::size_t w = std::max<std::size_t>(best[rest], q(rest, v));
      if (w < value) {
        value = w;
        last[s] = static_cast<std::uint8_t>(v);
      }
    }
    best[s] = static_cast<std::uint8_t>(value);
    if (s == full) break;
  }
  std::vector<VarId> order(n);
  std::uint32_t s = full;
  for (std::size_t i = n; i-- > 0;) {
    order[i] = last[s];
    s &= ~(1u << last[s]);
  }
  return order;
}

/// Decomposition with one bag per eliminated vertex (the vertex and its
/// later neighbors), attached to the bag of its earliest-eliminated later
/// neighbor. Components are chained; bags contained in a neighbor's bag are
/// contracted away.
inline TreeDecomposition decomposition_from_order(const PrimalGraph& g, const std::vector<VarId>& order) {
  const std::size_t n = g.num_vertices;
  TreeDecomposition t;
  t.num_vertices = n;
  if (n == 0) {
    t.bags.push_back({});
    return t;
  }
  std::vector<std::size_t> position(n);
  for (std::size_t i = 0; i < n; ++i) position[order[i]] = i;
  std::vector<std::set<VarId>> adj(n);
  for (auto [u, v] : g.edges) {
    adj[u].insert(v);
    adj[v].insert(u);
  }
  std::vector<std::vector<VarId>> bags(n);  // indexed by elimination step
  std::vector<std::set<std::size_t>> tree(n);
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    VarId v = order[i];
    bags[i].assign(adj[v].begin(), adj[v].end());
    bags[i].push_back(v);
    std::sort(bags[i].begin(), bags[i].end());
    std::size_t parent = n;
    for (VarId a : adj[v]) parent = std::min(parent, position[a]);
    if (parent == n) roots.push_back(i);
    else {
      tree[i].insert(parent);
      tree[parent].insert(i);
    }
    for (VarId a : adj[v])
      for (VarId b : adj[v])
        if (a != b) adj[a].insert(b);
    for (VarId a : adj[v]) adj[a].erase(v);
    adj[v].clear();
  }
  for (std::size_t r = 1; r < roots.size(); ++r) {
    tree[roots[r - 1]].insert(roots[r]);
    tree[roots[r]].insert(roots[r - 1]);
  }
  std::vector<bool> alive(n, true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < n && !changed; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b : tree[a]) {
        if (!detail::is_subset(bags[a], bags[b])) continue;
        for (std::size_t c : tree[a]) {
          tree[c].erase(a);
          if (c != b) {
            tree[c].insert(b);
            tree[b].insert(c);
          }
        }
        tree[a].clear();
        alive[a] = false;
        changed = true;
        break;
      }
    }
  }
  std::vector<std::size_t> renumber(n, n);
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) {
      renumber[i] = t.bags.size();
      t.bags.push_back(bags[i]);
    }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b : tree[a])
      if (alive[a] && a < b) t.edges.emplace_back(renumber[a], renumber[b]);
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

inline TreeDecomposition compute_decomposition(const PrimalGraph& g,
                                               DecompositionStrategy strategy = DecompositionStrategy::greedy_minfill,
                                               std::size_t exact_limit = kDefaultExactLimit) {
  auto order = strategy == DecompositionStrategy::exact ? exact_order(g, exact_limit) : min_fill_order(g);
  return decomposition_from_order(g, order);
}

// ---------------------------------------------------------------------------
// Nice decompositions

struct NiceNode {
  enum class Kind { leaf, introduce, forget, join };

  Kind kind = Kind::leaf;
  std::vector<VarId> bag;  // sorted
  std::vector<std::size_t> children;
  VarId var = 0;  // introduced or forgotten variable

  bool operator==(const NiceNode&) const = default;
};

inline const char* to_string(NiceNode::Kind k) {
  switch (k) {
    case NiceNode::Kind::leaf: return "leaf";
    case NiceNode::Kind::introduce: return "introduce";
    case NiceNode::Kind::forget: return "forget";
    case NiceNode::Kind::join: return "join";
  }
  return "?";
}

struct NiceTreeDecomposition {
  std::size_t num_vertices = 0;
  std::vector<NiceNode> nodes;
  std::size_t root = 0;

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& nd : nodes) w = std::max(w, nd.bag.size());
    return w == 0 ? 0 : w - 1;
  }

  /// Node ids in preorder from the root, children in stored order.
  std::vector<std::size_t> preorder() const {
    std::vector<std::size_t> out, stack{root};
    while (!stack.empty()) {
      std::size_t x = stack.back();
      stack.pop_back();
      out.push_back(x);
      for (auto it = nodes[x].children.rbegin(); it != nodes[x].children.rend(); ++it) stack.push_back(*it);
    }
    return out;
  }

  bool operator==(const NiceTreeDecomposition&) const = default;
};

namespace detail {

class NiceBuilder {
 public:
  explicit NiceBuilder(const TreeDecomposition& t) : t_(t), adj_(tree_adjacency(t.bags.size(), t.edges)) {}

  NiceTreeDecomposition build() {
    out_.num_vertices = t_.num_vertices;
    std::size_t top = subtree(0, SIZE_MAX);
    out_.root = chain(top, {});
    return std::move(out_);
  }

 private:
  const TreeDecomposition& t_;
  std::vector<std::vector<std::size_t>> adj_;
  NiceTreeDecomposition out_;

  std::size_t add(NiceNode::Kind kind, std::vector<VarId> bag, std::vector<std::size_t> children, VarId var) {
    out_.nodes.push_back(NiceNode{kind, std::move(bag), std::move(children), var});
    return out_.nodes.size() - 1;
  }

  /// Walks from node `from` up to bag `target`: forget the surplus in
  /// descending order, then introduce the missing variables ascending.
  std::size_t chain(std::size_t from, const std::vector<VarId>& target) {
    std::vector<VarId> bag = out_.nodes[from].bag;
    std::vector<VarId> drop, gain;
    std::set_difference(bag.begin(), bag.end(), target.begin(), target.end(), std::back_inserter(drop));
    std::set_difference(target.begin(), target.end(), bag.begin(), bag.end(), std::back_inserter(gain));
    std::size_t cur = from;
    for (auto it = drop.rbegin(); it != drop.rend(); ++it) {
      bag.erase(std::find(bag.begin(), bag.end(), *it));
      cur = add(NiceNode::Kind::forget, bag, {cur}, *it);
    }
    for (VarId v : gain) {
      bag.insert(std::upper_bound(bag.begin(), bag.end(), v), v);
      cur = add(NiceNode::Kind::introduce, bag, {cur}, v);
    }
    return cur;
  }

  /// Nice subtree for decomposition node `x`; returns a node with bag χ(x).
  std::size_t subtree(std::size_t x, std::size_t parent) {
    const auto& bag = t_.bags[x];
    std::vector<std::size_t> tops;
    for (std::size_t c : adj_[x])
      if (c != parent) tops.push_back(chain(subtree(c, x), bag));
    if (tops.empty()) return chain(add(NiceNode::Kind::leaf, {}, {}, 0), bag);
    std::size_t cur = tops[0];
    for (std::size_t i = 1; i < tops.size(); ++i) cur = add(NiceNode::Kind::join, bag, {cur, tops[i]}, 0);
    return cur;
  }
};

}  // namespace detail

/// Nice form rooted at decomposition node 0, with empty root and leaves.
/// Width is preserved. Adjacent distinct bags differ in one variable.
inline NiceTreeDecomposition make_nice(const TreeDecomposition& t) {
  if (t.bags.empty()) throw ValidationError("tree decomposition has no nodes");
  return detail::NiceBuilder(t).build();
}

/// Checks every defining property of a nice tree decomposition of `g`.
inline bool verify_nice(const NiceTreeDecomposition& nt, const PrimalGraph& g) {
  const std::size_t k = nt.nodes.size();
  if (k == 0 || nt.root >= k || nt.num_vertices != g.num_vertices) return false;
  std::vector<std::size_t> parent(k, SIZE_MAX);
  for (std::size_t x = 0; x < k; ++x) {
    const auto& nd = nt.nodes[x];
    if (!std::is_sorted(nd.bag.begin(), nd.bag.end()) || std::adjacent_find(nd.bag.begin(), nd.bag.end()) != nd.bag.end())
      return false;
    for (VarId v : nd.bag)
      if (v >= g.num_vertices) return false;
    for (std::size_t c : nd.children) {
      if (c >= k || c == nt.root || parent[c] != SIZE_MAX) return false;
      parent[c] = x;
    }
  }
  for (std::size_t x = 0; x < k; ++x)
    if (x != nt.root && parent[x] == SIZE_MAX) return false;
  if (nt.preorder().size() != k) return false;  // rules out cycles detached from the root
  if (!nt.nodes[nt.root].bag.empty()) return false;
  for (const auto& nd : nt.nodes) {
    using K = NiceNode::Kind;
    switch (nd.kind) {
      case K::leaf:
        if (!nd.children.empty() || !nd.bag.empty()) return false;
        break;
      case K::introduce: {
        if (nd.children.size() != 1) return false;
        auto expect = nt.nodes[nd.children[0]].bag;
        if (std::binary_search(expect.begin(), expect.end(), nd.var)) return false;
        expect.insert(std::upper_bound(expect.begin(), expect.end(), nd.var), nd.var);
        if (expect != nd.bag) return false;
        break;
      }
      case K::forget: {
        if (nd.children.size() != 1) return false;
        auto expect = nt.nodes[nd.children[0]].bag;
        auto it = std::lower_bound(expect.begin(), expect.end(), nd.var);
        if (it == expect.end() || *it != nd.var) return false;
        expect.erase(it);
        if (expect != nd.bag) return false;
        break;
      }
      case K::join:
        if (nd.children.size() != 2) return false;
        if (nt.nodes[nd.children[0]].bag != nd.bag || nt.nodes[nd.children[1]].bag != nd.bag) return false;
        break;
    }
  }
  for (auto [u, v] : g.edges) {
    bool covered = false;
    for (const auto& nd : nt.nodes)
      if (std::binary_search(nd.bag.begin(), nd.bag.end(), u) && std::binary_search(nd.bag.begin(), nd.bag.end(), v))
        covered = true;
    if (!covered) return false;
  }
  // Connected occurrence: exactly one node holding v whose parent lacks v.
  for (VarId v = 0; v < g.num_vertices; ++v) {
    std::size_t tops = 0;
    for (std::size_t x = 0; x < k; ++x) {
      const auto& b = nt.nodes[x].bag;
      if (!std::binary_search(b.begin(), b.end(), v)) continue;
      const auto& pb = nt.nodes[parent[x]].bag;  // root bag is empty, so x != root here
      if (!std::binary_search(pb.begin(), pb.end(), v)) ++tops;
    }
    if (tops != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Import / export

/// PACE `.td` text: `s td <bags> <max bag size> <vertices>`, then
/// `b <id> <v>...` lines and `<a> <b>` tree edges, all 1-based.
inline std::string to_pace(const TreeDecomposition& t) {
  std::ostringstream os;
  os << "s td " << t.bags.size() << " " << t.width() + (t.bags.empty() ? 0 : 1) << " " << t.num_vertices << "\n";
  for (std::size_t i = 0; i < t.bags.size(); ++i) {
    os << "b " << i + 1;
    for (VarId v : t.bags[i]) os << " " << v + 1;
    os << "\n";
  }
  for (auto [a, b] : t.edges) os << a + 1 << " " << b + 1 << "\n";
  return os.str();
}

inline TreeDecomposition from_pace(const std::string& text) {
  TreeDecomposition t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t declared = 0;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) { throw ParseError(msg, lineno, 1); };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head == "c") continue;
    if (head == "s") {
      std::string td;
      std::size_t maxbag = 0;
      if (!(ls >> td >> declared >> maxbag >> t.num_vertices) || td != "td") fail("malformed solution line");
      t.bags.assign(declared, {});
      header = true;
    } else if (head == "b") {
      if (!header) fail("bag before solution line");
      std::size_t id = 0;
      if (!(ls >> id) || id == 0 || id > declared) fail("bad bag id");
      std::vector<VarId> bag;
      for (std::size_t v; ls >> v;) {
        if (v == 0 || v > t.num_vertices) fail("bag vertex out of range");
        bag.push_back(v - 1);
      }
      std::sort(bag.begin(), bag.end());
      bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
      t.bags[id - 1] = std::move(bag);
    } else {
      if (!header) fail("edge before solution line");
      std::size_t a = 0, b = 0;
      std::istringstream es(line);
      if (!(es >> a >> b) || a == 0 || b == 0 || a > declared || b > declared) fail("bad tree edge");
      t.edges.emplace_back(a - 1, b - 1);
    }
  }
  if (!header) throw ParseError("missing solution line", lineno, 1);
  return t;
}

inline nlohmann::json to_json(const NiceTreeDecomposition& nt, const std::vector<std::string>& names) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& nd : nt.nodes) {
    json bag = json::array();
    for (VarId v : nd.bag) bag.push_back(names.at(v));
    json node{{"kind", to_string(nd.kind)}, {"bag", bag}, {"children", nd.children}};
    if (nd.kind == NiceNode::Kind::introduce || nd.kind == NiceNode::Kind::forget) node["var"] = names.at(nd.var);
    nodes.push_back(node);
  }
  return json{{"root", nt.root}, {"nodes", nodes}};
}

/// Inverse of `to_json`; names resolve against `names`. Structure is not
/// checked here; use verify_nice.
inline NiceTreeDecomposition nice_from_json(const nlohmann::json& j, const std::vector<std::string>& names) {
  auto index = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("unknown variable '" + name + "' in decomposition");
    return static_cast<VarId>(it - names.begin());
  };
  NiceTreeDecomposition nt;
  nt.num_vertices = names.size();
  nt.root = j.at("root").get<std::size_t>();
  for (const auto& nj : j.at("nodes")) {
    NiceNode nd;
    const std::string kind = nj.at("kind").get<std::string>();
    if (kind == "leaf") nd.kind = NiceNode::Kind::leaf;
    else if (kind == "introduce") nd.kind = NiceNode::Kind::introduce;
    else if (kind == "forget") nd.kind = NiceNode::Kind::forget;
    else if (kind == "join") nd.kind = NiceNode::Kind::join;
    else throw ValidationError("unknown node kind '" + kind + "'");
    for (const auto& v : nj.at("bag")) nd.bag.push_back(index(v.get<std::string>()));
    std::sort(nd.bag.begin(), nd.bag.end());
    nd.children = nj.at("children").get<std::vector<std::size_t>>();
    if (nj.contains("var")) nd.var = index(nj.at("var").get<std::string>());
    nt.nodes.push_back(std::move(nd));
  }
  return nt;
}

}  // namespace pchsat

#endif  // PCHSAT_DECOMP_HPP
