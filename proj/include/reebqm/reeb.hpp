#pragma once

// Measured Reeb trees of sampled fields on genus-zero domains (annulus or
// glued sphere), with median / percentile / stem / branch / gap queries.
//
// Construction is the join/split-tree sweep with union-find, merged into the
// contour tree.  Cells are first quotiented by connected equal-value groups
// (8-neighbor adjacency, theta wraps, caps adjacent to their boundary rows);
// plateau components therefore collapse to single tree points carrying their
// full measure.  Ties between distinct groups of equal value are broken
// lexicographically by (value, smallest cell index).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "reebqm/field.hpp"

namespace reebqm {

struct ReebNode {
    double level = 0.0;
    double measure = 0.0;  // area of the critical component itself
    int group = -1;        // quotient group id (internal)
};

struct ReebEdge {
    int lo = -1, hi = -1;  // node ids; lo is the lower end in sweep order
    double measure = 0.0;  // area of the open sleeve between the end nodes
    // Level profile of the sleeve, ordered from the lo end: levels of the
    // regular components absorbed into this edge and cumulative measure.
    std::vector<double> prof_level;
    std::vector<double> prof_cum;

    // Level at a given measure offset from the lo end.
    double level_at(double offset_from_lo) const {
        if (prof_level.empty()) return lo >= 0 ? 0.0 : 0.0;
        auto it = std::lower_bound(prof_cum.begin(), prof_cum.end(),
                                   std::min(offset_from_lo, prof_cum.back()));
        size_t idx = std::min<size_t>(it - prof_cum.begin(), prof_level.size() - 1);
        return prof_level[idx];
    }
};

/// A point of the tree: either a node (node >= 0) or an interior edge point
/// (edge >= 0, measure offset from the edge's lo end).  `h` is the
/// bottom-component normalized measure for stem points, -1 otherwise.
struct StemPoint {
    int node = -1;
    int edge = -1;
    double offset = 0.0;
    double level = 0.0;
    double h = -1.0;
};

struct GapReport {
    struct Branch {
        int attach_node = -1;  // stem node the branch hangs from
        double attach_h = 0.0;
        double measure = 0.0;
        int via_edge = -1;  // first edge of the branch subtree
    };
    struct Gap {
        double h_lo = 0.0, h_hi = 0.0;
        double measure = 0.0;  // total branch measure causing the gap
        std::vector<int> branch_indices;
    };
    std::vector<Gap> gaps;
    std::vector<Branch> branches;
};

struct ReebTree {
    std::vector<ReebNode> nodes;
    std::vector<ReebEdge> edges;
    std::vector<std::vector<int>> node_edges;  // incident edge ids per node
    int bottom_root = -1, top_root = -1;       // -1 on sphere domains
    bool sphere = false;
    double total_measure = 0.0;
    double cell_area = 0.0;
    int max_valence = 0;

    // Location of every cell (plus the two caps on spheres, appended):
    // >= 0: edge id; < 0: node id encoded as -(id+1).
    std::vector<int> cell_location;

    // Stem bookkeeping (annulus with distinct roots): node ids from bottom
    // root to top root, edges between them, and cumulative measures.
    std::vector<int> stem_nodes;
    std::vector<int> stem_edges;              // stem_edges[k] joins nodes k,k+1
    std::vector<double> stem_below;           // measure strictly below stem node k
    std::vector<double> stem_branch_measure;  // off-stem mass hanging at node k

    int other_end(int edge, int node) const {
        const auto& e = edges[edge];
        return e.lo == node ? e.hi : e.lo;
    }
    bool has_distinct_roots() const {
        return bottom_root >= 0 && top_root >= 0 && bottom_root != top_root;
    }
};

namespace detail {

struct CellDomain {
    int n_theta = 0, n_s = 0;
    bool sphere = false;
    int ncells() const { return n_theta * n_s; }
    int nverts() const { return ncells() + (sphere ? 2 : 0); }

    template <class Fn>
    void for_neighbors(int v, Fn&& fn) const {
        const int N = ncells();
        if (v >= N) {
            int row = (v == N) ? 0 : n_s - 1;
            for (int i = 0; i < n_theta; ++i) fn(row * n_theta + i);
            return;
        }
        int i = v % n_theta, j = v / n_theta;
        for (int dj = -1; dj <= 1; ++dj) {
            int jj = j + dj;
            if (jj < 0 || jj >= n_s) continue;
            for (int di = -1; di <= 1; ++di) {
                if (di == 0 && dj == 0) continue;
                fn(jj * n_theta + (i + di + n_theta) % n_theta);
            }
        }
        if (sphere) {
            if (j == 0) fn(N);
            if (j == n_s - 1) fn(N + 1);
        }
    }
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

inline ReebTree build_reeb_tree(const ScalarField& f) {
    detail::CellDomain dom{f.grid.n_theta, f.grid.n_s, f.on_sphere()};
    const int N = dom.nverts();
    const double cell = f.grid.cell_area();

    std::vector<double> value(f.samples);
    std::vector<double> vmeasure(dom.ncells(), cell);
    if (f.on_sphere()) {
        value.push_back(f.bottom_cap);
        value.push_back(f.top_cap);
        vmeasure.push_back(f.gluing->a);
        vmeasure.push_back(f.gluing->b);
    }

    // --- quotient by connected equal-value groups -------------------------
    std::vector<int> gid(N, -1);
    struct Group {
        double value;
        double measure;
        int min_vertex;
    };
    std::vector<Group> groups;
    {
        std::vector<int> stack;
        for (int v = 0; v < N; ++v) {
            if (gid[v] >= 0) continue;
            int id = (int)groups.size();
            Group g{value[v], 0.0, v};
            gid[v] = id;
            stack.push_back(v);
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                g.measure += vmeasure[u];
                g.min_vertex = std::min(g.min_vertex, u);
                dom.for_neighbors(u, [&](int w) {
                    if (gid[w] < 0 && value[w] == g.value) {
                        gid[w] = id;
                        stack.push_back(w);
                    }
                });
            }
            groups.push_back(g);
        }
    }
    const int G = (int)groups.size();

    // --- group adjacency (CSR) -------------------------------------------
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(N * 4);
    for (int v = 0; v < N; ++v) {
        dom.for_neighbors(v, [&](int w) {
            int a = gid[v], b = gid[w];
            if (a < b) pairs.emplace_back(a, b);
        });
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    std::vector<int> deg(G, 0);
    for (auto& [a, b] : pairs) {
        ++deg[a];
        ++deg[b];
    }
    std::vector<int> adj_start(G + 1, 0);
    for (int g = 0; g < G; ++g) adj_start[g + 1] = adj_start[g] + deg[g];
    std::vector<int> adj(adj_start[G]);
    {
        std::vector<int> fill(adj_start.begin(), adj_start.end() - 1);
        for (auto& [a, b] : pairs) {
            adj[fill[a]++] = b;
            adj[fill[b]++] = a;
        }
    }

    // connectivity check (corrupt custom fields)
    {
        std::vector<std::int8_t> seen(G, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int cnt = 1;
        while (!stack.empty()) {
            int g = stack.back();
            stack.pop_back();
            for (int k = adj_start[g]; k < adj_start[g + 1]; ++k)
                if (!seen[adj[k]]) {
                    seen[adj[k]] = 1;
                    ++cnt;
                    stack.push_back(adj[k]);
                }
        }
        if (cnt != G) throw std::runtime_error("build_reeb_tree: domain graph is disconnected");
    }

    // --- total order (value, min cell index) ------------------------------
    std::vector<int> order(G);
    for (int g = 0; g < G; ++g) order[g] = g;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (groups[a].value != groups[b].value) return groups[a].value < groups[b].value;
        return groups[a].min_vertex < groups[b].min_vertex;
    });
    std::vector<int> rank(G);
    for (int k = 0; k < G; ++k) rank[order[k]] = k;

    // --- join tree (descending) and split tree (ascending) ----------------
    std::vector<int> jparent(G, -1), sparent(G, -1);
    std::vector<int> updeg_j(G, 0), downdeg_s(G, 0);
    {
        detail::UnionFind uf(G);
        std::vector<int> low(G, -1);  // lowest group of each superlevel comp
        std::vector<std::int8_t> done(G, 0);
        for (int k = G - 1; k >= 0; --k) {
            int g = order[k];
            low[uf.find(g)] = g;
            for (int t = adj_start[g]; t < adj_start[g + 1]; ++t) {
                int h = adj[t];
                if (!done[h]) continue;
                int r = uf.find(h);
                if (r != uf.find(g)) {
                    jparent[low[r]] = g;
                    ++updeg_j[g];
                    uf.unite(r, g);
                    low[uf.find(g)] = g;
                }
            }
            done[g] = 1;
        }
    }
    {
        detail::UnionFind uf(G);
        std::vector<int> high(G, -1);
        std::vector<std::int8_t> done(G, 0);
        for (int k = 0; k < G; ++k) {
            int g = order[k];
            high[uf.find(g)] = g;
            for (int t = adj_start[g]; t < adj_start[g + 1]; ++t) {
                int h = adj[t];
                if (!done[h]) continue;
                int r = uf.find(h);
                if (r != uf.find(g)) {
                    sparent[high[r]] = g;
                    ++downdeg_s[g];
                    uf.unite(r, g);
                    high[uf.find(g)] = g;
                }
            }
            done[g] = 1;
        }
    }

    // --- merge into the contour tree --------------------------------------
    std::vector<std::int8_t> dead(G, 0);
    std::vector<std::pair<int, int>> arcs;
    arcs.reserve(G > 0 ? G - 1 : 0);

    auto live_j = [&](int v) {
        while (v >= 0 && dead[v]) v = jparent[v];
        return v;
    };
    auto live_s = [&](int v) {
        while (v >= 0 && dead[v]) v = sparent[v];
        return v;
    };

    auto is_upper = [&](int v) { return updeg_j[v] == 0 && downdeg_s[v] <= 1; };
    auto is_lower = [&](int v) { return downdeg_s[v] == 0 && updeg_j[v] <= 1; };

    std::vector<int> queue_;
    queue_.reserve(G);
    for (int v = 0; v < G; ++v)
        if (is_upper(v) || is_lower(v)) queue_.push_back(v);

    int alive = G;
    size_t qhead = 0;
    while (alive > 1) {
        if (qhead >= queue_.size())
            throw std::runtime_error("build_reeb_tree: contour tree merge stalled");
        int v = queue_[qhead++];
        if (dead[v]) continue;
        bool upper = is_upper(v) && live_j(jparent[v]) >= 0;
        bool lower = is_lower(v) && live_s(sparent[v]) >= 0;
        if (!upper && !lower) continue;

        int u, p = -1;
        if (upper) {
            u = live_j(jparent[v]);
            dead[v] = 1;
            --updeg_j[u];
            if (downdeg_s[v] == 0) {
                p = live_s(sparent[v]);
                if (p >= 0) --downdeg_s[p];
            }
        } else {
            u = live_s(sparent[v]);
            dead[v] = 1;
            --downdeg_s[u];
            if (updeg_j[v] == 0) {
                p = live_j(jparent[v]);
                if (p >= 0) --updeg_j[p];
            }
        }
        arcs.emplace_back(v, u);
        --alive;
        if (is_upper(u) || is_lower(u)) queue_.push_back(u);
        if (p >= 0 && (is_upper(p) || is_lower(p))) queue_.push_back(p);
    }
    if ((int)arcs.size() != G - 1)
        throw std::runtime_error("build_reeb_tree: merge produced a non-tree");

    // --- contour tree adjacency and node retention ------------------------
    std::vector<int> ct_start(G + 1, 0), updeg_ct(G, 0), downdeg_ct(G, 0);
    {
        std::vector<int> d(G, 0);
        for (auto& [a, b] : arcs) {
            ++d[a];
            ++d[b];
        }
        for (int g = 0; g < G; ++g) ct_start[g + 1] = ct_start[g] + d[g];
    }
    std::vector<std::pair<int, int>> ct_adj(2 * arcs.size());  // (neighbor, arc id)
    {
        std::vector<int> fill(ct_start.begin(), ct_start.end() - 1);
        for (int a = 0; a < (int)arcs.size(); ++a) {
            auto [x, y] = arcs[a];
            ct_adj[fill[x]++] = {y, a};
            ct_adj[fill[y]++] = {x, a};
            if (rank[x] < rank[y]) {
                ++updeg_ct[x];
                ++downdeg_ct[y];
            } else {
                ++updeg_ct[y];
                ++downdeg_ct[x];
            }
        }
    }

    std::vector<std::int8_t> retained(G, 0);
    for (int g = 0; g < G; ++g)
        retained[g] = !(updeg_ct[g] == 1 && downdeg_ct[g] == 1);
    int bottom_group = -1, top_group = -1;
    if (!f.on_sphere()) {
        bottom_group = gid[0];
        top_group = gid[(f.grid.n_s - 1) * f.grid.n_theta];
        retained[bottom_group] = 1;
        retained[top_group] = 1;
    }

    // --- contract regular chains into measured edges ----------------------
    ReebTree t;
    t.sphere = f.on_sphere();
    t.cell_area = cell;
    std::vector<int> node_of(G, -1);
    for (int k = 0; k < G; ++k) {
        int g = order[k];
        if (!retained[g]) continue;
        node_of[g] = (int)t.nodes.size();
        t.nodes.push_back({groups[g].value, groups[g].measure, g});
    }
    t.node_edges.resize(t.nodes.size());

    std::vector<int> group_location(G, std::numeric_limits<int>::min());
    for (int g = 0; g < G; ++g)
        if (retained[g]) group_location[g] = -(node_of[g] + 1);

    std::vector<std::int8_t> arc_used(arcs.size(), 0);
    for (int k = 0; k < G; ++k) {
        int g = order[k];
        if (!retained[g]) continue;
        for (int s = ct_start[g]; s < ct_start[g + 1]; ++s) {
            auto [first, arc0] = ct_adj[s];
            if (arc_used[arc0]) continue;
            // walk through regular groups until the next retained one
            std::vector<int> interior;
            int prev_arc = arc0;
            int curr = first;
            arc_used[arc0] = 1;
            while (!retained[curr]) {
                interior.push_back(curr);
                int next = -1, next_arc = -1;
                for (int ss = ct_start[curr]; ss < ct_start[curr + 1]; ++ss) {
                    if (ct_adj[ss].second != prev_arc) {
                        next = ct_adj[ss].first;
                        next_arc = ct_adj[ss].second;
                    }
                }
                arc_used[next_arc] = 1;
                prev_arc = next_arc;
                curr = next;
            }
            ReebEdge e;
            bool g_is_lo = rank[g] < rank[curr];
            e.lo = node_of[g_is_lo ? g : curr];
            e.hi = node_of[g_is_lo ? curr : g];
            if (!g_is_lo) std::reverse(interior.begin(), interior.end());
            double cum = 0.0;
            for (int gi : interior) {
                cum += groups[gi].measure;
                e.prof_level.push_back(groups[gi].value);
                e.prof_cum.push_back(cum);
            }
            e.measure = cum;
            int eid = (int)t.edges.size();
            for (int gi : interior) group_location[gi] = eid;
            t.node_edges[e.lo].push_back(eid);
            if (e.hi != e.lo) t.node_edges[e.hi].push_back(eid);
            t.edges.push_back(std::move(e));
        }
    }

    t.cell_location.resize(N);
    for (int v = 0; v < N; ++v) t.cell_location[v] = group_location[gid[v]];

    double total = 0.0;
    for (auto& n : t.nodes) total += n.measure;
    for (auto& e : t.edges) total += e.measure;
    t.total_measure = total;

    for (auto& ne : t.node_edges) t.max_valence = std::max(t.max_valence, (int)ne.size());

    if (!f.on_sphere()) {
        t.bottom_root = node_of[bottom_group];
        t.top_root = node_of[top_group];
    }

    // --- stem bookkeeping (annulus, distinct roots) ------------------------
    if (t.has_distinct_roots()) {
        // path bottom -> top by BFS
        std::vector<int> from_edge(t.nodes.size(), -1), from_node(t.nodes.size(), -1);
        std::vector<std::int8_t> seen(t.nodes.size(), 0);
        std::queue<int> bq;
        bq.push(t.bottom_root);
        seen[t.bottom_root] = 1;
        while (!bq.empty()) {
            int n = bq.front();
            bq.pop();
            if (n == t.top_root) break;
            for (int eid : t.node_edges[n]) {
                int m = t.other_end(eid, n);
                if (!seen[m]) {
                    seen[m] = 1;
                    from_edge[m] = eid;
                    from_node[m] = n;
                    bq.push(m);
                }
            }
        }
        for (int n = t.top_root; n != t.bottom_root; n = from_node[n]) {
            t.stem_nodes.push_back(n);
            t.stem_edges.push_back(from_edge[n]);
        }
        t.stem_nodes.push_back(t.bottom_root);
        std::reverse(t.stem_nodes.begin(), t.stem_nodes.end());
        std::reverse(t.stem_edges.begin(), t.stem_edges.end());

        // subtree mass hanging off each stem node (away from the stem)
        std::vector<std::int8_t> on_stem_node(t.nodes.size(), 0), on_stem_edge(t.edges.size(), 0);
        for (int n : t.stem_nodes) on_stem_node[n] = 1;
        for (int e : t.stem_edges) on_stem_edge[e] = 1;

        auto subtree_mass = [&](int start_node, int via_edge) {
            double m = t.edges[via_edge].measure;
            std::vector<std::pair<int, int>> stack{{t.other_end(via_edge, start_node), via_edge}};
            while (!stack.empty()) {
                auto [n, pe] = stack.back();
                stack.pop_back();
                m += t.nodes[n].measure;
                for (int eid : t.node_edges[n]) {
                    if (eid == pe) continue;
                    m += t.edges[eid].measure;
                    stack.emplace_back(t.other_end(eid, n), eid);
                }
            }
            return m;
        };

        t.stem_below.resize(t.stem_nodes.size());
        t.stem_branch_measure.assign(t.stem_nodes.size(), 0.0);
        double below = 0.0;
        for (size_t k = 0; k < t.stem_nodes.size(); ++k) {
            int n = t.stem_nodes[k];
            t.stem_below[k] = below;
            double branches = 0.0;
            for (int eid : t.node_edges[n])
                if (!on_stem_edge[eid]) branches += subtree_mass(n, eid);
            t.stem_branch_measure[k] = branches;
            below += t.nodes[n].measure + branches;
            if (k < t.stem_edges.size()) below += t.edges[t.stem_edges[k]].measure;
        }
    }

    return t;
}

// ---------------------------------------------------------------------------
// Queries

namespace detail {

inline double edge_level_from(const ReebTree& t, int eid, int from_node, double offset) {
    const auto& e = t.edges[eid];
    double x = (from_node == e.lo) ? offset : e.measure - offset;
    return e.level_at(std::clamp(x, 0.0, e.measure));
}

}  // namespace detail

/// The unique tree point all of whose complementary components have measure
/// at most half the total.  `h` is filled for stem points on annulus trees,
/// -1 otherwise.
inline StemPoint find_median(const ReebTree& t) {
    const double W = t.total_measure;
    const int nn = (int)t.nodes.size();

    // side measures per directed edge: mass strictly beyond `eid` seen from
    // its lo / hi end, computed by rooted DFS
    std::vector<double> below_lo(t.edges.size(), 0.0);  // mass on lo side incl lo node
    // do a DFS from node 0 computing subtree sums
    std::vector<double> sub(nn, 0.0);
    std::vector<int> parent_edge(nn, -1), order_;
    {
        std::vector<std::pair<int, int>> stack{{0, -1}};
        std::vector<std::int8_t> seen(nn, 0);
        seen[0] = 1;
        while (!stack.empty()) {
            auto [n, pe] = stack.back();
            stack.pop_back();
            order_.push_back(n);
            parent_edge[n] = pe;
            for (int eid : t.node_edges[n]) {
                int m = t.other_end(eid, n);
                if (!seen[m]) {
                    seen[m] = 1;
                    stack.emplace_back(m, eid);
                }
            }
        }
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            int n = *it;
            sub[n] = t.nodes[n].measure;
            for (int eid : t.node_edges[n]) {
                int m = t.other_end(eid, n);
                if (eid != parent_edge[n] && parent_edge[m] == eid)
                    sub[n] += sub[m] + t.edges[eid].measure;
            }
        }
        for (int e = 0; e < (int)t.edges.size(); ++e) {
            int lo = t.edges[e].lo, hi = t.edges[e].hi;
            // the child side of e is whichever endpoint has parent_edge == e
            double child_side = (parent_edge[lo] == e) ? sub[lo] : sub[hi];
            bool lo_is_child = (parent_edge[lo] == e);
            below_lo[e] = lo_is_child ? child_side : W - child_side - t.edges[e].measure;
        }
    }

    auto stem_h = [&](int node) -> double {
        for (size_t k = 0; k < t.stem_nodes.size(); ++k)
            if (t.stem_nodes[k] == node) return t.stem_below[k] / W;
        return -1.0;
    };

    // node medians first (deterministic id order)
    for (int n = 0; n < nn; ++n) {
        bool ok = true;
        for (int eid : t.node_edges[n]) {
            int m = t.other_end(eid, n);
            double side = (parent_edge[n] == eid) ? W - sub[n]
                                                  : sub[m] + t.edges[eid].measure;
            if (side > 0.5 * W + 1e-12 * W) {
                ok = false;
                break;
            }
        }
        if (ok) return {n, -1, 0.0, t.nodes[n].level, stem_h(n)};
    }
    for (int e = 0; e < (int)t.edges.size(); ++e) {
        double m_lo = below_lo[e], m_hi = W - m_lo - t.edges[e].measure;
        if (m_lo <= 0.5 * W && m_hi <= 0.5 * W) {
            double x = 0.5 * W - m_lo;  // offset from lo end
            double level = t.edges[e].level_at(x);
            return {-1, e, x, level, -1.0};
        }
    }
    throw std::runtime_error("find_median: no median found (corrupt tree)");
}

/// The unique stem point whose bottom-root component has measure h * total,
/// or nullopt when h falls in a gap.  Plateau nodes on the stem cover their
/// own measure interval and are returned for any h inside it.
inline std::optional<StemPoint> find_percentile(const ReebTree& t, double h) {
    if (h < 0.0 || h > 1.0)
        throw std::invalid_argument("find_percentile: h must lie in [0,1]");
    if (t.sphere || t.bottom_root < 0)
        throw std::invalid_argument("find_percentile: tree has no roots (sphere domain)");
    const double W = t.total_measure;
    if (h == 0.0)
        return StemPoint{t.bottom_root, -1, 0.0, t.nodes[t.bottom_root].level, 0.0};
    if (h == 1.0) return StemPoint{t.top_root, -1, 0.0, t.nodes[t.top_root].level, 1.0};
    if (!t.has_distinct_roots()) return std::nullopt;

    const double target = h * W;
    for (size_t k = 0; k < t.stem_nodes.size(); ++k) {
        int n = t.stem_nodes[k];
        double B = t.stem_below[k];
        double own = t.nodes[n].measure;
        if (target <= B + own)
            return StemPoint{n, -1, 0.0, t.nodes[n].level, h};
        double after = B + own + t.stem_branch_measure[k];
        if (target < after) return std::nullopt;  // inside a gap
        if (k < t.stem_edges.size()) {
            int eid = t.stem_edges[k];
            double m_e = t.edges[eid].measure;
            if (target < after + m_e) {
                double off_from_node = target - after;
                double level = detail::edge_level_from(t, eid, n, off_from_node);
                const auto& e = t.edges[eid];
                double off_lo = (n == e.lo) ? off_from_node : m_e - off_from_node;
                return StemPoint{-1, eid, off_lo, level, h};
            }
        }
    }
    return StemPoint{t.top_root, -1, 0.0, t.nodes[t.top_root].level, h};
}

/// Gaps in the percentile values, one per branch-carrying stem node.
inline GapReport percentile_gaps(const ReebTree& t) {
    if (t.sphere || t.bottom_root < 0)
        throw std::invalid_argument("percentile_gaps: tree has no roots (sphere domain)");
    GapReport r;
    const double W = t.total_measure;
    if (!t.has_distinct_roots()) {
        // degenerate: the zero set joins both boundary circles, the whole
        // tree hangs off a single root and no interior percentile exists
        GapReport::Gap g;
        int n = t.bottom_root;
        g.h_lo = t.nodes[n].measure / W;
        g.h_hi = 1.0;
        g.measure = W - t.nodes[n].measure;
        for (int eid : t.node_edges[n]) {
            GapReport::Branch b;
            b.attach_node = n;
            b.attach_h = g.h_lo;
            b.via_edge = eid;
            double m = t.edges[eid].measure;
            std::vector<std::pair<int, int>> stack{{t.other_end(eid, n), eid}};
            while (!stack.empty()) {
                auto [nn_, pe] = stack.back();
                stack.pop_back();
                m += t.nodes[nn_].measure;
                for (int e2 : t.node_edges[nn_]) {
                    if (e2 == pe) continue;
                    m += t.edges[e2].measure;
                    stack.emplace_back(t.other_end(e2, nn_), e2);
                }
            }
            b.measure = m;
            r.branches.push_back(b);
            g.branch_indices.push_back((int)r.branches.size() - 1);
        }
        r.gaps.push_back(g);
        return r;
    }

    std::vector<std::int8_t> on_stem_edge(t.edges.size(), 0);
    for (int e : t.stem_edges) on_stem_edge[e] = 1;

    for (size_t k = 0; k < t.stem_nodes.size(); ++k) {
        if (t.stem_branch_measure[k] <= 0.0) continue;
        int n = t.stem_nodes[k];
        double B = t.stem_below[k], own = t.nodes[n].measure;
        GapReport::Gap g;
        g.h_lo = (B + own) / W;
        g.h_hi = (B + own + t.stem_branch_measure[k]) / W;
        g.measure = t.stem_branch_measure[k];
        for (int eid : t.node_edges[n]) {
            if (on_stem_edge[eid]) continue;
            GapReport::Branch b;
            b.attach_node = n;
            b.attach_h = g.h_lo;
            b.via_edge = eid;
            double m = t.edges[eid].measure;
            std::vector<std::pair<int, int>> stack{{t.other_end(eid, n), eid}};
            while (!stack.empty()) {
                auto [nn_, pe] = stack.back();
                stack.pop_back();
                m += t.nodes[nn_].measure;
                for (int e2 : t.node_edges[nn_]) {
                    if (e2 == pe) continue;
                    m += t.edges[e2].measure;
                    stack.emplace_back(t.other_end(e2, nn_), e2);
                }
            }
            b.measure = m;
            r.branches.push_back(b);
            g.branch_indices.push_back((int)r.branches.size() - 1);
        }
        r.gaps.push_back(g);
    }
    return r;
}

/// Cell indices of the subtree reached from `attach_node` through `via_edge`
/// (a branch preimage disk).
inline std::vector<int> subtree_cells(const ReebTree& t, int attach_node, int via_edge) {
    std::vector<std::int8_t> edge_in(t.edges.size(), 0), node_in(t.nodes.size(), 0);
    edge_in[via_edge] = 1;
    std::vector<std::pair<int, int>> stack{{t.other_end(via_edge, attach_node), via_edge}};
    while (!stack.empty()) {
        auto [n, pe] = stack.back();
        stack.pop_back();
        node_in[n] = 1;
        for (int eid : t.node_edges[n]) {
            if (eid == pe) continue;
            edge_in[eid] = 1;
            stack.emplace_back(t.other_end(eid, n), eid);
        }
    }
    std::vector<int> cells;
    for (int c = 0; c < (int)t.cell_location.size(); ++c) {
        int loc = t.cell_location[c];
        if (loc >= 0 ? edge_in[loc] : node_in[-(loc + 1)]) cells.push_back(c);
    }
    return cells;
}

}  // namespace reebqm
