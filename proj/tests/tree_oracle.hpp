#pragma once

// Predictions derived from a built ReebTree, compared in tests against the
// independent flood-fill oracle: component-measure multisets of superlevel
// and sublevel sets at arbitrary thresholds.

#include <algorithm>
#include <vector>

#include "reebqm/reeb.hpp"

namespace tree_oracle {

struct Fragment {
    int attach_node;  // -1 for free-standing (never happens for trees)
    double measure;
};

// Sorted measures of the connected components of {level >= c} (or <= c with
// `superlevel=false`) as implied by the tree's nodes, edges and profiles.
inline std::vector<double> predict_components(const reebqm::ReebTree& t, double c,
                                              bool superlevel) {
    const int nn = (int)t.nodes.size();
    auto above = [&](double lvl) { return superlevel ? lvl >= c : lvl <= c; };

    std::vector<int> uf(nn);
    for (int n = 0; n < nn; ++n) uf[n] = n;
    auto find = [&](int x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };

    std::vector<double> extra(nn, 0.0);  // partial sleeves attached to a node
    for (const auto& e : t.edges) {
        double part = 0.0;
        for (size_t k = 0; k < e.prof_level.size(); ++k) {
            double m = e.prof_cum[k] - (k ? e.prof_cum[k - 1] : 0.0);
            if (above(e.prof_level[k])) part += m;
        }
        bool lo_in = above(t.nodes[e.lo].level);
        bool hi_in = above(t.nodes[e.hi].level);
        if (lo_in && hi_in) {
            uf[find(e.lo)] = find(e.hi);
            extra[find(e.hi)] += part;
        } else if (hi_in) {
            extra[find(e.hi)] += part;
        } else if (lo_in) {
            extra[find(e.lo)] += part;
        }
        // neither endpoint inside: an interior-only sleeve fragment would be
        // a separate component; cannot happen since profiles are monotone
        // between the endpoint levels
    }
    // accumulate extras onto final roots
    std::vector<double> comp(nn, 0.0);
    for (int n = 0; n < nn; ++n)
        if (above(t.nodes[n].level)) comp[find(n)] += t.nodes[n].measure;
    for (int n = 0; n < nn; ++n) {
        if (extra[n] == 0.0) continue;
        comp[find(n)] += extra[n];
    }
    std::vector<double> out;
    for (int n = 0; n < nn; ++n)
        if (find(n) == n && above(t.nodes[n].level)) out.push_back(comp[n]);
    std::sort(out.begin(), out.end());
    return out;
}

inline int leaf_count(const reebqm::ReebTree& t) {
    int n = 0;
    for (const auto& ne : t.node_edges) n += (ne.size() == 1);
    return n;
}

}  // namespace tree_oracle
