#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

// s-t max-flow by augmenting paths on two search trees (source tree and sink
// tree), grown toward each other and repaired after each augmentation instead
// of being rebuilt.
//
// Terminal arcs are collapsed into one number per node: tr_cap > 0 is residual
// capacity from the source, tr_cap < 0 is residual capacity to the sink. This
// makes terminal updates between solves a single addition; internal residual
// capacities persist across maxflow() calls, so repeated solves only push the
// incremental flow.
class MaxFlowGraph {
 public:
  explicit MaxFlowGraph(int num_nodes)
      : first_(num_nodes, -1),
        tr_cap_(num_nodes, 0.0),
        parent_arc_(num_nodes, kNone),
        is_sink_(num_nodes, 0),
        in_active_(num_nodes, 0) {}

  int num_nodes() const { return static_cast<int>(first_.size()); }

  void add_edge(int u, int v, double cap_uv, double cap_vu) {
    int a = static_cast<int>(arcs_.size());
    arcs_.push_back({v, first_[u], cap_uv});
    first_[u] = a;
    arcs_.push_back({u, first_[v], cap_vu});
    first_[v] = a + 1;
  }

  void adjust_terminal(int v, double delta) { tr_cap_[v] += delta; }
  double terminal_excess(int v) const { return tr_cap_[v]; }

  // (Re)converges the flow. Search trees are rebuilt from the current terminal
  // excesses; residual capacities carry over from previous calls.
  void maxflow() {
    active_.clear();
    orphans_.clear();
    const int n = num_nodes();
    for (int v = 0; v < n; ++v) {
      parent_arc_[v] = kNone;
      in_active_[v] = 0;
    }
    for (int v = 0; v < n; ++v) {
      if (tr_cap_[v] > 0.0) {
        parent_arc_[v] = kTerminal;
        is_sink_[v] = 0;
        push_active(v);
      } else if (tr_cap_[v] < 0.0) {
        parent_arc_[v] = kTerminal;
        is_sink_[v] = 1;
        push_active(v);
      }
    }

    long long guard = 0;
    while (true) {
      if (++guard > kStepBudget) throw BudgetError("max-flow step budget exceeded");
      int boundary = grow();
      if (boundary < 0) break;
      augment(boundary);
      process_orphans();
    }
  }

  // Minimal source side over all minimum cuts: nodes reachable from the source
  // in the residual graph. Call after maxflow().
  std::vector<char> min_source_assignment() const {
    const int n = num_nodes();
    std::vector<char> side(n, 0);
    std::deque<int> q;
    for (int v = 0; v < n; ++v)
      if (tr_cap_[v] > 0.0) {
        side[v] = 1;
        q.push_back(v);
      }
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
        int w = arcs_[a].head;
        if (!side[w] && arcs_[a].r_cap > 0.0) {
          side[w] = 1;
          q.push_back(w);
        }
      }
    }
    return side;
  }

  // Maximal source side: complement of the nodes that still reach the sink.
  std::vector<char> max_source_assignment() const {
    const int n = num_nodes();
    std::vector<char> reaches_t(n, 0);
    std::deque<int> q;
    for (int v = 0; v < n; ++v)
      if (tr_cap_[v] < 0.0) {
        reaches_t[v] = 1;
        q.push_back(v);
      }
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
        int w = arcs_[a].head;
        if (!reaches_t[w] && arcs_[a ^ 1].r_cap > 0.0) {
          reaches_t[w] = 1;
          q.push_back(w);
        }
      }
    }
    std::vector<char> side(n);
    for (int v = 0; v < n; ++v) side[v] = !reaches_t[v];
    return side;
  }

 private:
  struct Arc {
    int head;
    int next;
    double r_cap;
  };
  // Sister of arc a is a ^ 1 (arcs are pushed in pairs).

  static constexpr int kNone = -1;      // free node
  static constexpr int kTerminal = -2;  // tree root
  static constexpr int kOrphan = -3;
  static constexpr long long kStepBudget = 200000000LL;

  std::vector<Arc> arcs_;
  std::vector<int> first_;
  std::vector<double> tr_cap_;
  std::vector<int> parent_arc_;  // arc from node to its parent, or a sentinel
  std::vector<char> is_sink_;    // valid while in a tree
  std::vector<char> in_active_;
  std::deque<int> active_;
  std::deque<int> orphans_;

  bool in_tree(int v) const { return parent_arc_[v] != kNone && parent_arc_[v] != kOrphan; }

  void push_active(int v) {
    if (!in_active_[v]) {
      in_active_[v] = 1;
      active_.push_back(v);
    }
  }

  // Walks parents to check the node is anchored at a terminal.
  bool rooted(int v) const {
    while (true) {
      int pa = parent_arc_[v];
      if (pa == kTerminal) return true;
      if (pa == kNone || pa == kOrphan) return false;
      v = arcs_[pa].head;
    }
  }

  // Extends the trees until a residual arc connecting them is found.
  // Returns that arc oriented source tree -> sink tree, or -1 when the active
  // set is exhausted (flow is maximal).
  int grow() {
    while (!active_.empty()) {
      int v = active_.front();
      if (!in_tree(v)) {
        active_.pop_front();
        in_active_[v] = 0;
        continue;
      }
      bool src = !is_sink_[v];
      for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
        double cap = src ? arcs_[a].r_cap : arcs_[a ^ 1].r_cap;
        if (cap <= 0.0) continue;
        int w = arcs_[a].head;
        if (!in_tree(w)) {
          parent_arc_[w] = a ^ 1;
          is_sink_[w] = is_sink_[v];
          push_active(w);
        } else if (is_sink_[w] != is_sink_[v]) {
          return src ? a : (a ^ 1);
        }
      }
      active_.pop_front();
      in_active_[v] = 0;
    }
    return -1;
  }

  void augment(int boundary) {
    double b = arcs_[boundary].r_cap;
    // bottleneck over the source-side path
    for (int v = arcs_[boundary ^ 1].head;;) {
      int pa = parent_arc_[v];
      if (pa == kTerminal) {
        b = std::min(b, tr_cap_[v]);
        break;
      }
      b = std::min(b, arcs_[pa ^ 1].r_cap);
      v = arcs_[pa].head;
    }
    // bottleneck over the sink-side path
    for (int v = arcs_[boundary].head;;) {
      int pa = parent_arc_[v];
      if (pa == kTerminal) {
        b = std::min(b, -tr_cap_[v]);
        break;
      }
      b = std::min(b, arcs_[pa].r_cap);
      v = arcs_[pa].head;
    }

    arcs_[boundary].r_cap -= b;
    arcs_[boundary ^ 1].r_cap += b;
    for (int v = arcs_[boundary ^ 1].head;;) {
      int pa = parent_arc_[v];
      if (pa == kTerminal) {
        tr_cap_[v] -= b;
        if (tr_cap_[v] == 0.0) make_orphan(v);
        break;
      }
      arcs_[pa ^ 1].r_cap -= b;
      arcs_[pa].r_cap += b;
      int next = arcs_[pa].head;
      if (arcs_[pa ^ 1].r_cap == 0.0) make_orphan(v);
      v = next;
    }
    for (int v = arcs_[boundary].head;;) {
      int pa = parent_arc_[v];
      if (pa == kTerminal) {
        tr_cap_[v] += b;
        if (tr_cap_[v] == 0.0) make_orphan(v);
        break;
      }
      arcs_[pa].r_cap -= b;
      arcs_[pa ^ 1].r_cap += b;
      int next = arcs_[pa].head;
      if (arcs_[pa].r_cap == 0.0) make_orphan(v);
      v = next;
    }
  }

  void make_orphan(int v) {
    parent_arc_[v] = kOrphan;
    orphans_.push_back(v);
  }

  void process_orphans() {
    while (!orphans_.empty()) {
      int v = orphans_.front();
      orphans_.pop_front();
      if (parent_arc_[v] != kOrphan) continue;
      bool sink = is_sink_[v];

      int adopted = kNone;
      for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
        int w = arcs_[a].head;
        if (!in_tree(w) || is_sink_[w] != sink) continue;
        double cap = sink ? arcs_[a].r_cap : arcs_[a ^ 1].r_cap;
        if (cap <= 0.0) continue;
        if (!rooted(w)) continue;
        adopted = a;
        break;
      }
      if (adopted != kNone) {
        parent_arc_[v] = adopted;
        continue;
      }

      // No parent available: free the node, reactivate neighbors that may
      // re-grow toward it and orphan its children.
      for (int a = first_[v]; a >= 0; a = arcs_[a].next) {
        int w = arcs_[a].head;
        if (parent_arc_[w] == kNone || is_sink_[w] != sink) continue;
        double cap = sink ? arcs_[a].r_cap : arcs_[a ^ 1].r_cap;
        if (cap > 0.0 && in_tree(w)) push_active(w);
        int pw = parent_arc_[w];
        if (pw >= 0 && arcs_[pw].head == v) make_orphan(w);
      }
      parent_arc_[v] = kNone;
    }
  }
};

}  // namespace smr
