#include "gapkit/emd.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <vector>

#include "gapkit/error.hpp"

namespace gapkit {
namespace {

// Spanning-tree network simplex on the bipartite graph sources -> sinks plus an
// artificial root joined to every node. Arcs are uncapacitated, so every
// non-tree arc carries zero flow and flow is stored per tree node only.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& mu, const Vector& nu, const Matrix& cost)
      : n_(mu.size()), m_(nu.size()), cost_(cost) {
    nodes_ = n_ + m_ + 1;
    root_ = n_ + m_;
    real_arcs_ = n_ * m_;
    arcs_ = real_arcs_ + n_ + m_;

    const double max_cost = cost_.size() > 0 ? cost_.cwiseAbs().maxCoeff() : 0.0;
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    eps_ = std::max(1e-12 * (max_cost + 1.0), 16.0 * DBL_EPSILON * art_cost_);

    parent_.assign(nodes_, -1);
    pred_.assign(nodes_, -1);
    flow_.assign(nodes_, 0.0);
    depth_.assign(nodes_, 0);
    pi_.assign(nodes_, 0.0);
    children_.assign(nodes_, {});
    art_up_.assign(static_cast<std::size_t>(n_ + m_), false);

    children_[root_].reserve(static_cast<std::size_t>(n_ + m_));
    for (Index v = 0; v < n_ + m_; ++v) {
      const double supply = v < n_ ? mu(v) : nu(v - n_);
      // Zero-flow artificial arcs point away from the root (strongly feasible start).
      const bool up = v < n_ && supply > 0.0;
      art_up_[static_cast<std::size_t>(v)] = up;
      parent_[v] = root_;
      pred_[v] = real_arcs_ + v;
      flow_[v] = supply;
      depth_[v] = 1;
      pi_[v] = up ? -art_cost_ : art_cost_;
      children_[root_].push_back(v);
    }
    block_ = std::max<Index>(10, static_cast<Index>(std::sqrt(static_cast<double>(arcs_))));
  }

  Index run() {
    Index pivots = 0;
    for (;;) {
      const Index e = find_entering();
      if (e < 0) break;
      pivot(e);
      ++pivots;
    }
    return pivots;
  }

  Matrix plan() const {
    Matrix p = Matrix::Zero(n_, m_);
    for (Index v = 0; v < nodes_; ++v) {
      const Index a = pred_[v];
      if (a >= 0 && a < real_arcs_) p(a / m_, a % m_) = flow_[v];
    }
    return p;
  }

  double artificial_flow() const {
    double total = 0.0;
    for (Index v = 0; v < nodes_; ++v)
      if (pred_[v] >= real_arcs_) total += flow_[v];
    return total;
  }

 private:
  Index tail(Index a) const {
    if (a < real_arcs_) return a / m_;
    const Index v = a - real_arcs_;
    return art_up_[static_cast<std::size_t>(v)] ? v : root_;
  }
  Index head(Index a) const {
    if (a < real_arcs_) return n_ + a % m_;
    const Index v = a - real_arcs_;
    return art_up_[static_cast<std::size_t>(v)] ? root_ : v;
  }
  double arc_cost(Index a) const {
    return a < real_arcs_ ? cost_(a / m_, a % m_) : art_cost_;
  }
  double reduced(Index a) const { return arc_cost(a) + pi_[tail(a)] - pi_[head(a)]; }
  // True when node v's tree arc is oriented v -> parent(v).
  bool points_up(Index v) const { return tail(pred_[v]) == v; }

  Index find_entering() {
    Index best = -1;
    double best_rc = -eps_;
    Index scanned = 0;
    for (Index count = 0; count < arcs_; ++count) {
      const Index a = next_arc_;
      next_arc_ = next_arc_ + 1 == arcs_ ? 0 : next_arc_ + 1;
      const double rc = reduced(a);
      if (rc < best_rc) {
        best_rc = rc;
        best = a;
      }
      if (++scanned == block_) {
        if (best >= 0) return best;
        scanned = 0;
      }
    }
    return best;
  }

  void pivot(Index e) {
    const Index u = tail(e);
    const Index v = head(e);

    Index a = u, b = v;
    while (depth_[a] > depth_[b]) a = parent_[a];
    while (depth_[b] > depth_[a]) b = parent_[b];
    while (a != b) {
      a = parent_[a];
      b = parent_[b];
    }
    const Index join = a;

    // Cycle order: join -> ... -> u -> v -> ... -> join. Pick the last blocking arc.
    double delta = std::numeric_limits<double>::infinity();
    Index leave = -1;
    bool leave_on_u_side = false;
    for (Index w = u; w != join; w = parent_[w]) {
      if (points_up(w) && flow_[w] < delta) {
        delta = flow_[w];
        leave = w;
        leave_on_u_side = true;
      }
    }
    for (Index w = v; w != join; w = parent_[w]) {
      if (!points_up(w) && flow_[w] <= delta) {
        delta = flow_[w];
        leave = w;
        leave_on_u_side = false;
      }
    }
    if (leave < 0) throw NumericalError("unbounded transport problem");

    if (delta > 0.0) {
      for (Index w = u; w != join; w = parent_[w]) flow_[w] += points_up(w) ? -delta : delta;
      for (Index w = v; w != join; w = parent_[w]) flow_[w] += points_up(w) ? delta : -delta;
    }

    const Index in_node = leave_on_u_side ? u : v;
    const Index out_node = leave_on_u_side ? v : u;

    detach(parent_[leave], leave);
    // Reverse the path in_node -> ... -> leave so in_node becomes the subtree root.
    Index prev = out_node;
    Index prev_arc = e;
    double prev_flow = delta;
    Index w = in_node;
    for (;;) {
      const Index next = parent_[w];
      const Index w_arc = pred_[w];
      const double w_flow = flow_[w];
      if (w != leave) detach(next, w);
      parent_[w] = prev;
      pred_[w] = prev_arc;
      flow_[w] = prev_flow;
      children_[prev].push_back(w);
      if (w == leave) break;
      prev = w;
      prev_arc = w_arc;
      prev_flow = w_flow;
      w = next;
    }
    refresh_subtree(in_node);
  }

  void detach(Index parent, Index child) {
    auto& kids = children_[parent];
    auto it = std::find(kids.begin(), kids.end(), child);
    *it = kids.back();
    kids.pop_back();
  }

  // Recomputes depth and potential for the subtree rooted at `top` from its parent.
  void refresh_subtree(Index top) {
    stack_.clear();
    stack_.push_back(top);
    while (!stack_.empty()) {
      const Index x = stack_.back();
      stack_.pop_back();
      const Index p = parent_[x];
      const double c = arc_cost(pred_[x]);
      depth_[x] = depth_[p] + 1;
      pi_[x] = points_up(x) ? pi_[p] - c : pi_[p] + c;
      for (Index ch : children_[x]) stack_.push_back(ch);
    }
  }

  Index n_, m_;
  const Matrix& cost_;
  Index nodes_ = 0, root_ = 0, real_arcs_ = 0, arcs_ = 0;
  double art_cost_ = 0.0, eps_ = 0.0;
  Index block_ = 0, next_arc_ = 0;

  std::vector<Index> parent_, pred_, depth_;
  std::vector<double> flow_, pi_;
  std::vector<std::vector<Index>> children_;
  std::vector<bool> art_up_;
  std::vector<Index> stack_;
};

}  // namespace

EmdResult solve_emd(const Vector& mu, const Vector& nu, const Matrix& cost) {
  if (mu.size() < 1 || nu.size() < 1) throw PreconditionError("empty marginal");
  if (cost.rows() != mu.size() || cost.cols() != nu.size())
    throw ValidationError("cost matrix shape does not match the marginals");
  if (!cost.allFinite()) throw ValidationError("non-finite cost entry");
  if (!mu.allFinite() || !nu.allFinite()) throw ValidationError("non-finite marginal entry");
  if (mu.minCoeff() < 0.0 || nu.minCoeff() < 0.0) throw PreconditionError("negative mass in marginal");
  const double smu = mu.sum();
  const double snu = nu.sum();
  if (std::abs(smu - snu) > 1e-10)
    throw PreconditionError("marginal mismatch: sum(mu)=" + std::to_string(smu) +
                            ", sum(nu)=" + std::to_string(snu));
  Vector nu_b = nu;
  if (snu > 0.0 && smu != snu) nu_b *= smu / snu;

  TransportSimplex simplex(mu, nu_b, cost);
  EmdResult out;
  out.pivots = simplex.run();
  if (simplex.artificial_flow() > 1e-9 * std::max(1.0, smu))
    throw NumericalError("network simplex ended with flow on artificial arcs");
  out.plan = simplex.plan();
  out.cost = out.plan.cwiseProduct(cost).sum();
  return out;
}

}  // namespace gapkit
