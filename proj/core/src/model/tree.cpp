#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "tree_internal.hpp"

namespace bctrace::model {

int Tree::leaf_index(std::span<const double> row) const {
  if (nodes.empty()) return -1;
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    const bool left = std::isnan(v) ? n.default_left : v < n.threshold;
    i = left ? n.left : n.right;
  }
  return i;
}

double Tree::predict(std::span<const double> row) const {
  const int i = leaf_index(row);
  return i < 0 ? 0.0 : nodes[i].weight;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::vector<std::size_t> canonical_order(const Dataset& data) {
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t f = data.cols();
  auto less = [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < f; ++c) {
      const double va = data.at(a, c), vb = data.at(b, c);
      if (less(va, vb)) return true;
      if (less(vb, va)) return false;
    }
    return less(data.y[a], data.y[b]);
  });
  return idx;
}

namespace detail {

double rmse(std::span<const double> pred, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return y.empty() ? 0.0 : std::sqrt(s / static_cast<double>(y.size()));
}

Presorted presort(const Dataset& data) {
  Presorted p;
  const std::size_t n = data.rows();
  p.by_value.resize(data.cols());
  p.missing.resize(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) {
    auto& v = p.by_value[c];
    for (std::size_t r = 0; r < n; ++r) {
      (std::isnan(data.at(r, c)) ? p.missing[c] : v).push_back(static_cast<std::uint32_t>(r));
    }
    std::stable_sort(v.begin(), v.end(), [&](std::uint32_t a, std::uint32_t b) {
      return data.at(a, c) < data.at(b, c);
    });
  }
  return p;
}

namespace {

struct Candidate {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
};

struct Scan {
  bool has_prev = false;
  double prev = 0.0;
  double gl = 0.0;
  double hl = 0.0;
};

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda) + 0.0; }

}  // namespace

Tree grow_tree(const Dataset& data, const Presorted& sorted, std::span<const double> grad,
               std::span<const double> hess, std::span<const double> weights,
               const TreeParams& params) {
  const std::size_t n = data.rows();
  const std::size_t nf = data.cols();
  if (grad.size() != n || hess.size() != n || weights.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "gradient, hessian and weight lengths differ from rows");
  }
  if (params.lambda < 0.0 || params.min_split_gain < 0.0) {
    throw Error(ErrorCode::kBadParams, "lambda and min_split_gain must be >= 0");
  }
  const double lambda = params.lambda;

  Tree tree;
  std::vector<int> node_of(n, -1);
  tree.nodes.emplace_back();
  double weight_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) {
      node_of[i] = 0;
      tree.nodes[0].sum_grad += grad[i] * weights[i];
      tree.nodes[0].sum_hess += hess[i] * weights[i];
      weight_total += weights[i];
    }
  }
  std::vector<double> count{weight_total};  // weighted sample count per node

  std::vector<int> frontier{0};
  for (int depth = 0; !frontier.empty(); ++depth) {
    const bool depth_ok = params.max_depth <= 0 || depth < params.max_depth;
    std::vector<int> slot(tree.nodes.size(), -1);
    std::vector<int> eligible;
    for (int node : frontier) {
      if (depth_ok && count[node] >= std::max(2, params.min_samples_split)) {
        slot[node] = static_cast<int>(eligible.size());
        eligible.push_back(node);
      }
    }
    std::vector<Candidate> best(eligible.size());
    std::vector<double> gm(eligible.size()), hm(eligible.size());
    std::vector<Scan> scan(eligible.size());
    for (std::size_t f = 0; f < nf && !eligible.empty(); ++f) {
      std::fill(gm.begin(), gm.end(), 0.0);
      std::fill(hm.begin(), hm.end(), 0.0);
      std::fill(scan.begin(), scan.end(), Scan{});
      for (std::uint32_t r : sorted.missing[f]) {
        const int nd = node_of[r];
        if (nd < 0 || slot[nd] < 0) continue;
        gm[slot[nd]] += grad[r] * weights[r];
        hm[slot[nd]] += hess[r] * weights[r];
      }
      for (std::uint32_t r : sorted.by_value[f]) {
        const int nd = node_of[r];
        if (nd < 0 || slot[nd] < 0) continue;
        const int s = slot[nd];
        auto& st = scan[s];
        const double v = data.at(r, f);
        if (st.has_prev && v > st.prev) {
          const double g = tree.nodes[nd].sum_grad;
          const double h = tree.nodes[nd].sum_hess;
          const double parent = g * g / (h + lambda);
          auto gain_of = [&](double gl, double hl) {
            const double gr = g - gl, hr = h - hl;
            return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
          };
          double gain = gain_of(st.gl, st.hl);
          bool left = false;
          if (hm[s] > 0.0) {
            const double gain_left = gain_of(st.gl + gm[s], st.hl + hm[s]);
            if (gain_left >= gain) {
              gain = gain_left;
              left = true;
            }
          } else {
            left = st.hl >= h - st.hl;
          }
          if (!best[s].found || gain > best[s].gain) {
            double thr = 0.5 * (st.prev + v);
            if (!(thr > st.prev)) thr = v;
            best[s] = Candidate{true, gain, static_cast<int>(f), thr, left};
          }
        }
        st.gl += grad[r] * weights[r];
        st.hl += hess[r] * weights[r];
        st.prev = v;
        st.has_prev = true;
      }
    }

    std::vector<int> next;
    std::vector<int> split_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < eligible.size(); ++s) {
      const auto& c = best[s];
      if (!c.found || !(c.gain > params.min_split_gain)) continue;
      const int nd = eligible[s];
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      count.push_back(0.0);
      count.push_back(0.0);
      auto& node = tree.nodes[nd];
      node.feature = c.feature;
      node.threshold = c.threshold;
      node.default_left = c.default_left;
      node.gain = c.gain;
      node.left = l;
      node.right = l + 1;
      split_of.resize(tree.nodes.size(), -1);
      split_of[nd] = 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int nd = node_of[i];
      if (nd < 0 || split_of[nd] < 0) continue;
      const auto& node = tree.nodes[nd];
      const double v = data.at(i, static_cast<std::size_t>(node.feature));
      const bool left = std::isnan(v) ? node.default_left : v < node.threshold;
      const int child = left ? node.left : node.right;
      node_of[i] = child;
      tree.nodes[child].sum_grad += grad[i] * weights[i];
      tree.nodes[child].sum_hess += hess[i] * weights[i];
      count[child] += weights[i];
    }
    frontier = std::move(next);
  }
  for (auto& node : tree.nodes) {
    if (node.is_leaf()) node.weight = leaf_weight(node.sum_grad, node.sum_hess, lambda);
  }
  return tree;
}

}  // namespace detail

Tree grow_tree(const Dataset& data, std::span<const double> grad, std::span<const double> hess,
               std::span<const double> weights, const TreeParams& params) {
  data.check_shape();
  return detail::grow_tree(data, detail::presort(data), grad, hess, weights, params);
}

}  // namespace bctrace::model
