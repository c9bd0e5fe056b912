#ifndef TPB_BVH_HPP
#define TPB_BVH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "tpb/math.hpp"

namespace tpb {

/// Binned-SAH bounding volume hierarchy over arbitrary primitive boxes.
/// The tree only stores primitive indices; callers own the primitives.
class Bvh {
 public:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first index into order(); inner: right child
    std::uint32_t count = 0;  // 0 for inner nodes (left child is the next node)
  };

  Bvh() = default;
  explicit Bvh(std::span<const Aabb> boxes, std::uint32_t max_leaf_size = 4) { build(boxes, max_leaf_size); }

  void build(std::span<const Aabb> boxes, std::uint32_t max_leaf_size = 4) {
    nodes_.clear();
    order_.resize(boxes.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (boxes.empty()) return;
    centroids_.resize(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) centroids_[i] = boxes[i].center();
    nodes_.reserve(2 * boxes.size());
    build_recursive(boxes, 0, static_cast<std::uint32_t>(boxes.size()), std::max(1u, max_leaf_size));
    centroids_.clear();
    centroids_.shrink_to_fit();
  }

  bool empty() const { return nodes_.empty(); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const std::uint32_t> order() const { return order_; }

  /// Visits every primitive whose box overlaps the ray segment [t_min, t_max].
  /// `visit(prim, t_max)` may shrink `t_max` (nearest-hit queries).
  template <class Visit>
  void traverse(const Vec3& origin, const Vec3& direction, double t_min, double t_max, Visit&& visit) const {
    if (nodes_.empty()) return;
    const Vec3 inv{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    std::array<std::uint32_t, kMaxDepth + 2> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!node.box.intersect(origin, inv, t_min, t_max)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = 0; i < node.count; ++i) visit(order_[node.first + i], t_max);
        continue;
      }
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }

 private:
  static constexpr int kBins = 12;
  static constexpr std::uint32_t kMaxDepth = 120;
  static constexpr std::uint32_t kSahDepth = 64;

  std::uint32_t build_recursive(std::span<const Aabb> boxes, std::uint32_t begin, std::uint32_t end,
                                std::uint32_t max_leaf, std::uint32_t depth = 0) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Aabb bounds, cbounds;
    for (std::uint32_t i = begin; i < end; ++i) {
      bounds.expand(boxes[order_[i]]);
      cbounds.expand(centroids_[order_[i]]);
    }
    nodes_[index].box = bounds;
    const std::uint32_t n = end - begin;

    auto make_leaf = [&] {
      nodes_[index].first = begin;
      nodes_[index].count = n;
      return index;
    };
    if (n <= max_leaf) return make_leaf();
    // Past kSahDepth only median splits are made, which keeps the depth under kMaxDepth.
    if (depth >= kMaxDepth) return make_leaf();

    int best_axis = -1;
    double best_cost = kInfinity;
    double best_split = 0.0;
    for (int axis = 0; axis < 3 && depth < kSahDepth; ++axis) {
      const double lo = cbounds.lo[axis];
      const double hi = cbounds.hi[axis];
      if (!(hi > lo)) continue;
      std::array<Aabb, kBins> bin_box;
      std::array<std::uint32_t, kBins> bin_count{};
      const double scale = kBins / (hi - lo);
      for (std::uint32_t i = begin; i < end; ++i) {
        const std::uint32_t p = order_[i];
        const int b = std::min(kBins - 1, static_cast<int>((centroids_[p][axis] - lo) * scale));
        bin_box[b].expand(boxes[p]);
        ++bin_count[b];
      }
      std::array<double, kBins - 1> left_cost{};
      Aabb acc;
      std::uint32_t cnt = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.expand(bin_box[b]);
        cnt += bin_count[b];
        left_cost[b] = cnt * acc.surface_area();
      }
      acc = Aabb{};
      cnt = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.expand(bin_box[b]);
        cnt += bin_count[b];
        const double cost = left_cost[b - 1] + cnt * acc.surface_area();
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = lo + b / scale;
        }
      }
    }

    std::uint32_t mid = begin;
    if (best_axis >= 0) {
      const double leaf_cost = n * bounds.surface_area();
      if (best_cost >= leaf_cost && n <= 4 * max_leaf) return make_leaf();
      auto* first = order_.data() + begin;
      auto* last = order_.data() + end;
      mid = begin + static_cast<std::uint32_t>(
                        std::partition(first, last, [&](std::uint32_t p) { return centroids_[p][best_axis] < best_split; }) -
                        first);
    }
    if (mid == begin || mid == end) {
      // All centroids coincide on the chosen axis: split by count along the widest axis.
      const Vec3 ext = cbounds.extent();
      const int axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
      mid = begin + n / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return centroids_[a][axis] < centroids_[b][axis] || (centroids_[a][axis] == centroids_[b][axis] && a < b);
                       });
    }
    build_recursive(boxes, begin, mid, max_leaf, depth + 1);
    nodes_[index].first = build_recursive(boxes, mid, end, max_leaf, depth + 1);
    return index;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
};

}  // namespace tpb

#endif  // TPB_BVH_HPP
