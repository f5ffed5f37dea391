#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spmm/geo.hpp"

namespace spmm {

namespace detail {

inline std::uint64_t cell_key(std::int64_t cx, std::int64_t cy) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
         static_cast<std::uint32_t>(cy);
}

}  // namespace detail

/// Uniform grid over planar space mapping cells to the polylines whose
/// bounding boxes touch them. Queries return candidate handles (positions in
/// the span passed to `build`); callers filter by exact distance.
class SpatialIndex {
 public:
  static constexpr double kDefaultCellSize = 100.0;

  SpatialIndex() = default;

  static SpatialIndex build(std::span<const Polyline> edges,
                            double cell_size = kDefaultCellSize);

  /// Sorted, de-duplicated handles of every edge that may lie within
  /// `radius` of `p`. Never misses an edge.
  std::vector<std::size_t> query(const PlanarPoint& p, double radius) const;

  double cell_size() const { return cell_size_; }
  std::size_t edge_count() const { return edge_count_; }
  bool empty() const { return edge_count_ == 0; }

 private:
  std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
  }

  double cell_size_ = kDefaultCellSize;
  std::size_t edge_count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

/// Point set with N rows of (x, y) coordinates in any metric space where the
/// Euclidean norm is the distance.
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

/// Uniform grid over a fixed point set for exact radius and k-nearest
/// queries.
template <typename Scalar>
class PointGrid {
 public:
  PointGrid(const PointMatrix<Scalar>& points, Scalar cell_size)
      : points_(points), cell_size_(cell_size) {
    if (!(cell_size > Scalar(0))) throw DomainError("cell size must be positive");
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      cells_[key_of(points_.row(i))].push_back(static_cast<std::uint32_t>(i));
    }
  }

  /// Indices j with |p_j - p_i| <= radius, including i itself, ascending.
  std::vector<std::uint32_t> within(Eigen::Index i, Scalar radius) const {
    std::vector<std::uint32_t> out;
    const Planar<Scalar> p = points_.row(i).transpose();
    const auto span = static_cast<std::int64_t>(std::ceil(radius / cell_size_));
    const auto cx = cell_of(p.x());
    const auto cy = cell_of(p.y());
    const Scalar r2 = radius * radius;
    for (std::int64_t dx = -span; dx <= span; ++dx) {
      for (std::int64_t dy = -span; dy <= span; ++dy) {
        auto it = cells_.find(detail::cell_key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (auto j : it->second) {
          if ((points_.row(j).transpose() - p).squaredNorm() <= r2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Distance from point i to its k-th nearest other point (k >= 1). Searches
  /// grid rings outward until no unvisited cell can hold a closer point.
  Scalar kth_neighbor_distance(Eigen::Index i, std::size_t k) const {
    const Planar<Scalar> p = points_.row(i).transpose();
    const auto cx = cell_of(p.x());
    const auto cy = cell_of(p.y());
    std::vector<Scalar> best;  // max-heap of the k smallest squared distances
    const std::size_t others = static_cast<std::size_t>(points_.rows()) - 1;
    const std::size_t want = std::min(k, others);
    for (std::int64_t ring = 0;; ++ring) {
      visit_ring(cx, cy, ring, [&](std::uint32_t j) {
        if (static_cast<Eigen::Index>(j) == i) return;
        const Scalar d2 = (points_.row(j).transpose() - p).squaredNorm();
        if (best.size() < want) {
          best.push_back(d2);
          std::push_heap(best.begin(), best.end());
        } else if (d2 < best.front()) {
          std::pop_heap(best.begin(), best.end());
          best.back() = d2;
          std::push_heap(best.begin(), best.end());
        }
      });
      if (best.size() == want) {
        // Any point outside rings [0, ring] is at least ring * cell away.
        const Scalar reach = Scalar(ring) * cell_size_;
        if (want == 0 || reach * reach >= best.front()) break;
      }
      if (ring > max_ring_) break;
    }
    return best.empty() ? Scalar(0) : std::sqrt(best.front());
  }

 private:
  template <typename Row>
  std::uint64_t key_of(const Row& r) {
    const auto cx = cell_of(r(0));
    const auto cy = cell_of(r(1));
    update_extent(cx, cy);
    return detail::cell_key(cx, cy);
  }

  void update_extent(std::int64_t cx, std::int64_t cy) {
    if (first_) {
      min_cx_ = max_cx_ = cx;
      min_cy_ = max_cy_ = cy;
      first_ = false;
    }
    min_cx_ = std::min(min_cx_, cx);
    max_cx_ = std::max(max_cx_, cx);
    min_cy_ = std::min(min_cy_, cy);
    max_cy_ = std::max(max_cy_, cy);
    max_ring_ = std::max(max_cx_ - min_cx_, max_cy_ - min_cy_) + 1;
  }

  std::int64_t cell_of(Scalar v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
  }

  template <typename F>
  void visit_ring(std::int64_t cx, std::int64_t cy, std::int64_t ring, F&& f) const {
    auto visit = [&](std::int64_t x, std::int64_t y) {
      auto it = cells_.find(detail::cell_key(x, y));
      if (it == cells_.end()) return;
      for (auto j : it->second) f(j);
    };
    if (ring == 0) {
      visit(cx, cy);
      return;
    }
    for (std::int64_t d = -ring; d <= ring; ++d) {
      visit(cx + d, cy - ring);
      visit(cx + d, cy + ring);
    }
    for (std::int64_t d = -ring + 1; d <= ring - 1; ++d) {
      visit(cx - ring, cy + d);
      visit(cx + ring, cy + d);
    }
  }

  PointMatrix<Scalar> points_;
  Scalar cell_size_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  bool first_ = true;
  std::int64_t min_cx_ = 0, max_cx_ = 0, min_cy_ = 0, max_cy_ = 0;
  std::int64_t max_ring_ = 0;
};

}  // namespace spmm
