#include "spmm/spatial_index.hpp"

namespace spmm {

SpatialIndex SpatialIndex::build(std::span<const Polyline> edges, double cell_size) {
  if (!(cell_size > 0.0)) throw DomainError("cell size must be positive");
  SpatialIndex idx;
  idx.cell_size_ = cell_size;
  idx.edge_count_ = edges.size();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto box = edges[e].bounds();
    const auto x0 = idx.cell_of(box.min().x());
    const auto x1 = idx.cell_of(box.max().x());
    const auto y0 = idx.cell_of(box.min().y());
    const auto y1 = idx.cell_of(box.max().y());
    for (auto cx = x0; cx <= x1; ++cx) {
      for (auto cy = y0; cy <= y1; ++cy) {
        idx.cells_[detail::cell_key(cx, cy)].push_back(static_cast<std::uint32_t>(e));
      }
    }
  }
  return idx;
}

std::vector<std::size_t> SpatialIndex::query(const PlanarPoint& p, double radius) const {
  if (!(radius > 0.0)) throw DomainError("query radius must be positive");
  std::vector<std::size_t> out;
  if (cells_.empty()) return out;
  const auto x0 = cell_of(p.x() - radius);
  const auto x1 = cell_of(p.x() + radius);
  const auto y0 = cell_of(p.y() - radius);
  const auto y1 = cell_of(p.y() + radius);
  for (auto cx = x0; cx <= x1; ++cx) {
    for (auto cy = y0; cy <= y1; ++cy) {
      auto it = cells_.find(detail::cell_key(cx, cy));
      if (it == cells_.end()) continue;
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace spmm
