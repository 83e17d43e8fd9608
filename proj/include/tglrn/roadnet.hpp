#pragma once

#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "tglrn/diff/tensor.hpp"

// Road network topology and the k-hop structure masks derived from it.
namespace tglrn::roadnet {

using diff::Matrix;

struct Edge {
  int from = 0;
  int to = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct RoadNetwork {
  int num_nodes = 0;
  std::vector<Edge> edges;  // sorted, deduplicated
  Matrix a_sp;              // binary, diagonal is 1
};

// Directed binary adjacency of consecutive sensors plus self-loops.
// Throws InputError on ids outside [0, n). Duplicate edges collapse.
RoadNetwork build_asp(std::span<const Edge> edges, int num_nodes);

// CSV with header `from,to[,...]`; extra columns are ignored.
std::vector<Edge> load_edges(const std::filesystem::path& path);
void save_edges(const std::filesystem::path& path, std::span<const Edge> edges);

class HopDistances {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  HopDistances(int n, std::vector<int> d) : n_(n), d_(std::move(d)) {}

  int size() const { return n_; }
  int operator()(int i, int j) const { return d_[static_cast<std::size_t>(i * n_ + j)]; }
  bool reachable(int i, int j) const { return (*this)(i, j) != kUnreachable; }

 private:
  int n_;
  std::vector<int> d_;
};

// Breadth-first hop counts from every source over a_sp. Self-loops add no
// length. With `symmetrize`, edges are followed in both directions.
HopDistances hop_distances(const RoadNetwork& net, bool symmetrize = false);

// mask(i, j) = 1 iff d(i, j) <= k. Throws InputError for k < 1.
Matrix structure_info(const HopDistances& dist, int k);

// Nested masks S^1 ⊆ S^2 ⊆ ... ⊆ S^L, shared read-only.
class StructureInfoGroup {
 public:
  StructureInfoGroup() = default;
  explicit StructureInfoGroup(std::vector<Matrix> masks)
      : masks_(std::make_shared<const std::vector<Matrix>>(std::move(masks))) {}

  int levels() const { return masks_ ? static_cast<int>(masks_->size()) : 0; }
  // 1-based hop level.
  const Matrix& mask(int k) const { return masks_->at(static_cast<std::size_t>(k - 1)); }
  const std::shared_ptr<const std::vector<Matrix>>& masks() const { return masks_; }

 private:
  std::shared_ptr<const std::vector<Matrix>> masks_;
};

StructureInfoGroup structure_group(const HopDistances& dist, int levels);

}  // namespace tglrn::roadnet
