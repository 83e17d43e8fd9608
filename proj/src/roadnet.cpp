#include "tglrn/roadnet.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "csv.hpp"
#include "tglrn/error.hpp"

namespace tglrn::roadnet {

RoadNetwork build_asp(std::span<const Edge> edges, int num_nodes) {
  if (num_nodes <= 0) throw InputError("build_asp: number of nodes must be positive");
  RoadNetwork net;
  net.num_nodes = num_nodes;
  net.a_sp = Matrix::Identity(num_nodes, num_nodes);
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= num_nodes || e.to < 0 || e.to >= num_nodes)
      throw InputError("build_asp: edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    net.a_sp(e.from, e.to) = 1.0;
    net.edges.push_back(e);
  }
  std::sort(net.edges.begin(), net.edges.end());
  net.edges.erase(std::unique(net.edges.begin(), net.edges.end()), net.edges.end());
  return net;
}

std::vector<Edge> load_edges(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const int from = table.column("from");
  const int to = table.column("to");
  std::vector<Edge> edges;
  edges.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_of(r);
    edges.push_back(Edge{csv::parse_int(row.at(static_cast<std::size_t>(from)), path, line),
                         csv::parse_int(row.at(static_cast<std::size_t>(to)), path, line)});
  }
  return edges;
}

void save_edges(const std::filesystem::path& path, std::span<const Edge> edges) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "from,to\n";
  for (const auto& e : edges) out << e.from << ',' << e.to << '\n';
}

HopDistances hop_distances(const RoadNetwork& net, bool symmetrize) {
  const int n = net.num_nodes;
  std::vector<std::vector<int>> next(static_cast<std::size_t>(n));
  for (const auto& e : net.edges) {
    if (e.from == e.to) continue;
    next[static_cast<std::size_t>(e.from)].push_back(e.to);
    if (symmetrize) next[static_cast<std::size_t>(e.to)].push_back(e.from);
  }
  std::vector<int> d(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), HopDistances::kUnreachable);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    int* row = d.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n);
    row[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : next[static_cast<std::size_t>(u)]) {
        if (row[v] != HopDistances::kUnreachable) continue;
        row[v] = row[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return HopDistances(n, std::move(d));
}

Matrix structure_info(const HopDistances& dist, int k) {
  if (k < 1) throw InputError("structure_info: hop radius must be >= 1, got " + std::to_string(k));
  const int n = dist.size();
  Matrix mask = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (dist(i, j) <= k) mask(i, j) = 1.0;
  return mask;
}

StructureInfoGroup structure_group(const HopDistances& dist, int levels) {
  if (levels < 1) throw InputError("structure_group: group size must be >= 1, got " + std::to_string(levels));
  std::vector<Matrix> masks;
  masks.reserve(static_cast<std::size_t>(levels));
  for (int k = 1; k <= levels; ++k) masks.push_back(structure_info(dist, k));
  return StructureInfoGroup(std::move(masks));
}

}  // namespace tglrn::roadnet
