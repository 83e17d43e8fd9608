#pragma once

// Brute-force reference implementations shared by the unit and acceptance tests.
// Deliberately loop-based and independent of the library's Eigen code paths.

#include <algorithm>
#include <climits>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "tglrn/diff/tensor.hpp"

namespace oracle {

using tglrn::diff::Matrix;
using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const Matrix& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

inline double max_abs_diff(const Matrix& a, const Grid& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  return worst;
}

inline Grid matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Grid c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i][t] * b[t][j];
      c[i][j] = s;
    }
  return c;
}

// All-pairs hop counts; INT_MAX when unreachable, 0 on the diagonal.
inline std::vector<std::vector<long>> floyd_warshall(int n, const std::vector<std::pair<int, int>>& edges,
                                                     bool symmetric) {
  const long inf = INT_MAX;
  std::vector<std::vector<long>> d(n, std::vector<long>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [a, b] : edges) {
    if (a == b) continue;
    d[a][b] = std::min(d[a][b], 1L);
    if (symmetric) d[b][a] = std::min(d[b][a], 1L);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] < inf && d[k][j] < inf && d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

inline std::vector<std::pair<int, int>> random_digraph(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && coin(rng)) edges.emplace_back(i, j);
  return edges;
}

// Nodes within `k` undirected-or-directed hops of `src` by plain breadth-first search.
inline std::vector<bool> bfs_ball(int n, const std::vector<std::pair<int, int>>& edges, int src, int k) {
  std::vector<int> depth(n, -1);
  std::vector<int> frontier{src};
  depth[src] = 0;
  for (int level = 1; level <= k; ++level) {
    std::vector<int> next;
    for (int u : frontier)
      for (auto [a, b] : edges)
        if (a == u && depth[b] < 0) {
          depth[b] = level;
          next.push_back(b);
        }
    frontier = next;
  }
  std::vector<bool> in(n);
  for (int v = 0; v < n; ++v) in[v] = depth[v] >= 0;
  return in;
}

// H(:, q) = sum_p sum_k theta(q, p, k, 0) (P^k X)(:, p) + theta(q, p, k, 1) (Q^k X)(:, p)
// with P = D_O^-1 A, Q = D_I^-1 A^T and 1/0 = 0. theta is flattened row-major [out, in, K, 2].
inline Grid diffusion(const Grid& x, const Grid& a, const std::vector<double>& theta, int out, int steps) {
  const std::size_t n = a.size(), in = x[0].size();
  Grid p(n, std::vector<double>(n, 0.0)), q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double out_deg = 0.0, in_deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out_deg += a[i][j];
      in_deg += a[j][i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      p[i][j] = out_deg == 0.0 ? 0.0 : a[i][j] / out_deg;
      q[i][j] = in_deg == 0.0 ? 0.0 : a[j][i] / in_deg;
    }
  }
  Grid h(n, std::vector<double>(static_cast<std::size_t>(out), 0.0));
  for (int dir = 0; dir < 2; ++dir) {
    const Grid& t = dir == 0 ? p : q;
    Grid power(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) power[i][i] = 1.0;
    for (int k = 0; k < steps; ++k) {
      const Grid z = matmul(power, x);
      for (int oq = 0; oq < out; ++oq)
        for (std::size_t ip = 0; ip < in; ++ip) {
          const double th = theta[((static_cast<std::size_t>(oq) * in + ip) * steps + k) * 2 + dir];
          for (std::size_t node = 0; node < n; ++node) h[node][oq] += th * z[node][ip];
        }
      power = matmul(t, power);
    }
  }
  return h;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Valid sliding-window convolution; kernel flattened row-major [Ks, D, 2D].
inline std::vector<Grid> gtu(const std::vector<Grid>& slices, const std::vector<double>& kernel,
                             const std::vector<double>& bias, int ks) {
  const std::size_t n = slices[0].size(), dim = slices[0][0].size();
  std::vector<Grid> out;
  for (std::size_t j = 0; j + ks <= slices.size(); ++j) {
    Grid o(n, std::vector<double>(dim, 0.0));
    for (std::size_t node = 0; node < n; ++node)
      for (std::size_t c = 0; c < dim; ++c) {
        double u = bias[c], v = bias[dim + c];
        for (int s = 0; s < ks; ++s)
          for (std::size_t p = 0; p < dim; ++p) {
            const double x = slices[j + s][node][p];
            u += x * kernel[(s * dim + p) * 2 * dim + c];
            v += x * kernel[(s * dim + p) * 2 * dim + dim + c];
          }
        o[node][c] = std::tanh(u) * sigmoid(v);
      }
    out.push_back(o);
  }
  return out;
}

inline double mae(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j, ++n) s += std::abs(a(i, j) - b(i, j));
  return s / static_cast<double>(n);
}

// Historical average on x(t) = c + slope * t: the window mean lags the
// target at horizon h by slope * ((T' + 1) / 2 + h - 1).
inline double ha_ramp_mae(int input_len, int h, double slope) {
  return std::abs(slope) * ((input_len + 1) / 2.0 + h - 1);
}

// Three-sigma band of a binomial proportion.
inline double binomial_3sigma(double p, long n) { return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace oracle
