#pragma once

#include <memory>
#include <vector>

#include "tglrn/diff/tape.hpp"

// Differentiable primitives over 2-D row-major matrices. Every op checks the
// shapes of its operands and throws ConfigError naming itself on mismatch.
namespace tglrn::diff {

Var identity(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // Hadamard
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var matmul(Var a, Var b);
Var transpose(Var a);

// a: r x c, row: 1 x c, broadcast over rows.
Var add_row(Var a, Var row);
// col: r x 1, broadcast over columns.
Var mul_col(Var a, Var col);
// a: n x 1, b: m x 1 -> n x m with out(i, j) = a(i) + b(j).
Var pairwise_sum(Var a, Var b);

Var add_const(Var a, const Matrix& c);
Var mul_const(Var a, const Matrix& c);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var abs(Var a);
Var square(Var a);
Var log(Var a);
Var logit(Var a);  // log(a) - log(1 - a), a in (0, 1)
Var clamp(Var a, double lo, double hi);

Var softmax_rows(Var a);

// Shift and scale all entries together to mean 0 and population std alpha.
// A (numerically) constant input maps to all zeros with zero gradient.
Var standardize_all(Var a, double alpha);

// Divide each row by its sum; rows summing to zero become zero rows.
Var row_normalize(Var a);

// Per-row normalization over columns, then per-column affine (gamma, beta: 1 x c).
Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
// out.flat[i] = a.flat[index[i]]; gradient scatter-adds back.
Var gather(Var a, Eigen::Index rows, Eigen::Index cols, std::vector<Eigen::Index> index);

Var sum_all(Var a);
Var mean_all(Var a);

// Forward value is `hard`; gradient flows to `soft` unchanged.
Var straight_through(const Matrix& hard, Var soft);

// weights: r x L; masks: L matrices of r x c.
// out(i, j) = sum_l weights(i, l) * masks[l](i, j).
Var row_mix(Var weights, std::shared_ptr<const std::vector<Matrix>> masks);

}  // namespace tglrn::diff
