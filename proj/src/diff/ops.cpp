#include "tglrn/diff/ops.hpp"

#include <cmath>
#include <string>

#include "tglrn/error.hpp"

namespace tglrn::diff {
namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw ConfigError(std::string(op) + ": shape mismatch (" + detail + ")");
}

// The detail message is only built on failure.
#define REQUIRE_SHAPE(ok, op, detail) \
  do {                                \
    if (!(ok)) shape_error(op, detail); \
  } while (0)

void same_shape(const char* op, Var a, Var b) {
  REQUIRE_SHAPE(a.tape() == b.tape(), op, "operands on different tapes");
  REQUIRE_SHAPE(a.rows() == b.rows() && a.cols() == b.cols(), op, dims(a.value()) + " vs " + dims(b.value()));
}

void same_shape(const char* op, Var a, const Matrix& c) {
  REQUIRE_SHAPE(a.rows() == c.rows() && a.cols() == c.cols(), op, dims(a.value()) + " vs " + dims(c));
}

template <typename F>
Var unary(Var a, Matrix value, F&& grad_fn) {
  Tape& t = *a.tape();
  return t.record(std::move(value), {a}, [a, grad_fn](Tape& tape, const Matrix& g) { tape.add_grad(a, grad_fn(g)); });
}

}  // namespace

Var identity(Var a) {
  return unary(a, a.value(), [](const Matrix& g) { return g; });
}

Var add(Var a, Var b) {
  same_shape("add", a, b);
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.add_grad(a, g);
    t.add_grad(b, g);
  });
}

Var sub(Var a, Var b) {
  same_shape("sub", a, b);
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.add_grad(a, g);
    t.add_grad(b, -g);
  });
}

Var mul(Var a, Var b) {
  same_shape("mul", a, b);
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.add_grad(a, g.cwiseProduct(b.value()));
    t.add_grad(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return unary(a, a.value() * s, [s](const Matrix& g) { return Matrix(g * s); });
}

Var add_scalar(Var a, double s) {
  return unary(a, (a.value().array() + s).matrix(), [](const Matrix& g) { return g; });
}

Var matmul(Var a, Var b) {
  REQUIRE_SHAPE(a.tape() == b.tape(), "matmul", "operands on different tapes");
  REQUIRE_SHAPE(a.cols() == b.rows(), "matmul", dims(a.value()) + " * " + dims(b.value()));
  return a.tape()->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.add_grad(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.add_grad(b, a.value().transpose() * g);
  });
}

Var transpose(Var a) {
  return unary(a, a.value().transpose(), [](const Matrix& g) { return Matrix(g.transpose()); });
}

Var add_row(Var a, Var row) {
  REQUIRE_SHAPE(row.rows() == 1 && row.cols() == a.cols(), "add_row", dims(a.value()) + " + row " + dims(row.value()));
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.add_grad(a, g);
    t.add_grad(row, g.colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  REQUIRE_SHAPE(col.cols() == 1 && col.rows() == a.rows(), "mul_col", dims(a.value()) + " * col " + dims(col.value()));
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return a.tape()->record(std::move(out), {a, col}, [a, col](Tape& t, const Matrix& g) {
    t.add_grad(a, Matrix(g.array().colwise() * col.value().col(0).array()));
    t.add_grad(col, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var pairwise_sum(Var a, Var b) {
  REQUIRE_SHAPE(a.cols() == 1 && b.cols() == 1, "pairwise_sum", dims(a.value()) + " , " + dims(b.value()));
  Matrix out(a.rows(), b.rows());
  out.colwise() = a.value().col(0);
  out.rowwise() += b.value().col(0).transpose();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.add_grad(a, g.rowwise().sum());
    t.add_grad(b, g.colwise().sum().transpose());
  });
}

Var add_const(Var a, const Matrix& c) {
  same_shape("add_const", a, c);
  return unary(a, a.value() + c, [](const Matrix& g) { return g; });
}

Var mul_const(Var a, const Matrix& c) {
  same_shape("mul_const", a, c);
  return unary(a, a.value().cwiseProduct(c), [c](const Matrix& g) { return Matrix(g.cwiseProduct(c)); });
}

Var sigmoid(Var a) {
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  Tape& t = *a.tape();
  Var out = t.record(y, {a}, [a, y](Tape& tape, const Matrix& g) {
    tape.add_grad(a, Matrix(g.array() * y.array() * (1.0 - y.array())));
  });
  return out;
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh().matrix();
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.add_grad(a, Matrix(g.array() * (1.0 - y.array().square())));
  });
}

Var relu(Var a) {
  Matrix y = a.value().cwiseMax(0.0);
  return unary(a, std::move(y), [a](const Matrix& g) {
    return Matrix((a.value().array() > 0.0).select(g.array(), 0.0));
  });
}

Var abs(Var a) {
  return unary(a, a.value().cwiseAbs(), [a](const Matrix& g) {
    return Matrix(g.array() * a.value().array().sign());
  });
}

Var square(Var a) {
  return unary(a, a.value().array().square().matrix(),
               [a](const Matrix& g) { return Matrix(2.0 * g.array() * a.value().array()); });
}

Var log(Var a) {
  return unary(a, a.value().array().log().matrix(),
               [a](const Matrix& g) { return Matrix(g.array() / a.value().array()); });
}

Var logit(Var a) {
  const auto& x = a.value().array();
  Matrix y = (x.log() - (1.0 - x).log()).matrix();
  return unary(a, std::move(y), [a](const Matrix& g) {
    const auto& v = a.value().array();
    return Matrix(g.array() / (v * (1.0 - v)));
  });
}

Var clamp(Var a, double lo, double hi) {
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  return unary(a, std::move(y), [a, lo, hi](const Matrix& g) {
    const auto& v = a.value().array();
    return Matrix((v >= lo && v <= hi).select(g.array(), 0.0));
  });
}

Var softmax_rows(Var a) {
  Matrix y = a.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix gx = g;
    gx.colwise() -= dot;
    t.add_grad(a, gx.cwiseProduct(y));
  });
}

Var standardize_all(Var a, double alpha) {
  const Matrix& x = a.value();
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw ConfigError("standardize_all: needs at least two entries, got " + dims(x));
  const double mu = x.mean();
  const double sigma = std::sqrt((x.array() - mu).square().sum() / n);
  if (sigma <= 1e-12 * std::max(1.0, std::abs(mu))) {
    return a.tape()->record(Matrix::Zero(x.rows(), x.cols()), {a}, [](Tape&, const Matrix&) {});
  }
  Matrix z = ((x.array() - mu) / sigma).matrix();
  Matrix y = alpha * z;
  return a.tape()->record(std::move(y), {a}, [a, z, sigma, alpha](Tape& t, const Matrix& g) {
    const double gm = g.mean();
    const double gz = g.cwiseProduct(z).mean();
    t.add_grad(a, Matrix((alpha / sigma) * (g.array() - gm - z.array() * gz)));
  });
}

Var row_normalize(Var a) {
  const Matrix& x = a.value();
  Eigen::VectorXd inv = x.rowwise().sum();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) == 0.0 ? 0.0 : 1.0 / inv(i);
  Matrix y = inv.asDiagonal() * x;
  return a.tape()->record(y, {a}, [a, y, inv](Tape& t, const Matrix& g) {
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix gx = g;
    gx.colwise() -= dot;
    t.add_grad(a, Matrix(inv.asDiagonal() * gx));
  });
}

Var layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Matrix& x = a.value();
  REQUIRE_SHAPE(gamma.rows() == 1 && gamma.cols() == x.cols() && beta.rows() == 1 && beta.cols() == x.cols(),
          "layer_norm_rows", dims(x) + " with gamma " + dims(gamma.value()) + " beta " + dims(beta.value()));
  const auto c = static_cast<double>(x.cols());
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix xc = x;
  xc.colwise() -= mean;
  Eigen::VectorXd inv_std = ((xc.array().square().rowwise().sum() / c) + eps).rsqrt().matrix();
  Matrix xhat = inv_std.asDiagonal() * xc;
  Matrix y = xhat;
  y.array().rowwise() *= gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  return a.tape()->record(std::move(y), {a, gamma, beta}, [a, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
    t.add_grad(gamma, g.cwiseProduct(xhat).colwise().sum());
    t.add_grad(beta, g.colwise().sum());
    if (!t.requires_grad(a)) return;
    Matrix gh = g;
    gh.array().rowwise() *= gamma.value().row(0).array();
    Eigen::VectorXd m1 = gh.rowwise().mean();
    Eigen::VectorXd m2 = gh.cwiseProduct(xhat).rowwise().mean();
    Matrix gx = gh;
    gx.colwise() -= m1;
    gx -= m2.asDiagonal() * xhat;
    t.add_grad(a, Matrix(inv_std.asDiagonal() * gx));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: no operands");
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    REQUIRE_SHAPE(p.rows() == rows && p.tape() == parts.front().tape(), "concat_cols",
            dims(p.value()) + " rows vs " + std::to_string(rows));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return parts.front().tape()->record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index o = 0;
    for (const auto& p : parts) {
      t.add_grad(p, g.middleCols(o, p.cols()));
      o += p.cols();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  REQUIRE_SHAPE(start >= 0 && count > 0 && start + count <= a.cols(), "slice_cols",
          dims(a.value()) + " cols [" + std::to_string(start) + ", +" + std::to_string(count) + ")");
  const auto rows = a.rows(), cols = a.cols();
  return unary(a, a.value().middleCols(start, count), [rows, cols, start, count](const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    full.middleCols(start, count) = g;
    return full;
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  REQUIRE_SHAPE(start >= 0 && count > 0 && start + count <= a.rows(), "slice_rows",
          dims(a.value()) + " rows [" + std::to_string(start) + ", +" + std::to_string(count) + ")");
  const auto rows = a.rows(), cols = a.cols();
  return unary(a, a.value().middleRows(start, count), [rows, cols, start, count](const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    full.middleRows(start, count) = g;
    return full;
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  REQUIRE_SHAPE(rows * cols == a.value().size(), "reshape", dims(a.value()) + " -> " + std::to_string(rows) + "x" +
                                                         std::to_string(cols));
  const auto r0 = a.rows(), c0 = a.cols();
  Matrix y = ConstMatrixMap(a.value().data(), rows, cols);
  return unary(a, std::move(y), [r0, c0](const Matrix& g) { return Matrix(ConstMatrixMap(g.data(), r0, c0)); });
}

Var gather(Var a, Eigen::Index rows, Eigen::Index cols, std::vector<Eigen::Index> index) {
  REQUIRE_SHAPE(static_cast<Eigen::Index>(index.size()) == rows * cols, "gather",
          std::to_string(index.size()) + " indices for " + std::to_string(rows) + "x" + std::to_string(cols));
  const Matrix& x = a.value();
  Matrix y(rows, cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.size())
      throw ConfigError("gather: index " + std::to_string(index[i]) + " out of range for " + dims(x));
    y.data()[i] = x.data()[index[i]];
  }
  const auto r0 = x.rows(), c0 = x.cols();
  return unary(a, std::move(y), [r0, c0, index = std::move(index)](const Matrix& g) {
    Matrix full = Matrix::Zero(r0, c0);
    for (std::size_t i = 0; i < index.size(); ++i) full.data()[index[i]] += g.data()[i];
    return full;
  });
}

Var sum_all(Var a) {
  const auto r = a.rows(), c = a.cols();
  return unary(a, Matrix::Constant(1, 1, a.value().sum()),
               [r, c](const Matrix& g) { return Matrix(Matrix::Constant(r, c, g(0, 0))); });
}

Var mean_all(Var a) {
  const auto r = a.rows(), c = a.cols();
  const double n = static_cast<double>(a.value().size());
  return unary(a, Matrix::Constant(1, 1, a.value().mean()),
               [r, c, n](const Matrix& g) { return Matrix(Matrix::Constant(r, c, g(0, 0) / n)); });
}

Var straight_through(const Matrix& hard, Var soft) {
  same_shape("straight_through", soft, hard);
  return unary(soft, hard, [](const Matrix& g) { return g; });
}

Var row_mix(Var weights, std::shared_ptr<const std::vector<Matrix>> masks) {
  REQUIRE_SHAPE(masks && static_cast<Eigen::Index>(masks->size()) == weights.cols(), "row_mix",
          "weights " + dims(weights.value()) + " vs " + std::to_string(masks ? masks->size() : 0) + " masks");
  const auto rows = weights.rows();
  const auto cols = masks->front().cols();
  Matrix out = Matrix::Zero(rows, cols);
  for (std::size_t l = 0; l < masks->size(); ++l) {
    const Matrix& m = (*masks)[l];
    REQUIRE_SHAPE(m.rows() == rows && m.cols() == cols, "row_mix", "mask " + dims(m));
    out += weights.value().col(static_cast<Eigen::Index>(l)).asDiagonal() * m;
  }
  return unary(weights, std::move(out), [masks](const Matrix& g) {
    Matrix gw(g.rows(), static_cast<Eigen::Index>(masks->size()));
    for (std::size_t l = 0; l < masks->size(); ++l)
      gw.col(static_cast<Eigen::Index>(l)) = g.cwiseProduct((*masks)[l]).rowwise().sum();
    return gw;
  });
}

}  // namespace tglrn::diff
