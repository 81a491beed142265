// SPDX-License-Identifier: Apache-2.0
#include "faa/ops.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "faa/errors.hpp"

namespace faa {
namespace {

std::atomic<double> g_gelu_derivative_scale{1.0};

Graph& owner(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.graph();
}

Graph& owner(Var a, Var b) {
  Graph& g = owner(a);
  if (b.graph() != &g) throw ContractError("operands belong to different graphs");
  return g;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

// C[m x n] += op(A) * op(B), row-major, fixed loop order.
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const double* A, const double* B,
          double* C) {
  // Transposed operands are copied to row-major [k x n] / [m x k] first so the
  // inner loop is always a contiguous axpy over a row of C.
  std::vector<double> bt, at;
  if (tb) {
    bt.resize(k * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = B[j * k + p];
    B = bt.data();
  }
  if (ta && tb) {
    at.resize(m * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) at[i * k + p] = A[p * m + i];
    A = at.data();
    ta = false;
  }
  if (!ta) {
    // Each row of C is built from its own row of A only; column blocks of 8
    // are accumulated in registers over the full k range.
    constexpr std::size_t kBlock = 8;
    const std::size_t n_full = n - n % kBlock;
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = A + i * k;
      double* c = C + i * n;
      for (std::size_t j0 = 0; j0 < n_full; j0 += kBlock) {
        double acc[kBlock] = {};
        for (std::size_t p = 0; p < k; ++p) {
          const double ap = a[p];
          const double* b = B + p * n + j0;
          for (std::size_t jj = 0; jj < kBlock; ++jj) acc[jj] += ap * b[jj];
        }
        for (std::size_t jj = 0; jj < kBlock; ++jj) c[j0 + jj] += acc[jj];
      }
      for (std::size_t j = n_full; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += a[p] * B[p * n + j];
        c[j] += acc;
      }
    }
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      const double* b = B + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = A[p * m + i];
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
      }
    }
  }
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;

}  // namespace

namespace debug {
void set_gelu_derivative_scale(double factor) { g_gelu_derivative_scale.store(factor); }
double gelu_derivative_scale() { return g_gelu_derivative_scale.load(); }
}  // namespace debug

double gelu_value(double x) {
  const double u = kGeluC * (x + kGeluK * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kGeluC * (x + kGeluK * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * x * x);
}

Var matmul(Var a, Var b) {
  Graph& g = owner(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (B.ndim() != 2 || A.cols() != B.rows()) {
    throw DimensionError("matmul: shapes " + shape_str(A.shape()) + " and " + shape_str(B.shape()) +
                         " are not compatible");
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  std::vector<double> out(m * n, 0.0);
  gemm(false, false, m, n, k, A.data().data(), B.data().data(), out.data());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(OpKind::kMatmul, {ia, ib}, Tensor({m, n}, std::move(out)),
                  [ia, ib, m, n, k](Graph& gr, std::size_t self) {
                    const double* dC = gr.out_grad(self).data();
                    if (gr.needs_grad(ia)) {
                      gemm(false, true, m, k, n, dC, gr.value(ib).data().data(), gr.grad_buffer(ia).data());
                    }
                    if (gr.needs_grad(ib)) {
                      gemm(true, false, k, n, m, gr.value(ia).data().data(), dC, gr.grad_buffer(ib).data());
                    }
                  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = owner(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) {
    throw DimensionError("matmul_nt: shapes " + shape_str(A.shape()) + " and " + shape_str(B.shape()) +
                         " are not compatible");
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  std::vector<double> out(m * n, 0.0);
  gemm(false, true, m, n, k, A.data().data(), B.data().data(), out.data());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(OpKind::kMatmul, {ia, ib}, Tensor({m, n}, std::move(out)),
                  [ia, ib, m, n, k](Graph& gr, std::size_t self) {
                    const double* dC = gr.out_grad(self).data();
                    if (gr.needs_grad(ia)) {
                      gemm(false, false, m, k, n, dC, gr.value(ib).data().data(), gr.grad_buffer(ia).data());
                    }
                    if (gr.needs_grad(ib)) {
                      gemm(true, false, n, k, m, dC, gr.value(ia).data().data(), gr.grad_buffer(ib).data());
                    }
                  });
}

Var linear(Var x, Var weight) { return matmul_nt(x, weight); }

Var linear(Var x, Var weight, Var bias) { return add_row(matmul_nt(x, weight), bias); }

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Var binary_elementwise(OpKind kind, const char* name, Var a, Var b, Fwd fwd, BwdA da, BwdB db) {
  Graph& g = owner(a, b);
  require_same_shape(name, a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  std::vector<double> out(A.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(A[i], B[i]);
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(kind, {ia, ib}, Tensor(A.shape(), std::move(out)),
                  [ia, ib, da, db](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    const Tensor& va = gr.value(ia);
                    const Tensor& vb = gr.value(ib);
                    if (gr.needs_grad(ia)) {
                      auto& ga = gr.grad_buffer(ia);
                      for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i] * da(va[i], vb[i]);
                    }
                    if (gr.needs_grad(ib)) {
                      auto& gb = gr.grad_buffer(ib);
                      for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += dy[i] * db(va[i], vb[i]);
                    }
                  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      OpKind::kAdd, "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      OpKind::kSub, "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      OpKind::kMul, "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var scale(Var x, double factor) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  std::vector<double> out(X.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * factor;
  const std::size_t ix = x.id();
  return g.record(OpKind::kScale, {ix}, Tensor(X.shape(), std::move(out)),
                  [ix, factor](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    auto& gx = gr.grad_buffer(ix);
                    for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy[i] * factor;
                  });
}

Var add_row(Var x, Var row) {
  Graph& g = owner(x, row);
  const Tensor& X = x.value();
  const Tensor& R = row.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (R.numel() != d) {
    throw DimensionError("add_row: row " + shape_str(R.shape()) + " does not match " + shape_str(X.shape()));
  }
  std::vector<double> out(X.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] + R[j];
  const std::size_t ix = x.id(), ir = row.id();
  return g.record(OpKind::kAddRow, {ix, ir}, Tensor(X.shape(), std::move(out)),
                  [ix, ir, n, d](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    if (gr.needs_grad(ix)) {
                      auto& gx = gr.grad_buffer(ix);
                      for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy[i];
                    }
                    if (gr.needs_grad(ir)) {
                      auto& grow = gr.grad_buffer(ir);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) grow[j] += dy[i * d + j];
                    }
                  });
}

Var mul_row(Var x, Var row) {
  Graph& g = owner(x, row);
  const Tensor& X = x.value();
  const Tensor& R = row.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (R.numel() != d) {
    throw DimensionError("mul_row: row " + shape_str(R.shape()) + " does not match " + shape_str(X.shape()));
  }
  std::vector<double> out(X.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] * R[j];
  const std::size_t ix = x.id(), ir = row.id();
  return g.record(OpKind::kMulRow, {ix, ir}, Tensor(X.shape(), std::move(out)),
                  [ix, ir, n, d](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    const Tensor& vx = gr.value(ix);
                    const Tensor& vr = gr.value(ir);
                    if (gr.needs_grad(ix)) {
                      auto& gx = gr.grad_buffer(ix);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += dy[i * d + j] * vr[j];
                    }
                    if (gr.needs_grad(ir)) {
                      auto& grow = gr.grad_buffer(ir);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) grow[j] += dy[i * d + j] * vx[i * d + j];
                    }
                  });
}

Var mul_col(Var x, Var col) {
  Graph& g = owner(x, col);
  const Tensor& X = x.value();
  const Tensor& C = col.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (C.numel() != n) {
    throw DimensionError("mul_col: column " + shape_str(C.shape()) + " does not match " + shape_str(X.shape()));
  }
  std::vector<double> out(X.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] * C[i];
  const std::size_t ix = x.id(), ic = col.id();
  return g.record(OpKind::kMulCol, {ix, ic}, Tensor(X.shape(), std::move(out)),
                  [ix, ic, n, d](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    const Tensor& vx = gr.value(ix);
                    const Tensor& vc = gr.value(ic);
                    if (gr.needs_grad(ix)) {
                      auto& gx = gr.grad_buffer(ix);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += dy[i * d + j] * vc[i];
                    }
                    if (gr.needs_grad(ic)) {
                      auto& gc = gr.grad_buffer(ic);
                      for (std::size_t i = 0; i < n; ++i) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < d; ++j) s += dy[i * d + j] * vx[i * d + j];
                        gc[i] += s;
                      }
                    }
                  });
}

Var unary(Var x, UnaryKind kind) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  std::vector<double> out(X.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = X[i];
    switch (kind) {
      case UnaryKind::kCos: out[i] = std::cos(v); break;
      case UnaryKind::kSin: out[i] = std::sin(v); break;
      case UnaryKind::kGelu: out[i] = gelu_value(v); break;
      case UnaryKind::kSigmoid: out[i] = sigmoid_value(v); break;
      case UnaryKind::kAbs: out[i] = std::fabs(v); break;
    }
  }
  const std::size_t ix = x.id();
  return g.record(OpKind::kUnary, {ix}, Tensor(X.shape(), std::move(out)), [ix, kind](Graph& gr, std::size_t self) {
    const auto& dy = gr.out_grad(self);
    const Tensor& vx = gr.value(ix);
    const Tensor& vy = gr.value(self);
    auto& gx = gr.grad_buffer(ix);
    const double gelu_scale = debug::gelu_derivative_scale();
    for (std::size_t i = 0; i < dy.size(); ++i) {
      double d = 0.0;
      switch (kind) {
        case UnaryKind::kCos: d = -std::sin(vx[i]); break;
        case UnaryKind::kSin: d = std::cos(vx[i]); break;
        case UnaryKind::kGelu: d = gelu_derivative(vx[i]) * gelu_scale; break;
        case UnaryKind::kSigmoid: d = vy[i] * (1.0 - vy[i]); break;
        case UnaryKind::kAbs: d = vx[i] > 0.0 ? 1.0 : (vx[i] < 0.0 ? -1.0 : 0.0); break;
      }
      gx[i] += dy[i] * d;
    }
  });
}

Var sum(Var x) {
  Graph& g = owner(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return g.record(OpKind::kSum, {ix}, Tensor::scalar(s), [ix](Graph& gr, std::size_t self) {
    const double dy = gr.out_grad(self)[0];
    for (double& v : gr.grad_buffer(ix)) v += dy;
  });
}

Var mean(Var x) {
  Graph& g = owner(x);
  const std::size_t n = x.value().numel();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return g.record(OpKind::kMean, {ix}, Tensor::scalar(s / static_cast<double>(n)),
                  [ix, n](Graph& gr, std::size_t self) {
                    const double dy = gr.out_grad(self)[0] / static_cast<double>(n);
                    for (double& v : gr.grad_buffer(ix)) v += dy;
                  });
}

namespace {

Var row_reduce(Var x, bool average) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  const double f = average ? 1.0 / static_cast<double>(d) : 1.0;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += X[i * d + j];
    out[i] = s * f;
  }
  const std::size_t ix = x.id();
  return g.record(average ? OpKind::kRowMean : OpKind::kRowSum, {ix}, Tensor({n, 1}, std::move(out)),
                  [ix, n, d, f](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    auto& gx = gr.grad_buffer(ix);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += dy[i] * f;
                  });
}

}  // namespace

Var row_sum(Var x) { return row_reduce(x, false); }
Var row_mean(Var x) { return row_reduce(x, true); }

Var col_mean(Var x) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  const double f = 1.0 / static_cast<double>(n);
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += X[i * d + j];
  for (double& v : out) v *= f;
  const std::size_t ix = x.id();
  return g.record(OpKind::kColMean, {ix}, Tensor({1, d}, std::move(out)), [ix, n, d, f](Graph& gr, std::size_t self) {
    const auto& dy = gr.out_grad(self);
    auto& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += dy[j] * f;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Graph& g = owner(parts[0]);
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw ContractError("operands belong to different graphs");
    if (p.rows() != n) {
      throw DimensionError("concat_cols: shapes " + shape_str(parts[0].shape()) + " and " + shape_str(p.shape()) +
                           " have different row counts");
    }
    ids.push_back(p.id());
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    const std::size_t w = widths[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = P[i * w + j];
    offset += w;
  }
  std::vector<std::size_t> inputs = ids;
  return g.record(OpKind::kConcatCols, std::move(inputs), Tensor({n, total}, std::move(out)),
                  [ids, widths, n, total](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const std::size_t w = widths[k];
                      if (gr.needs_grad(ids[k])) {
                        auto& gp = gr.grad_buffer(ids[k]);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += dy[i * total + off + j];
                      }
                      off += w;
                    }
                  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  Graph& g = owner(parts[0]);
  const std::size_t d = parts[0].cols();
  std::vector<std::size_t> ids, sizes;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw ContractError("operands belong to different graphs");
    if (p.cols() != d) {
      throw DimensionError("concat_rows: shapes " + shape_str(parts[0].shape()) + " and " + shape_str(p.shape()) +
                           " have different widths");
    }
    ids.push_back(p.id());
    sizes.push_back(p.value().numel());
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * d);
  for (const Var& p : parts) out.insert(out.end(), p.value().data().begin(), p.value().data().end());
  std::vector<std::size_t> inputs = ids;
  return g.record(OpKind::kConcatRows, std::move(inputs), Tensor({rows, d}, std::move(out)),
                  [ids, sizes](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (gr.needs_grad(ids[k])) {
                        auto& gp = gr.grad_buffer(ids[k]);
                        for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += dy[off + i];
                      }
                      off += sizes[k];
                    }
                  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (count == 0 || start + count > d) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_str(X.shape()));
  }
  std::vector<double> out(n * count);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = X[i * d + start + j];
  const std::size_t ix = x.id();
  return g.record(OpKind::kSliceCols, {ix}, Tensor({n, count}, std::move(out)),
                  [ix, n, d, start, count](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    auto& gx = gr.grad_buffer(ix);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < count; ++j) gx[i * d + start + j] += dy[i * count + j];
                  });
}

Var slice_rows(Var x, std::size_t start, std::size_t count) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_str(X.shape()));
  }
  std::vector<double> out(X.data().begin() + static_cast<std::ptrdiff_t>(start * d),
                          X.data().begin() + static_cast<std::ptrdiff_t>((start + count) * d));
  const std::size_t ix = x.id();
  const std::size_t off = start * d;
  return g.record(OpKind::kSliceRows, {ix}, Tensor({count, d}, std::move(out)), [ix, off](Graph& gr, std::size_t self) {
    const auto& dy = gr.out_grad(self);
    auto& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < dy.size(); ++i) gx[off + i] += dy[i];
  });
}

Var reshape(Var x, Shape shape) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  if (shape_numel(shape) != X.numel()) {
    throw DimensionError("reshape: " + shape_str(X.shape()) + " cannot become " + shape_str(shape));
  }
  const std::size_t ix = x.id();
  return g.record(OpKind::kReshape, {ix}, Tensor(std::move(shape), X.values()), [ix](Graph& gr, std::size_t self) {
    const auto& dy = gr.out_grad(self);
    auto& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy[i];
  });
}

namespace {

Var layernorm_impl(Var x, const Var* scale_v, const Var* shift_v, double eps) {
  Graph& g = owner(x);
  if (eps <= 0.0) throw ContractError("layernorm: eps must be positive");
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  if (scale_v && (scale_v->value().numel() != d || shift_v->value().numel() != d)) {
    throw DimensionError("layernorm: affine parameters " + shape_str(scale_v->shape()) + " / " +
                         shape_str(shift_v->shape()) + " do not match " + shape_str(X.shape()));
  }
  std::vector<double> xhat(n * d), inv(n), out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += X[i * d + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = X[i * d + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) xhat[i * d + j] = (X[i * d + j] - mu) * inv[i];
  }
  std::vector<std::size_t> inputs{x.id()};
  std::size_t is = 0, ib = 0;
  if (scale_v) {
    if (scale_v->graph() != &g || shift_v->graph() != &g) throw ContractError("operands belong to different graphs");
    is = scale_v->id();
    ib = shift_v->id();
    inputs.push_back(is);
    inputs.push_back(ib);
    const Tensor& S = scale_v->value();
    const Tensor& B = shift_v->value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xhat[i * d + j] * S[j] + B[j];
  } else {
    out = xhat;
  }
  const std::size_t ix = x.id();
  const bool affine = scale_v != nullptr;
  return g.record(OpKind::kLayerNorm, std::move(inputs), Tensor(X.shape(), std::move(out)),
                  [ix, is, ib, affine, n, d, xhat = std::move(xhat), inv = std::move(inv)](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    std::vector<double> dxhat(dy.begin(), dy.end());
                    if (affine) {
                      const Tensor& S = gr.value(is);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) dxhat[i * d + j] = dy[i * d + j] * S[j];
                      if (gr.needs_grad(is)) {
                        auto& gs = gr.grad_buffer(is);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t j = 0; j < d; ++j) gs[j] += dy[i * d + j] * xhat[i * d + j];
                      }
                      if (gr.needs_grad(ib)) {
                        auto& gb = gr.grad_buffer(ib);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t j = 0; j < d; ++j) gb[j] += dy[i * d + j];
                      }
                    }
                    if (!gr.needs_grad(ix)) return;
                    auto& gx = gr.grad_buffer(ix);
                    const double dd = static_cast<double>(d);
                    for (std::size_t i = 0; i < n; ++i) {
                      double s1 = 0.0, s2 = 0.0;
                      for (std::size_t j = 0; j < d; ++j) {
                        s1 += dxhat[i * d + j];
                        s2 += dxhat[i * d + j] * xhat[i * d + j];
                      }
                      for (std::size_t j = 0; j < d; ++j) {
                        gx[i * d + j] += inv[i] / dd * (dd * dxhat[i * d + j] - s1 - xhat[i * d + j] * s2);
                      }
                    }
                  });
}

}  // namespace

Var layernorm(Var x, double eps) { return layernorm_impl(x, nullptr, nullptr, eps); }

Var layernorm(Var x, Var scale_v, Var shift_v, double eps) { return layernorm_impl(x, &scale_v, &shift_v, eps); }

Var softmax_rows(Var x) {
  Graph& g = owner(x);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = X[i * d];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, X[i * d + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = std::exp(X[i * d + j] - mx);
      s += out[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] /= s;
  }
  const std::size_t ix = x.id();
  return g.record(OpKind::kSoftmaxRows, {ix}, Tensor(X.shape(), std::move(out)),
                  [ix, n, d](Graph& gr, std::size_t self) {
                    const auto& dy = gr.out_grad(self);
                    const Tensor& y = gr.value(self);
                    auto& gx = gr.grad_buffer(ix);
                    for (std::size_t i = 0; i < n; ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < d; ++j) dot += dy[i * d + j] * y[i * d + j];
                      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += y[i * d + j] * (dy[i * d + j] - dot);
                    }
                  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  Graph& g = owner(logits);
  const Tensor& X = logits.value();
  const std::size_t b = X.rows(), c = X.cols();
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(X.shape()));
  }
  std::vector<double> probs(b * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) throw ContractError("cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    double mx = X[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, X[i * c + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(X[i * c + j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(X[i * c + j] - lse);
    loss += lse - X[i * c + labels[i]];
  }
  loss /= static_cast<double>(b);
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  const std::size_t ix = logits.id();
  return g.record(OpKind::kCrossEntropy, {ix}, Tensor::scalar(loss),
                  [ix, b, c, probs = std::move(probs), lab = std::move(lab)](Graph& gr, std::size_t self) {
                    const double dy = gr.out_grad(self)[0] / static_cast<double>(b);
                    auto& gx = gr.grad_buffer(ix);
                    for (std::size_t i = 0; i < b; ++i)
                      for (std::size_t j = 0; j < c; ++j) {
                        const double onehot = j == lab[i] ? 1.0 : 0.0;
                        gx[i * c + j] += dy * (probs[i * c + j] - onehot);
                      }
                  });
}

}  // namespace faa
