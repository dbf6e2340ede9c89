// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "duadeep/rng.hpp"

namespace duadeep::ops {
namespace {

[[noreturn]] void dimension_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::kDimension,
       std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

template <typename T>
void same_tape(const Var<T>& a, const Var<T>& b) {
  if (&a.tape() != &b.tape()) fail(ErrorKind::kContract, "operands recorded on different tapes");
}

template <typename T>
void require_rank(const char* op, const Var<T>& x, std::size_t rank) {
  if (x.shape().size() != rank) {
    fail(ErrorKind::kDimension, std::string(op) + ": expected rank " + std::to_string(rank) +
                                    ", got shape " + shape_string(x.shape()));
  }
}

template <typename T>
void accumulate(Tape<T>& tape, std::size_t id, std::span<const T> g) {
  if (!tape.needs_grad(id)) return;
  std::span<T> dst = tape.grad(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  same_tape(a, b);
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    dimension_error("matmul", av.shape(), bv.shape());
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<T> out({m, n});
  const T* A = av.data().data();
  const T* B = bv.data().data();
  T* C = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aval = A[i * k + p];
      const T* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape<T>& tape, std::span<const T> g) {
    const T* A = tape.value(ia).data().data();
    const T* B = tape.value(ib).data().data();
    if (tape.needs_grad(ia)) {
      T* dA = tape.grad(ia).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc{0};
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
          dA[i * k + p] += acc;
        }
      }
    }
    if (tape.needs_grad(ib)) {
      T* dB = tape.grad(ib).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aval = A[i * k + p];
          T* drow = dB + p * n;
          for (std::size_t j = 0; j < n; ++j) drow[j] += aval * g[i * n + j];
        }
      }
    }
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  require_rank("transpose", a, 2);
  const Tensor<T>& av = a.value();
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, m, n](Tape<T>& tape, std::span<const T> g) {
    std::span<T> dA = tape.grad(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) dA[i * n + j] += g[j * m + i];
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  same_tape(a, b);
  if (a.shape() != b.shape()) dimension_error("add", a.shape(), b.shape());
  Tensor<T> out = a.value();
  out.set_requires_grad(false);
  const std::span<const T> bv = b.value().data();
  std::span<T> o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& tape, std::span<const T> g) {
    accumulate(tape, ia, g);
    accumulate(tape, ib, g);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  same_tape(a, b);
  if (a.shape() != b.shape()) dimension_error("sub", a.shape(), b.shape());
  Tensor<T> out = a.value();
  out.set_requires_grad(false);
  const std::span<const T> bv = b.value().data();
  std::span<T> o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& tape, std::span<const T> g) {
    accumulate(tape, ia, g);
    if (!tape.needs_grad(ib)) return;
    std::span<T> dB = tape.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) dB[i] -= g[i];
  });
}

template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
  same_tape(x, bias);
  const Shape& xs = x.shape();
  if (bias.shape().size() != 1 || xs.empty() || xs.back() != bias.shape()[0]) {
    dimension_error("add_bias", xs, bias.shape());
  }
  const std::size_t n = bias.shape()[0];
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  const std::span<const T> bv = bias.value().data();
  std::span<T> o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i % n];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {ix, ib}, [ix, ib, n](Tape<T>& tape, std::span<const T> g) {
    accumulate(tape, ix, g);
    if (!tape.needs_grad(ib)) return;
    std::span<T> dB = tape.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) dB[i % n] += g[i];
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (T& v : out.data()) v *= factor;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, factor](Tape<T>& tape, std::span<const T> g) {
    std::span<T> dX = tape.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dX[i] += factor * g[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix](Tape<T>& tape, std::span<const T> g) {
    const std::span<const T> xv = tape.value(ix).data();
    std::span<T> dX = tape.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T{0}) dX[i] += g[i];
    }
  });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  require_rank("softmax_rows", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (std::size_t i = 0; i < m; ++i) {
    T* row = out.data().data() + i * n;
    const T mx = *std::max_element(row, row + n);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  const std::size_t ix = x.id();
  std::vector<T> y = out.storage();
  return x.tape().record(std::move(out), {ix}, [ix, m, n, y = std::move(y)](Tape<T>& tape, std::span<const T> g) {
    std::span<T> dX = tape.grad(ix);
    for (std::size_t i = 0; i < m; ++i) {
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) dX[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Shape& xs = x.shape();
  if (xs.empty()) dimension_error("layer_norm", xs, gamma.shape());
  const std::size_t d = xs.back();
  if (gamma.shape() != Shape{d}) dimension_error("layer_norm", xs, gamma.shape());
  if (beta.shape() != Shape{d}) dimension_error("layer_norm", xs, beta.shape());
  const std::size_t rows = x.size() / d;
  const std::span<const T> xv = x.value().data();
  const std::span<const T> gv = gamma.value().data();
  const std::span<const T> bv = beta.value().data();

  Tensor<T> out(xs);
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * d;
    T mean{0};
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<T>(d);
    T var{0};
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(d);
    const T inv = T{1} / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mean) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = gv[j] * h + bv[j];
    }
  }
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape<T>& tape, std::span<const T> g) {
        if (tape.needs_grad(ig)) {
          std::span<T> dG = tape.grad(ig);
          for (std::size_t i = 0; i < g.size(); ++i) dG[i % d] += g[i] * xhat[i];
        }
        if (tape.needs_grad(ib)) {
          std::span<T> dB = tape.grad(ib);
          for (std::size_t i = 0; i < g.size(); ++i) dB[i % d] += g[i];
        }
        if (!tape.needs_grad(ix)) return;
        const std::span<const T> gv = tape.value(ig).data();
        std::span<T> dX = tape.grad(ix);
        std::vector<T> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_d{0}, mean_dx{0};
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = g[r * d + j] * gv[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat[r * d + j];
          }
          mean_d /= static_cast<T>(d);
          mean_dx /= static_cast<T>(d);
          for (std::size_t j = 0; j < d; ++j) {
            dX[r * d + j] += inv_std[r] * (dxhat[j] - mean_d - xhat[r * d + j] * mean_dx);
          }
        }
      });
}

template <typename T>
Var<T> conv1d_same(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  same_tape(x, w);
  same_tape(x, b);
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  if (wv.rank() != 3) dimension_error("conv1d_same", xv.shape(), wv.shape());
  const std::size_t k = wv.dim(0), cin = wv.dim(1), cout = wv.dim(2);
  if (k % 2 == 0) {
    fail(ErrorKind::kConfig, "conv1d_same: kernel size must be odd, got " + std::to_string(k));
  }
  if (xv.rank() != 2 || xv.dim(1) != cin) dimension_error("conv1d_same", xv.shape(), wv.shape());
  if (b.shape() != Shape{cout}) dimension_error("conv1d_same", wv.shape(), b.shape());
  const std::size_t len = xv.dim(0);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

  Tensor<T> out({len, cout});
  const T* X = xv.data().data();
  const T* W = wv.data().data();
  const T* B = b.value().data().data();
  T* O = out.data().data();
  for (std::size_t j = 0; j < len; ++j) {
    T* orow = O + j * cout;
    for (std::size_t o = 0; o < cout; ++o) orow[o] = B[o];
    for (std::size_t i = 0; i < k; ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(j + i) - pad;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      const T* xrow = X + static_cast<std::size_t>(src) * cin;
      for (std::size_t c = 0; c < cin; ++c) {
        const T xval = xrow[c];
        const T* wrow = W + (i * cin + c) * cout;
        for (std::size_t o = 0; o < cout; ++o) orow[o] += xval * wrow[o];
      }
    }
  }
  const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  return x.tape().record(
      std::move(out), {ix, iw, ib},
      [ix, iw, ib, k, cin, cout, len, pad](Tape<T>& tape, std::span<const T> g) {
        const T* X = tape.value(ix).data().data();
        const T* W = tape.value(iw).data().data();
        const bool need_x = tape.needs_grad(ix), need_w = tape.needs_grad(iw);
        T* dX = need_x ? tape.grad(ix).data() : nullptr;
        T* dW = need_w ? tape.grad(iw).data() : nullptr;
        if (tape.needs_grad(ib)) {
          std::span<T> dB = tape.grad(ib);
          for (std::size_t j = 0; j < len; ++j) {
            for (std::size_t o = 0; o < cout; ++o) dB[o] += g[j * cout + o];
          }
        }
        for (std::size_t j = 0; j < len; ++j) {
          const T* grow = g.data() + j * cout;
          for (std::size_t i = 0; i < k; ++i) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(j + i) - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            const std::size_t s = static_cast<std::size_t>(src);
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t woff = (i * cin + c) * cout;
              if (need_w) {
                const T xval = X[s * cin + c];
                T* dwrow = dW + woff;
                for (std::size_t o = 0; o < cout; ++o) dwrow[o] += xval * grow[o];
              }
              if (need_x) {
                const T* wrow = W + woff;
                T acc{0};
                for (std::size_t o = 0; o < cout; ++o) acc += wrow[o] * grow[o];
                dX[s * cin + c] += acc;
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> masked_mean_rows(const Var<T>& x, const Tensor<T>& mask) {
  require_rank("masked_mean_rows", x, 2);
  const std::size_t len = x.shape()[0], d = x.shape()[1];
  if (mask.rank() != 1 || mask.dim(0) != len) dimension_error("masked_mean_rows", x.shape(), mask.shape());
  std::size_t count = 0;
  for (const T m : mask.data()) {
    if (m != T{0} && m != T{1}) fail(ErrorKind::kContract, "mask entries must be 0 or 1");
    if (m == T{1}) ++count;
  }
  if (count == 0) fail(ErrorKind::kEmptySequence, "masked_mean_rows: mask selects no positions");
  const T inv = T{1} / static_cast<T>(count);
  std::vector<std::size_t> rows;
  rows.reserve(count);
  for (std::size_t r = 0; r < len; ++r) {
    if (mask[r] == T{1}) rows.push_back(r);
  }
  Tensor<T> out({d});
  const std::span<const T> xv = x.value().data();
  for (const std::size_t r : rows) {
    for (std::size_t j = 0; j < d; ++j) out[j] += xv[r * d + j];
  }
  for (T& v : out.data()) v *= inv;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix},
                         [ix, d, inv, rows = std::move(rows)](Tape<T>& tape, std::span<const T> g) {
                           std::span<T> dX = tape.grad(ix);
                           for (const std::size_t r : rows) {
                             for (std::size_t j = 0; j < d; ++j) dX[r * d + j] += g[j] * inv;
                           }
                         });
}

template <typename T>
Var<T> mask_rows(const Var<T>& x, const Tensor<T>& mask) {
  require_rank("mask_rows", x, 2);
  const std::size_t len = x.shape()[0], d = x.shape()[1];
  if (mask.rank() != 1 || mask.dim(0) != len) dimension_error("mask_rows", x.shape(), mask.shape());
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (std::size_t r = 0; r < len; ++r) {
    if (mask[r] != T{0}) continue;
    std::fill_n(out.data().data() + r * d, d, T{0});
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, d, mask = mask.storage()](Tape<T>& tape, std::span<const T> g) {
    std::span<T> dX = tape.grad(ix);
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask[r] == T{0}) continue;
      for (std::size_t j = 0; j < d; ++j) dX[r * d + j] += g[r * d + j];
    }
  });
}

template <typename T>
Var<T> mask_keys(const Var<T>& scores, const Tensor<T>& mask) {
  require_rank("mask_keys", scores, 2);
  const std::size_t m = scores.shape()[0], len = scores.shape()[1];
  if (mask.rank() != 1 || mask.dim(0) != len) dimension_error("mask_keys", scores.shape(), mask.shape());
  Tensor<T> out = scores.value();
  out.set_requires_grad(false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < len; ++j) {
      if (mask[j] == T{0}) out[i * len + j] += T(-1e9);
    }
  }
  const std::size_t is = scores.id();
  return scores.tape().record(std::move(out), {is},
                              [is](Tape<T>& tape, std::span<const T> g) { accumulate(tape, is, g); });
}

template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& xs) {
  if (xs.empty()) fail(ErrorKind::kContract, "concat_last: no operands");
  const Shape& first = xs.front().shape();
  if (first.empty()) dimension_error("concat_last", first, first);
  const Shape lead(first.begin(), first.end() - 1);
  const std::size_t rows = shape_size(lead);
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var<T>& x : xs) {
    same_tape(xs.front(), x);
    const Shape& s = x.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      dimension_error("concat_last", first, s);
    }
    widths.push_back(s.back());
    ids.push_back(x.id());
    total += s.back();
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor<T> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const std::span<const T> src = xs[p].value().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.data() + r * widths[p], widths[p], out.data().data() + r * total + offset);
    }
    offset += widths[p];
  }
  return xs.front().tape().record(
      std::move(out), ids, [ids, widths, rows, total](Tape<T>& tape, std::span<const T> g) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (tape.needs_grad(ids[p])) {
            std::span<T> dst = tape.grad(ids[p]);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < widths[p]; ++j) dst[r * widths[p] + j] += g[r * total + off + j];
            }
          }
          off += widths[p];
        }
      });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (shape_size(shape) != x.size()) dimension_error("reshape", x.shape(), shape);
  Tensor<T> out(std::move(shape), x.value().storage());
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix},
                         [ix](Tape<T>& tape, std::span<const T> g) { accumulate(tape, ix, g); });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total{0};
  for (const T v : x.value().data()) total += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor<T>::scalar(total), {ix}, [ix](Tape<T>& tape, std::span<const T> g) {
    std::span<T> dX = tape.grad(ix);
    for (T& v : dX) v += g[0];
  });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Tensor<T>& target) {
  const std::size_t n = pred.size();
  if (n == 0 || target.size() != n) dimension_error("mse_loss", pred.shape(), target.shape());
  std::vector<T> diff(n);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = pred.value()[i] - target[i];
    total += diff[i] * diff[i];
  }
  const T inv_n = T{1} / static_cast<T>(n);
  const std::size_t ip = pred.id();
  return pred.tape().record(Tensor<T>::scalar(total * inv_n), {ip},
                            [ip, inv_n, diff = std::move(diff)](Tape<T>& tape, std::span<const T> g) {
                              std::span<T> dP = tape.grad(ip);
                              for (std::size_t i = 0; i < diff.size(); ++i) {
                                dP[i] += T{2} * diff[i] * inv_n * g[0];
                              }
                            });
}

template <typename T>
Var<T> dropout(const Var<T>& x, T rate, std::uint64_t seed, bool training) {
  if (rate < T{0} || rate >= T{1}) fail(ErrorKind::kConfig, "dropout rate must lie in [0, 1)");
  if (!training || rate == T{0}) return x;
  const T keep_scale = T{1} / (T{1} - rate);
  std::vector<T> factor(x.size());
  for (std::size_t i = 0; i < factor.size(); ++i) {
    factor[i] = unit_interval(mix64(seed ^ mix64(i))) < static_cast<double>(rate) ? T{0} : keep_scale;
  }
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (std::size_t i = 0; i < factor.size(); ++i) out[i] *= factor[i];
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix},
                         [ix, factor = std::move(factor)](Tape<T>& tape, std::span<const T> g) {
                           std::span<T> dX = tape.grad(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) dX[i] += factor[i] * g[i];
                         });
}

#define DUADEEP_INSTANTIATE_OPS(T)                                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                             \
  template Var<T> transpose(const Var<T>&);                                         \
  template Var<T> add(const Var<T>&, const Var<T>&);                                \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                \
  template Var<T> add_bias(const Var<T>&, const Var<T>&);                           \
  template Var<T> scale(const Var<T>&, T);                                          \
  template Var<T> relu(const Var<T>&);                                              \
  template Var<T> softmax_rows(const Var<T>&);                                      \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);       \
  template Var<T> conv1d_same(const Var<T>&, const Var<T>&, const Var<T>&);         \
  template Var<T> masked_mean_rows(const Var<T>&, const Tensor<T>&);                \
  template Var<T> mask_rows(const Var<T>&, const Tensor<T>&);                       \
  template Var<T> mask_keys(const Var<T>&, const Tensor<T>&);                       \
  template Var<T> concat_last(const std::vector<Var<T>>&);                          \
  template Var<T> reshape(const Var<T>&, Shape);                                    \
  template Var<T> sum(const Var<T>&);                                               \
  template Var<T> mse_loss(const Var<T>&, const Tensor<T>&);                        \
  template Var<T> dropout(const Var<T>&, T, std::uint64_t, bool);

DUADEEP_INSTANTIATE_OPS(float)
DUADEEP_INSTANTIATE_OPS(double)
DUADEEP_INSTANTIATE_OPS(long double)

#undef DUADEEP_INSTANTIATE_OPS

}  // namespace duadeep::ops
