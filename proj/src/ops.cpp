// Copyright 2026 The regionedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "redit/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "redit/errors.hpp"

namespace redit::ag {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

CMapMat cmap(const Tensor& t) {
  return CMapMat(t.storage().data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}
MapMat map(Tensor& t) {
  return MapMat(t.storage().data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

// Parent gradient buffer, or nullptr when the parent is a constant.
Tensor* gbuf(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw ShapeError(fmt::format("{}: expected rank {}, got {}", op, rank, shape_str(v.shape())));
  }
}

template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return make_result(std::move(y), {a}, [df](Node& self) {
    Tensor* ga = gbuf(self, 0);
    if (!ga) return;
    const Tensor& x = self.parents[0]->value;
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += self.grad[i] * df(x[i], self.value[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* g = gbuf(self, k))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (Tensor* g = gbuf(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor* g = gbuf(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(const Var& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double u = c * (x + k * x * x * x);
        const double t = std::tanh(u);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
      });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_result(Tensor::scalar(s), {a}, [](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[0];
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

Var add_lastdim(const Var& x, const Var& bias) {
  require_rank(bias, 1, "add_lastdim");
  const std::size_t d = bias.value().size();
  if (x.value().rank() == 0 || x.shape().back() != d) {
    throw ShapeError(fmt::format("add_lastdim: bias {} vs input {}", d, shape_str(x.shape())));
  }
  Tensor y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias.value()[i % d];
  return make_result(std::move(y), {x, bias}, [d](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (Tensor* g = gbuf(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i % d] += self.grad[i];
  });
}

Var mul_lastdim(const Var& x, const Var& s) {
  require_rank(s, 1, "mul_lastdim");
  const std::size_t d = s.value().size();
  if (x.value().rank() == 0 || x.shape().back() != d) {
    throw ShapeError(fmt::format("mul_lastdim: scale {} vs input {}", d, shape_str(x.shape())));
  }
  Tensor y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= s.value()[i % d];
  return make_result(std::move(y), {x, s}, [d](Node& self) {
    const Tensor& xv = self.parents[0]->value;
    const Tensor& sv = self.parents[1]->value;
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * sv[i % d];
    if (Tensor* g = gbuf(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i % d] += self.grad[i] * xv[i];
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError(fmt::format("matmul: {} x {}", shape_str(a.shape()), shape_str(b.shape())));
  }
  Tensor y({a.shape()[0], b.shape()[1]});
  map(y).noalias() = cmap(a.value()) * cmap(b.value());
  return make_result(std::move(y), {a, b}, [](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    auto gy = cmap(self.grad);
    if (Tensor* g = gbuf(self, 0)) map(*g).noalias() += gy * cmap(bv).transpose();
    if (Tensor* g = gbuf(self, 1)) map(*g).noalias() += cmap(av).transpose() * gy;
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  Tensor y({a.shape()[1], a.shape()[0]});
  map(y) = cmap(a.value()).transpose();
  return make_result(std::move(y), {a}, [](Node& self) {
    if (Tensor* g = gbuf(self, 0)) map(*g) += cmap(self.grad).transpose();
  });
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_lastdim(matmul(x, w), b); }

Var softmax_rows(const Var& a) {
  require_rank(a, 2, "softmax_rows");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  Tensor y(a.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = a.value().at(i, 0);
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, a.value().at(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += (y.at(i, j) = std::exp(a.value().at(i, j) - mx));
    for (std::size_t j = 0; j < m; ++j) y.at(i, j) /= s;
  }
  return make_result(std::move(y), {a}, [n, m](Node& self) {
    Tensor* g = gbuf(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d += self.grad.at(i, j) * self.value.at(i, j);
      for (std::size_t j = 0; j < m; ++j) g->at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - d);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  require_rank(a, 2, "log_softmax_rows");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  Tensor y(a.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = a.value().at(i, 0);
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, a.value().at(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::exp(a.value().at(i, j) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < m; ++j) y.at(i, j) = a.value().at(i, j) - lse;
  }
  return make_result(std::move(y), {a}, [n, m](Node& self) {
    Tensor* g = gbuf(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < n; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < m; ++j) gs += self.grad.at(i, j);
      for (std::size_t j = 0; j < m; ++j) g->at(i, j) += self.grad.at(i, j) - std::exp(self.value.at(i, j)) * gs;
    }
  });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_rank(x, 2, "layer_norm_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (gamma.value().size() != d || beta.value().size() != d) throw ShapeError("layer_norm_rows: affine size");
  Tensor xhat(x.shape());
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += x.value().at(i, j);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x.value().at(i, j) - mu) * (x.value().at(i, j) - mu);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) xhat.at(i, j) = (x.value().at(i, j) - mu) * inv_std[i];
  }
  Tensor y(x.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) y.at(i, j) = xhat.at(i, j) * gamma.value()[j] + beta.value()[j];
  return make_result(std::move(y), {x, gamma, beta},
                     [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const Tensor& gv = self.parents[1]->value;
                       if (Tensor* gx = gbuf(self, 0)) {
                         for (std::size_t i = 0; i < n; ++i) {
                           double m1 = 0.0, m2 = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dxh = self.grad.at(i, j) * gv[j];
                             m1 += dxh;
                             m2 += dxh * xhat.at(i, j);
                           }
                           m1 /= static_cast<double>(d);
                           m2 /= static_cast<double>(d);
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dxh = self.grad.at(i, j) * gv[j];
                             gx->at(i, j) += inv_std[i] * (dxh - m1 - xhat.at(i, j) * m2);
                           }
                         }
                       }
                       if (Tensor* gg = gbuf(self, 1))
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < d; ++j) (*gg)[j] += self.grad.at(i, j) * xhat.at(i, j);
                       if (Tensor* gb = gbuf(self, 2))
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < d; ++j) (*gb)[j] += self.grad.at(i, j);
                     });
}

Var l2_normalize(const Var& v, double min_norm) {
  const Tensor& x = v.value();
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  const std::size_t d = x.rank() == 1 ? x.size() : x.dim(1);
  if (x.rank() != 1 && x.rank() != 2) throw ShapeError("l2_normalize: rank must be 1 or 2");
  Tensor y(x.shape());
  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double nrm = l2_norm(x.data().subspan(i * d, d));
    if (!(nrm > min_norm)) throw SingularityError("l2_normalize: zero-norm vector");
    norms[i] = nrm;
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] = x[i * d + j] / nrm;
  }
  return make_result(std::move(y), {v}, [rows, d, norms = std::move(norms)](Node& self) {
    Tensor* g = gbuf(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < rows; ++i) {
      double yd = 0.0;
      for (std::size_t j = 0; j < d; ++j) yd += self.value[i * d + j] * self.grad[i * d + j];
      for (std::size_t j = 0; j < d; ++j)
        (*g)[i * d + j] += (self.grad[i * d + j] - self.value[i * d + j] * yd) / norms[i];
    }
  });
}

Var mean_rows(const Var& a) {
  require_rank(a, 2, "mean_rows");
  const std::size_t n = a.shape()[0], d = a.shape()[1];
  Tensor y({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) y[j] += a.value().at(i, j);
  for (std::size_t j = 0; j < d; ++j) y[j] /= static_cast<double>(n);
  return make_result(std::move(y), {a}, [n, d](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g->at(i, j) += self.grad[j] / static_cast<double>(n);
  });
}

Var row(const Var& a, std::size_t i) {
  require_rank(a, 2, "row");
  const std::size_t d = a.shape()[1];
  if (i >= a.shape()[0]) throw RangeError("row: index out of range");
  std::vector<double> v(a.value().storage().begin() + static_cast<std::ptrdiff_t>(i * d),
                        a.value().storage().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  return make_result(Tensor::vector(std::move(v)), {a}, [i, d](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t j = 0; j < d; ++j) (*g)[i * d + j] += self.grad[j];
  });
}

Var diag(const Var& a) {
  require_rank(a, 2, "diag");
  const std::size_t n = a.shape()[0];
  if (a.shape()[1] != n) throw ShapeError("diag: matrix must be square");
  Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) y[i] = a.value().at(i, i);
  return make_result(std::move(y), {a}, [n](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < n; ++i) g->at(i, i) += self.grad[i];
  });
}

Var stack(const std::vector<Var>& rows) {
  if (rows.empty()) throw ShapeError("stack: no rows");
  const std::size_t d = rows[0].value().size();
  Tensor y({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].value().rank() != 1 || rows[i].value().size() != d) throw ShapeError("stack: row shape mismatch");
    std::copy(rows[i].value().storage().begin(), rows[i].value().storage().end(), y.storage().begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return make_result(std::move(y), rows, [d](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (Tensor* g = gbuf(self, i))
        for (std::size_t j = 0; j < d; ++j) (*g)[j] += self.grad[i * d + j];
  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t len) {
  require_rank(a, 2, "slice_cols");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (start + len > m) throw RangeError("slice_cols: out of range");
  Tensor y({n, len});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < len; ++j) y.at(i, j) = a.value().at(i, start + j);
  return make_result(std::move(y), {a}, [n, start, len](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < len; ++j) g->at(i, start + j) += self.grad.at(i, j);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const std::size_t n = parts[0].shape()[0];
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.shape()[0] != n) throw ShapeError("concat_cols: row count mismatch");
    m += p.shape()[1];
  }
  Tensor y({n, m});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[1];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) y.at(i, off + j) = p.value().at(i, j);
    off += w;
  }
  return make_result(std::move(y), parts, [n](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const std::size_t w = self.parents[k]->value.dim(1);
      if (Tensor* g = gbuf(self, k))
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) g->at(i, j) += self.grad.at(i, off + j);
      off += w;
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  return make_result(std::move(y), {a}, [](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t kernel, std::size_t dilation) {
  require_rank(x, 3, "conv2d");
  require_rank(w, 2, "conv2d");
  const std::size_t h = x.shape()[0], wd = x.shape()[1], cin = x.shape()[2];
  const std::size_t cout = w.shape()[1];
  const std::size_t kk = kernel * kernel * cin;
  if (w.shape()[0] != kk || b.value().size() != cout) {
    throw ShapeError(fmt::format("conv2d: weight {} incompatible with input {} and kernel {}",
                                 shape_str(w.shape()), shape_str(x.shape()), kernel));
  }
  const auto half = static_cast<std::ptrdiff_t>((kernel / 2) * dilation);
  const auto dil = static_cast<std::ptrdiff_t>(dilation);
  // im2col
  Tensor cols({h * wd, kk});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < wd; ++xx) {
      double* dst = &cols.at(y * wd + xx, 0);
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) * dil - half;
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const auto sx = static_cast<std::ptrdiff_t>(xx) + static_cast<std::ptrdiff_t>(kx) * dil - half;
          double* cell = dst + (ky * kernel + kx) * cin;
          if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
          const double* src = x.value().storage().data() + (static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)) * cin;
          std::copy(src, src + cin, cell);
        }
      }
    }
  }
  Tensor out({h * wd, cout});
  map(out).noalias() = cmap(cols) * cmap(w.value());
  for (std::size_t p = 0; p < h * wd; ++p)
    for (std::size_t c = 0; c < cout; ++c) out.at(p, c) += b.value()[c];
  Tensor y = out.reshaped({h, wd, cout});
  return make_result(std::move(y), {x, w, b},
                     [h, wd, cin, cout, kernel, half, dil, kk, cols = std::move(cols)](Node& self) {
                       CMapMat gy(self.grad.storage().data(), static_cast<Eigen::Index>(h * wd),
                                  static_cast<Eigen::Index>(cout));
                       if (Tensor* gw = gbuf(self, 1)) map(*gw).noalias() += cmap(cols).transpose() * gy;
                       if (Tensor* gb = gbuf(self, 2))
                         for (std::size_t p = 0; p < h * wd; ++p)
                           for (std::size_t c = 0; c < cout; ++c) (*gb)[c] += gy(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
                       Tensor* gx = gbuf(self, 0);
                       if (!gx) return;
                       Tensor dcols({h * wd, kk});
                       map(dcols).noalias() = gy * cmap(self.parents[1]->value).transpose();
                       for (std::size_t y = 0; y < h; ++y) {
                         for (std::size_t xx = 0; xx < wd; ++xx) {
                           const double* src = dcols.storage().data() + (y * wd + xx) * kk;
                           for (std::size_t ky = 0; ky < kernel; ++ky) {
                             const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) * dil - half;
                             for (std::size_t kx = 0; kx < kernel; ++kx) {
                               const auto sx = static_cast<std::ptrdiff_t>(xx) + static_cast<std::ptrdiff_t>(kx) * dil - half;
                               if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
                               double* dst = &gx->at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
                               const double* cell = src + (ky * kernel + kx) * cin;
                               for (std::size_t c = 0; c < cin; ++c) dst[c] += cell[c];
                             }
                           }
                         }
                       }
                     });
}

Var avg_pool2d(const Var& x, std::size_t k) {
  require_rank(x, 3, "avg_pool2d");
  const std::size_t h = x.shape()[0], w = x.shape()[1], c = x.shape()[2];
  if (k == 0 || h % k != 0 || w % k != 0) {
    throw ShapeError(fmt::format("avg_pool2d: {} not divisible by {}", shape_str(x.shape()), k));
  }
  const std::size_t oh = h / k, ow = w / k;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor y({oh, ow, c});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) y.at(i / k, j / k, ch) += x.value().at(i, j, ch) * inv;
  return make_result(std::move(y), {x}, [h, w, c, k, inv](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
          for (std::size_t ch = 0; ch < c; ++ch) g->at(i, j, ch) += self.grad.at(i / k, j / k, ch) * inv;
  });
}

Var crop(const Var& x, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
  require_rank(x, 3, "crop");
  const std::size_t h = x.shape()[0], w = x.shape()[1], c = x.shape()[2];
  if (!(y0 < y1 && y1 <= h && x0 < x1 && x1 <= w)) {
    throw RangeError(fmt::format("crop: box y[{},{}) x[{},{}) outside {}", y0, y1, x0, x1, shape_str(x.shape())));
  }
  Tensor y({y1 - y0, x1 - x0, c});
  for (std::size_t i = y0; i < y1; ++i)
    for (std::size_t j = x0; j < x1; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) y.at(i - y0, j - x0, ch) = x.value().at(i, j, ch);
  return make_result(std::move(y), {x}, [y0, y1, x0, x1, c](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t i = y0; i < y1; ++i)
        for (std::size_t j = x0; j < x1; ++j)
          for (std::size_t ch = 0; ch < c; ++ch) g->at(i, j, ch) += self.grad.at(i - y0, j - x0, ch);
  });
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

Var resize_bilinear(const Var& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 3, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw RangeError("resize_bilinear: target size must be positive");
  const std::size_t h = x.shape()[0], w = x.shape()[1], c = x.shape()[2];
  if (h == out_h && w == out_w) return reshape(x, x.shape());
  auto ty = bilinear_taps(h, out_h);
  auto tx = bilinear_taps(w, out_w);
  Tensor y({out_h, out_w, c});
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out_h; ++i) {
    const auto& a = ty[i];
    for (std::size_t j = 0; j < out_w; ++j) {
      const auto& b = tx[j];
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1 - b.w1) * xv.at(a.i0, b.i0, ch) + b.w1 * xv.at(a.i0, b.i1, ch);
        const double bot = (1 - b.w1) * xv.at(a.i1, b.i0, ch) + b.w1 * xv.at(a.i1, b.i1, ch);
        y.at(i, j, ch) = (1 - a.w1) * top + a.w1 * bot;
      }
    }
  }
  return make_result(std::move(y), {x}, [out_h, out_w, c, ty = std::move(ty), tx = std::move(tx)](Node& self) {
    Tensor* g = gbuf(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < out_h; ++i) {
      const auto& a = ty[i];
      for (std::size_t j = 0; j < out_w; ++j) {
        const auto& b = tx[j];
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double gy = self.grad.at(i, j, ch);
          g->at(a.i0, b.i0, ch) += gy * (1 - a.w1) * (1 - b.w1);
          g->at(a.i0, b.i1, ch) += gy * (1 - a.w1) * b.w1;
          g->at(a.i1, b.i0, ch) += gy * a.w1 * (1 - b.w1);
          g->at(a.i1, b.i1, ch) += gy * a.w1 * b.w1;
        }
      }
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  const std::size_t h = a.shape()[0], w = a.shape()[1], ca = a.shape()[2], cb = b.shape()[2];
  if (b.shape()[0] != h || b.shape()[1] != w) throw ShapeError("concat_channels: spatial mismatch");
  Tensor y({h, w, ca + cb});
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t ch = 0; ch < ca; ++ch) y[p * (ca + cb) + ch] = a.value()[p * ca + ch];
    for (std::size_t ch = 0; ch < cb; ++ch) y[p * (ca + cb) + ca + ch] = b.value()[p * cb + ch];
  }
  return make_result(std::move(y), {a, b}, [h, w, ca, cb](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (std::size_t p = 0; p < h * w; ++p)
        for (std::size_t ch = 0; ch < ca; ++ch) (*g)[p * ca + ch] += self.grad[p * (ca + cb) + ch];
    if (Tensor* g = gbuf(self, 1))
      for (std::size_t p = 0; p < h * w; ++p)
        for (std::size_t ch = 0; ch < cb; ++ch) (*g)[p * cb + ch] += self.grad[p * (ca + cb) + ca + ch];
  });
}

Var embedding_bag_mean(const Var& table, const std::vector<int>& ids) {
  require_rank(table, 2, "embedding_bag_mean");
  if (ids.empty()) throw ShapeError("embedding_bag_mean: empty id list");
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= v) throw RangeError(fmt::format("token id {} outside vocabulary of {}", id, v));
  const double inv = 1.0 / static_cast<double>(ids.size());
  Tensor y({d});
  for (int id : ids)
    for (std::size_t j = 0; j < d; ++j) y[j] += table.value().at(static_cast<std::size_t>(id), j) * inv;
  return make_result(std::move(y), {table}, [ids, d, inv](Node& self) {
    if (Tensor* g = gbuf(self, 0))
      for (int id : ids)
        for (std::size_t j = 0; j < d; ++j) g->at(static_cast<std::size_t>(id), j) += self.grad[j] * inv;
  });
}

}  // namespace redit::ag
