// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace gafx::ops {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
ConstMatMap<T> cmat(const std::vector<T>& v, std::size_t rows, std::size_t cols) {
  return ConstMatMap<T>(v.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}
template <typename T>
MatMap<T> mmat(std::vector<T>& v, std::size_t rows, std::size_t cols) {
  return MatMap<T>(v.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const char* op, const Tensor<T>& x, std::size_t rank) {
  if (x.dim() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " + shape_str(x.shape()));
  }
}

// Splits a shape around `axis` into (outer, n, inner).
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

template <typename T>
AxisSplit split_at(const char* op, const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.dim()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(x.shape()));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= x.shape()[i];
  s.n = x.shape()[axis];
  for (std::size_t i = axis + 1; i < x.dim(); ++i) s.inner *= x.shape()[i];
  return s;
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const char* op, const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  const auto& xd = x.node()->data;
  std::vector<T> y(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) y[i] = fwd(xd[i]);
  auto out = detail::make_output<T>(op, x.shape(), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    std::weak_ptr<detail::Node<T>> on = out.node();
    detail::attach<T>(out, {&x}, [xn, on, deriv](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      auto o = on.lock();
      for (std::size_t i = 0; i < gy.size(); ++i) {
        (*gx)[i] += gy[i] * deriv(xn->data[i], o->data[i]);
      }
    });
  }
  return out;
}

// im2col for a [C, H, W] input and a (kh, kw, sh, sw, pt, pl) geometry with
// output extents (oh, ow). Rows are (c, i, j), columns (y, x).
template <typename T>
void im2col(const T* x, std::size_t C, std::size_t H, std::size_t W,
            std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw,
            std::size_t pt, std::size_t pl, std::size_t oh, std::size_t ow,
            T* cols) {
  const std::size_t ncols = oh * ow;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        T* row = cols + ((c * kh + i) * kw + j) * ncols;
        for (std::size_t y = 0; y < oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * sh + i) -
                                    static_cast<std::ptrdiff_t>(pt);
          T* dst = row + y * ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = x + (c * H + static_cast<std::size_t>(iy)) * W;
          for (std::size_t xo = 0; xo < ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * sw + j) -
                                      static_cast<std::ptrdiff_t>(pl);
            dst[xo] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W))
                          ? T(0)
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back into a [C, H, W] buffer.
template <typename T>
void col2im(const T* cols, std::size_t C, std::size_t H, std::size_t W,
            std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw,
            std::size_t pt, std::size_t pl, std::size_t oh, std::size_t ow,
            T* x) {
  const std::size_t ncols = oh * ow;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        const T* row = cols + ((c * kh + i) * kw + j) * ncols;
        for (std::size_t y = 0; y < oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * sh + i) -
                                    static_cast<std::ptrdiff_t>(pt);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          const T* src = row + y * ow;
          T* dst = x + (c * H + static_cast<std::size_t>(iy)) * W;
          for (std::size_t xo = 0; xo < ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * sw + j) -
                                      static_cast<std::ptrdiff_t>(pl);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            dst[static_cast<std::size_t>(ix)] += src[xo];
          }
        }
      }
    }
  }
}

struct ConvDims {
  std::size_t C, H, W, O, kh, kw, sh, sw, pt, pl, oh, ow;
  bool pointwise() const {
    return kh == 1 && kw == 1 && sh == 1 && sw == 1 && pt == 0 && pl == 0 &&
           oh == H && ow == W;
  }
};

template <typename T>
Tensor<T> conv_impl(const char* op, const Tensor<T>& x, const Tensor<T>& w,
                    const Tensor<T>& b, const ConvDims& d, Shape out_shape) {
  const std::size_t K = d.C * d.kh * d.kw;
  const std::size_t N = d.oh * d.ow;
  std::vector<T> cols;
  const bool direct = d.pointwise();
  if (!direct) {
    cols.resize(K * N);
    im2col(x.node()->data.data(), d.C, d.H, d.W, d.kh, d.kw, d.sh, d.sw, d.pt,
           d.pl, d.oh, d.ow, cols.data());
  }
  const auto& colsref = direct ? x.node()->data : cols;
  std::vector<T> y(d.O * N);
  auto Y = mmat(y, d.O, N);
  Y.noalias() = cmat(w.node()->data, d.O, K) * cmat(colsref, K, N);
  if (b.defined()) {
    const auto& bd = b.node()->data;
    for (std::size_t o = 0; o < d.O; ++o) Y.row(o).array() += bd[o];
  }
  auto out = detail::make_output<T>(op, std::move(out_shape), std::move(y));
  if (detail::needs_grad<T>({&x, &w, &b})) {
    auto xn = x.node(), wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    detail::attach<T>(out, {&x, &w, &b},
                      [xn, wn, bn, d, K, N, direct,
                       cols = std::move(cols)](const std::vector<T>& gy) {
                        auto GY = cmat(gy, d.O, N);
                        const auto& cref = direct ? xn->data : cols;
                        if (auto* gw = detail::grad_sink(wn)) {
                          mmat(*gw, d.O, K).noalias() +=
                              GY * cmat(cref, K, N).transpose();
                        }
                        if (auto* gb = detail::grad_sink(bn)) {
                          // Plain loop: Eigen's vectorized sum depends on the row's alignment.
                          for (std::size_t o = 0; o < d.O; ++o) {
                            T acc = 0;
                            for (std::size_t n = 0; n < N; ++n) acc += gy[o * N + n];
                            (*gb)[o] += acc;
                          }
                        }
                        if (auto* gx = detail::grad_sink(xn)) {
                          if (direct) {
                            mmat(*gx, K, N).noalias() +=
                                cmat(wn->data, d.O, K).transpose() * GY;
                          } else {
                            std::vector<T> gcols(K * N);
                            mmat(gcols, K, N).noalias() =
                                cmat(wn->data, d.O, K).transpose() * GY;
                            col2im(gcols.data(), d.C, d.H, d.W, d.kh, d.kw,
                                   d.sh, d.sw, d.pt, d.pl, d.oh, d.ow,
                                   gx->data());
                          }
                        }
                      });
  }
  return out;
}

// Transposed convolution with conv geometry d: the "input" of d (C, H, W) is
// the transposed output and (oh, ow) the transposed input.
template <typename T>
Tensor<T> conv_transpose_impl(const char* op, const Tensor<T>& x,
                              const Tensor<T>& w, const Tensor<T>& b,
                              const ConvDims& d, Shape out_shape) {
  // Here d.C is the channel count of the output, d.O of the input.
  const std::size_t K = d.C * d.kh * d.kw;
  const std::size_t N = d.oh * d.ow;
  std::vector<T> cols(K * N);
  mmat(cols, K, N).noalias() =
      cmat(w.node()->data, d.O, K).transpose() * cmat(x.node()->data, d.O, N);
  std::vector<T> y(d.C * d.H * d.W, T(0));
  col2im(cols.data(), d.C, d.H, d.W, d.kh, d.kw, d.sh, d.sw, d.pt, d.pl, d.oh,
         d.ow, y.data());
  cols.clear();
  cols.shrink_to_fit();
  if (b.defined()) {
    const auto& bd = b.node()->data;
    const std::size_t plane = d.H * d.W;
    for (std::size_t c = 0; c < d.C; ++c) {
      for (std::size_t i = 0; i < plane; ++i) y[c * plane + i] += bd[c];
    }
  }
  auto out = detail::make_output<T>(op, std::move(out_shape), std::move(y));
  if (detail::needs_grad<T>({&x, &w, &b})) {
    auto xn = x.node(), wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    detail::attach<T>(out, {&x, &w, &b},
                      [xn, wn, bn, d, K, N](const std::vector<T>& gy) {
                        std::vector<T> gcols(K * N);
                        im2col(gy.data(), d.C, d.H, d.W, d.kh, d.kw, d.sh,
                               d.sw, d.pt, d.pl, d.oh, d.ow, gcols.data());
                        auto GC = cmat(gcols, K, N);
                        if (auto* gx = detail::grad_sink(xn)) {
                          mmat(*gx, d.O, N).noalias() +=
                              cmat(wn->data, d.O, K) * GC;
                        }
                        if (auto* gw = detail::grad_sink(wn)) {
                          mmat(*gw, d.O, K).noalias() +=
                              cmat(xn->data, d.O, N) * GC.transpose();
                        }
                        if (auto* gb = detail::grad_sink(bn)) {
                          const std::size_t plane = d.H * d.W;
                          for (std::size_t c = 0; c < d.C; ++c) {
                            T s = 0;
                            for (std::size_t i = 0; i < plane; ++i)
                              s += gy[c * plane + i];
                            (*gb)[c] += s;
                          }
                        }
                      });
  }
  return out;
}

template <typename T>
void check_bias(const char* op, const Tensor<T>& b, std::size_t channels) {
  if (b.defined() && (b.dim() != 1 || b.extent(0) != channels)) {
    throw DimensionError(std::string(op) + ": bias shape " +
                         shape_str(b.shape()) + " does not match " +
                         std::to_string(channels) + " channels");
  }
}

}  // namespace

std::size_t conv_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                        std::size_t pad_total) {
  if (stride == 0) throw DimensionError("stride must be positive");
  if (kernel == 0 || kernel > in + pad_total) {
    throw DimensionError("kernel " + std::to_string(kernel) +
                         " larger than padded input " +
                         std::to_string(in + pad_total));
  }
  return (in + pad_total - kernel) / stride + 1;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  const auto &ad = a.node()->data, &bd = b.node()->data;
  std::vector<T> y(ad.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] + bd[i];
  auto out = detail::make_output<T>("add", a.shape(), std::move(y));
  if (detail::needs_grad<T>({&a, &b})) {
    auto an = a.node(), bn = b.node();
    detail::attach<T>(out, {&a, &b}, [an, bn](const std::vector<T>& gy) {
      if (auto* ga = detail::grad_sink(an))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
      if (auto* gb = detail::grad_sink(bn))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  const auto &ad = a.node()->data, &bd = b.node()->data;
  std::vector<T> y(ad.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] - bd[i];
  auto out = detail::make_output<T>("sub", a.shape(), std::move(y));
  if (detail::needs_grad<T>({&a, &b})) {
    auto an = a.node(), bn = b.node();
    detail::attach<T>(out, {&a, &b}, [an, bn](const std::vector<T>& gy) {
      if (auto* ga = detail::grad_sink(an))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
      if (auto* gb = detail::grad_sink(bn))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] -= gy[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  const auto &ad = a.node()->data, &bd = b.node()->data;
  std::vector<T> y(ad.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] * bd[i];
  auto out = detail::make_output<T>("mul", a.shape(), std::move(y));
  if (detail::needs_grad<T>({&a, &b})) {
    auto an = a.node(), bn = b.node();
    detail::attach<T>(out, {&a, &b}, [an, bn](const std::vector<T>& gy) {
      if (auto* ga = detail::grad_sink(an))
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bn->data[i];
      if (auto* gb = detail::grad_sink(bn))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * an->data[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  return unary<T>(
      "scale", a, [f](T v) { return v * f; }, [f](T, T) { return f; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, double value) {
  const T c = static_cast<T>(value);
  return unary<T>(
      "add_scalar", a, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      "relu", x, [](T v) { return v < T(0) ? T(0) : v; },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  return unary<T>(
      "gelu", x,
      [](T v) {
        return static_cast<T>(0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)));
      },
      [](T v, T) {
        const double dv = v;
        const double cdf = 0.5 * (1.0 + std::erf(dv / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * dv * dv) /
                           std::sqrt(2.0 * std::numbers::pi);
        return static_cast<T>(cdf + dv * pdf);
      });
}

namespace {
template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}
}  // namespace

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      "sigmoid", x, [](T v) { return sigmoid_scalar(v); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary<T>(
      "tanh", x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> glu(const Tensor<T>& x, std::size_t axis) {
  const auto s = split_at("glu", x, axis);
  if (s.n % 2 != 0) {
    throw DimensionError("glu: axis extent " + std::to_string(s.n) + " is odd");
  }
  const std::size_t half = s.n / 2;
  Shape shape = x.shape();
  shape[axis] = half;
  const auto& xd = x.node()->data;
  std::vector<T> y(s.outer * half * s.inner);
  std::vector<T> gate(y.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < half; ++j) {
      const T* a = &xd[(o * s.n + j) * s.inner];
      const T* b = &xd[(o * s.n + j + half) * s.inner];
      T* dst = &y[(o * half + j) * s.inner];
      T* g = &gate[(o * half + j) * s.inner];
      for (std::size_t i = 0; i < s.inner; ++i) {
        g[i] = sigmoid_scalar(b[i]);
        dst[i] = a[i] * g[i];
      }
    }
  }
  auto out = detail::make_output<T>("glu", std::move(shape), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, s, half, gate = std::move(gate)](
                                     const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < half; ++j) {
          const std::size_t ai = (o * s.n + j) * s.inner;
          const std::size_t bi = (o * s.n + j + half) * s.inner;
          const std::size_t yi = (o * half + j) * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i) {
            const T g = gate[yi + i];
            const T a = xn->data[ai + i];
            (*gx)[ai + i] += gy[yi + i] * g;
            (*gx)[bi + i] += gy[yi + i] * a * g * (T(1) - g);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t D = x.shape().back();
  const std::size_t rows = x.numel() / D;
  const auto& xd = x.node()->data;
  std::vector<T> y(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = &xd[r * D];
    T* dst = &y[r * D];
    const T mx = *std::max_element(src, src + D);
    T total = 0;
    for (std::size_t i = 0; i < D; ++i) {
      dst[i] = std::exp(src[i] - mx);
      total += dst[i];
    }
    for (std::size_t i = 0; i < D; ++i) dst[i] /= total;
  }
  auto out = detail::make_output<T>("softmax", x.shape(), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    std::weak_ptr<detail::Node<T>> on = out.node();
    detail::attach<T>(out, {&x}, [xn, on, D, rows](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      const auto& yd = on.lock()->data;
      for (std::size_t r = 0; r < rows; ++r) {
        T dot = 0;
        for (std::size_t i = 0; i < D; ++i) dot += gy[r * D + i] * yd[r * D + i];
        for (std::size_t i = 0; i < D; ++i)
          (*gx)[r * D + i] += yd[r * D + i] * (gy[r * D + i] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps) {
  const std::size_t D = x.shape().back();
  const std::size_t rows = x.numel() / D;
  if (gamma.defined() && gamma.numel() != D) {
    throw DimensionError("layer_norm: gamma size " + std::to_string(gamma.numel()) +
                         " != " + std::to_string(D));
  }
  if (beta.defined() && beta.numel() != D) {
    throw DimensionError("layer_norm: beta size " + std::to_string(beta.numel()) +
                         " != " + std::to_string(D));
  }
  const auto& xd = x.node()->data;
  std::vector<T> xhat(xd.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = &xd[r * D];
    double m = 0;
    for (std::size_t i = 0; i < D; ++i) m += src[i];
    m /= static_cast<double>(D);
    double v = 0;
    for (std::size_t i = 0; i < D; ++i) v += (src[i] - m) * (src[i] - m);
    v /= static_cast<double>(D);
    const double is = 1.0 / std::sqrt(v + eps);
    inv_std[r] = static_cast<T>(is);
    for (std::size_t i = 0; i < D; ++i)
      xhat[r * D + i] = static_cast<T>((src[i] - m) * is);
  }
  std::vector<T> y = xhat;
  if (gamma.defined() || beta.defined()) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < D; ++i) {
        T v = y[r * D + i];
        if (gamma.defined()) v *= gamma.node()->data[i];
        if (beta.defined()) v += beta.node()->data[i];
        y[r * D + i] = v;
      }
    }
  }
  auto out = detail::make_output<T>("layer_norm", x.shape(), std::move(y));
  if (detail::needs_grad<T>({&x, &gamma, &beta})) {
    auto xn = x.node();
    auto gn = gamma.defined() ? gamma.node() : nullptr;
    auto bn = beta.defined() ? beta.node() : nullptr;
    detail::attach<T>(out, {&x, &gamma, &beta},
                      [xn, gn, bn, D, rows, xhat = std::move(xhat),
                       inv_std = std::move(inv_std)](const std::vector<T>& gy) {
                        if (auto* gg = detail::grad_sink(gn)) {
                          for (std::size_t k = 0; k < gy.size(); ++k)
                            (*gg)[k % D] += gy[k] * xhat[k];
                        }
                        if (auto* gb = detail::grad_sink(bn)) {
                          for (std::size_t k = 0; k < gy.size(); ++k)
                            (*gb)[k % D] += gy[k];
                        }
                        auto* gx = detail::grad_sink(xn);
                        if (!gx) return;
                        std::vector<T> gxh(D);
                        for (std::size_t r = 0; r < rows; ++r) {
                          double s1 = 0, s2 = 0;
                          for (std::size_t i = 0; i < D; ++i) {
                            T g = gy[r * D + i];
                            if (gn) g *= gn->data[i];
                            gxh[i] = g;
                            s1 += g;
                            s2 += g * xhat[r * D + i];
                          }
                          const double inv_d = 1.0 / static_cast<double>(D);
                          for (std::size_t i = 0; i < D; ++i) {
                            (*gx)[r * D + i] += static_cast<T>(
                                inv_std[r] * (gxh[i] - s1 * inv_d -
                                              xhat[r * D + i] * s2 * inv_d));
                          }
                        }
                      });
  }
  return out;
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, bool training, double momentum,
                     double eps) {
  if (x.dim() < 2) throw DimensionError("batch_norm: need [C, ...], got " + shape_str(x.shape()));
  const std::size_t C = x.extent(0);
  const std::size_t M = x.numel() / C;
  const Tensor<T>* per_channel[] = {&gamma, &beta, &running_mean, &running_var};
  for (const Tensor<T>* t : per_channel) {
    if (t->defined() && t->numel() != C) {
      throw DimensionError("batch_norm: per-channel tensor size " +
                           std::to_string(t->numel()) + " != " + std::to_string(C));
    }
  }
  if (!running_mean.defined() || !running_var.defined()) {
    throw ContractError("batch_norm: running statistics are required");
  }
  const auto& xd = x.node()->data;
  std::vector<T> xhat(xd.size());
  std::vector<T> inv_std(C);
  auto rm = running_mean.mutable_data();
  auto rv = running_var.mutable_data();
  for (std::size_t c = 0; c < C; ++c) {
    const T* src = &xd[c * M];
    double m, v;
    if (training) {
      m = 0;
      for (std::size_t i = 0; i < M; ++i) m += src[i];
      m /= static_cast<double>(M);
      v = 0;
      for (std::size_t i = 0; i < M; ++i) v += (src[i] - m) * (src[i] - m);
      v /= static_cast<double>(M);
      const double unbiased = M > 1 ? v * M / (M - 1) : v;
      rm[c] = static_cast<T>((1 - momentum) * rm[c] + momentum * m);
      rv[c] = static_cast<T>((1 - momentum) * rv[c] + momentum * unbiased);
    } else {
      m = rm[c];
      v = rv[c];
    }
    const double is = 1.0 / std::sqrt(v + eps);
    inv_std[c] = static_cast<T>(is);
    for (std::size_t i = 0; i < M; ++i) xhat[c * M + i] = static_cast<T>((src[i] - m) * is);
  }
  std::vector<T> y(xd.size());
  for (std::size_t c = 0; c < C; ++c) {
    const T g = gamma.defined() ? gamma.node()->data[c] : T(1);
    const T b = beta.defined() ? beta.node()->data[c] : T(0);
    for (std::size_t i = 0; i < M; ++i) y[c * M + i] = xhat[c * M + i] * g + b;
  }
  auto out = detail::make_output<T>("batch_norm", x.shape(), std::move(y));
  if (detail::needs_grad<T>({&x, &gamma, &beta})) {
    auto xn = x.node();
    auto gn = gamma.defined() ? gamma.node() : nullptr;
    auto bn = beta.defined() ? beta.node() : nullptr;
    detail::attach<T>(out, {&x, &gamma, &beta},
                      [xn, gn, bn, C, M, training, xhat = std::move(xhat),
                       inv_std = std::move(inv_std)](const std::vector<T>& gy) {
                        auto* gg = detail::grad_sink(gn);
                        auto* gb = detail::grad_sink(bn);
                        auto* gx = detail::grad_sink(xn);
                        for (std::size_t c = 0; c < C; ++c) {
                          double s1 = 0, s2 = 0;
                          for (std::size_t i = 0; i < M; ++i) {
                            s1 += gy[c * M + i];
                            s2 += gy[c * M + i] * xhat[c * M + i];
                          }
                          if (gg) (*gg)[c] += static_cast<T>(s2);
                          if (gb) (*gb)[c] += static_cast<T>(s1);
                          if (!gx) continue;
                          const double g = gn ? gn->data[c] : 1.0;
                          if (training) {
                            const double inv_m = 1.0 / static_cast<double>(M);
                            for (std::size_t i = 0; i < M; ++i) {
                              (*gx)[c * M + i] += static_cast<T>(
                                  g * inv_std[c] *
                                  (gy[c * M + i] - s1 * inv_m -
                                   xhat[c * M + i] * s2 * inv_m));
                            }
                          } else {
                            for (std::size_t i = 0; i < M; ++i)
                              (*gx)[c * M + i] +=
                                  static_cast<T>(g * inv_std[c] * gy[c * M + i]);
                          }
                        }
                      });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, const Pool2d& p) {
  require_rank("max_pool2d", x, 3);
  const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
  const std::size_t oh = conv_extent(H, p.kernel_h, p.stride_h, 2 * p.pad_h);
  const std::size_t ow = conv_extent(W, p.kernel_w, p.stride_w, 2 * p.pad_w);
  const auto& xd = x.node()->data;
  std::vector<T> y(C * oh * ow);
  std::vector<std::size_t> arg(y.size());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t a = 0; a < p.kernel_h; ++a) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(i * p.stride_h + a) -
                                    static_cast<std::ptrdiff_t>(p.pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t b = 0; b < p.kernel_w; ++b) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(j * p.stride_w + b) -
                                      static_cast<std::ptrdiff_t>(p.pad_w);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            const std::size_t idx = (c * H + iy) * W + ix;
            if (!found || xd[idx] > best) {
              best = xd[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        if (!found) throw DimensionError("max_pool2d: window entirely in padding");
        y[(c * oh + i) * ow + j] = best;
        arg[(c * oh + i) * ow + j] = best_idx;
      }
    }
  }
  auto out = detail::make_output<T>("max_pool2d", {C, oh, ow}, std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, arg = std::move(arg)](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t k = 0; k < gy.size(); ++k) (*gx)[arg[k]] += gy[k];
    });
  }
  return out;
}

namespace {
template <typename T>
Tensor<T> reduce_axis(const char* op, const Tensor<T>& x, std::size_t axis,
                      bool average) {
  const auto s = split_at(op, x, axis);
  Shape shape;
  for (std::size_t i = 0; i < x.dim(); ++i)
    if (i != axis) shape.push_back(x.shape()[i]);
  if (shape.empty()) shape.push_back(1);
  const auto& xd = x.node()->data;
  std::vector<T> y(s.outer * s.inner, T(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      const T* src = &xd[(o * s.n + j) * s.inner];
      T* dst = &y[o * s.inner];
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  const T n = static_cast<T>(s.n);
  if (average)
    for (auto& v : y) v /= n;
  auto out = detail::make_output<T>(op, std::move(shape), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, s, average, n](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.n; ++j) {
          T* dst = &(*gx)[(o * s.n + j) * s.inner];
          const T* src = &gy[o * s.inner];
          for (std::size_t i = 0; i < s.inner; ++i)
            dst[i] += average ? src[i] / n : src[i];
        }
      }
    });
  }
  return out;
}
}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& x, std::size_t axis) {
  return reduce_axis<T>("sum", x, axis, false);
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis) {
  return reduce_axis<T>("mean", x, axis, true);
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  return reduce_axis<T>("sum_all", reshape(x, {x.numel()}), 0, false);
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return reduce_axis<T>("mean_all", reshape(x, {x.numel()}), 0, true);
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t M = a.extent(0), K = a.extent(1), N = b.extent(1);
  if (b.extent(0) != K) {
    throw DimensionError("matmul: inner extents differ " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  std::vector<T> y(M * N);
  mmat(y, M, N).noalias() = cmat(a.node()->data, M, K) * cmat(b.node()->data, K, N);
  auto out = detail::make_output<T>("matmul", {M, N}, std::move(y));
  if (detail::needs_grad<T>({&a, &b})) {
    auto an = a.node(), bn = b.node();
    detail::attach<T>(out, {&a, &b}, [an, bn, M, K, N](const std::vector<T>& gy) {
      auto GY = cmat(gy, M, N);
      if (auto* ga = detail::grad_sink(an))
        mmat(*ga, M, K).noalias() += GY * cmat(bn->data, K, N).transpose();
      if (auto* gb = detail::grad_sink(bn))
        mmat(*gb, K, N).noalias() += cmat(an->data, M, K).transpose() * GY;
    });
  }
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank("linear", x, 2);
  require_rank("linear", weight, 2);
  const std::size_t M = x.extent(0), I = x.extent(1), O = weight.extent(0);
  if (weight.extent(1) != I) {
    throw DimensionError("linear: input " + shape_str(x.shape()) +
                         " incompatible with weight " + shape_str(weight.shape()));
  }
  check_bias("linear", bias, O);
  std::vector<T> y(M * O);
  auto Y = mmat(y, M, O);
  Y.noalias() = cmat(x.node()->data, M, I) * cmat(weight.node()->data, O, I).transpose();
  if (bias.defined()) {
    const auto& bd = bias.node()->data;
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t o = 0; o < O; ++o) y[m * O + o] += bd[o];
  }
  auto out = detail::make_output<T>("linear", {M, O}, std::move(y));
  if (detail::needs_grad<T>({&x, &weight, &bias})) {
    auto xn = x.node(), wn = weight.node();
    auto bn = bias.defined() ? bias.node() : nullptr;
    detail::attach<T>(out, {&x, &weight, &bias},
                      [xn, wn, bn, M, I, O](const std::vector<T>& gy) {
                        auto GY = cmat(gy, M, O);
                        if (auto* gx = detail::grad_sink(xn))
                          mmat(*gx, M, I).noalias() += GY * cmat(wn->data, O, I);
                        if (auto* gw = detail::grad_sink(wn))
                          mmat(*gw, O, I).noalias() +=
                              GY.transpose() * cmat(xn->data, M, I);
                        if (auto* gb = detail::grad_sink(bn)) {
                          for (std::size_t m = 0; m < M; ++m)
                            for (std::size_t o = 0; o < O; ++o)
                              (*gb)[o] += gy[m * O + o];
                        }
                      });
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank("transpose", x, 2);
  return permute(x, {1, 0});
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.dim();
  if (axes.size() != r) throw DimensionError("permute: axis count mismatch");
  std::vector<bool> used(r, false);
  for (auto a : axes) {
    if (a >= r || used[a]) throw DimensionError("permute: invalid axis list");
    used[a] = true;
  }
  Shape shape(r);
  for (std::size_t i = 0; i < r; ++i) shape[i] = x.shape()[axes[i]];
  // Source stride for each output axis.
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * x.shape()[i];
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) stride[i] = in_stride[axes[i]];
  const std::size_t n = x.numel();
  std::vector<std::size_t> src_index(n);
  {
    std::vector<std::size_t> idx(r, 0);
    std::size_t off = 0;
    for (std::size_t k = 0; k < n; ++k) {
      src_index[k] = off;
      for (std::size_t i = r; i-- > 0;) {
        ++idx[i];
        off += stride[i];
        if (idx[i] < shape[i]) break;
        off -= stride[i] * shape[i];
        idx[i] = 0;
      }
    }
  }
  const auto& xd = x.node()->data;
  std::vector<T> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = xd[src_index[k]];
  auto out = detail::make_output<T>("permute", std::move(shape), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, src_index = std::move(src_index)](
                                     const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t k = 0; k < gy.size(); ++k) (*gx)[src_index[k]] += gy[k];
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  auto out = detail::make_output<T>("reshape", std::move(shape), x.node()->data);
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t k = 0; k < gy.size(); ++k) (*gx)[k] += gy[k];
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const auto& ref = parts.front();
  std::size_t total = 0;
  std::vector<AxisSplit> splits;
  for (const auto& p : parts) {
    if (p.dim() != ref.dim()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < ref.dim(); ++i) {
      if (i != axis && p.shape()[i] != ref.shape()[i]) {
        throw DimensionError("concat: " + shape_str(p.shape()) + " vs " +
                             shape_str(ref.shape()) + " along axis " +
                             std::to_string(axis));
      }
    }
    splits.push_back(split_at("concat", p, axis));
    total += splits.back().n;
  }
  Shape shape = ref.shape();
  shape[axis] = total;
  const std::size_t outer = splits.front().outer, inner = splits.front().inner;
  std::vector<T> y(outer * total * inner);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& pd = parts[p].node()->data;
    const std::size_t n = splits[p].n;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(&pd[o * n * inner], n * inner, &y[(o * total + offset) * inner]);
    }
    offset += n;
  }
  auto out = detail::make_output<T>("concat", std::move(shape), std::move(y));
  if (grad_enabled() && std::any_of(parts.begin(), parts.end(),
                                    [](const auto& p) { return p.requires_grad(); })) {
    std::vector<std::shared_ptr<detail::Node<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    detail::attach<T>(out, parts, [nodes, splits, outer, inner, total](
                                      const std::vector<T>& gy) {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        const std::size_t n = splits[p].n;
        if (auto* g = detail::grad_sink(nodes[p])) {
          for (std::size_t o = 0; o < outer; ++o) {
            const T* src = &gy[(o * total + offset) * inner];
            T* dst = &(*g)[o * n * inner];
            for (std::size_t k = 0; k < n * inner; ++k) dst[k] += src[k];
          }
        }
        offset += n;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start,
                std::size_t length) {
  const auto s = split_at("slice", x, axis);
  if (length == 0 || start + length > s.n) {
    throw DimensionError("slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") outside extent " +
                         std::to_string(s.n));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  const auto& xd = x.node()->data;
  std::vector<T> y(s.outer * length * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(&xd[(o * s.n + start) * s.inner], length * s.inner,
                &y[o * length * s.inner]);
  }
  auto out = detail::make_output<T>("slice", std::move(shape), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, s, start, length](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t o = 0; o < s.outer; ++o) {
        const T* src = &gy[o * length * s.inner];
        T* dst = &(*gx)[(o * s.n + start) * s.inner];
        for (std::size_t k = 0; k < length * s.inner; ++k) dst[k] += src[k];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> pad(const Tensor<T>& x, std::size_t axis, std::size_t before,
              std::size_t after) {
  const auto s = split_at("pad", x, axis);
  if (before == 0 && after == 0) return x;
  const std::size_t n = s.n + before + after;
  Shape shape = x.shape();
  shape[axis] = n;
  const auto& xd = x.node()->data;
  std::vector<T> y(s.outer * n * s.inner, T(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(&xd[o * s.n * s.inner], s.n * s.inner, &y[(o * n + before) * s.inner]);
  }
  auto out = detail::make_output<T>("pad", std::move(shape), std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, s, n, before](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t o = 0; o < s.outer; ++o) {
        const T* src = &gy[(o * n + before) * s.inner];
        T* dst = &(*gx)[o * s.n * s.inner];
        for (std::size_t k = 0; k < s.n * s.inner; ++k) dst[k] += src[k];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2d& g) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", weight, 4);
  ConvDims d{};
  d.C = x.extent(0);
  d.H = x.extent(1);
  d.W = x.extent(2);
  d.O = weight.extent(0);
  if (weight.extent(1) != d.C) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) +
                         " incompatible with weight " + shape_str(weight.shape()));
  }
  check_bias("conv2d", bias, d.O);
  d.kh = weight.extent(2);
  d.kw = weight.extent(3);
  d.sh = g.stride_h;
  d.sw = g.stride_w;
  d.pt = g.pad_top;
  d.pl = g.pad_left;
  d.oh = conv_extent(d.H, d.kh, d.sh, g.pad_top + g.pad_bottom);
  d.ow = conv_extent(d.W, d.kw, d.sw, g.pad_left + g.pad_right);
  return conv_impl<T>("conv2d", x, weight, bias, d, {d.O, d.oh, d.ow});
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t pad_left, std::size_t pad_right) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", weight, 3);
  ConvDims d{};
  d.C = x.extent(0);
  d.H = 1;
  d.W = x.extent(1);
  d.O = weight.extent(0);
  if (weight.extent(1) != d.C) {
    throw DimensionError("conv1d: input " + shape_str(x.shape()) +
                         " incompatible with weight " + shape_str(weight.shape()));
  }
  check_bias("conv1d", bias, d.O);
  d.kh = 1;
  d.kw = weight.extent(2);
  d.sh = 1;
  d.sw = stride;
  d.pt = 0;
  d.pl = pad_left;
  d.oh = 1;
  d.ow = conv_extent(d.W, d.kw, stride, pad_left + pad_right);
  return conv_impl<T>("conv1d", x, weight, bias, d, {d.O, d.ow});
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight,
                           const Tensor<T>& bias, const ConvTranspose2d& g) {
  require_rank("conv_transpose2d", x, 3);
  require_rank("conv_transpose2d", weight, 4);
  if (weight.extent(0) != x.extent(0)) {
    throw DimensionError("conv_transpose2d: input " + shape_str(x.shape()) +
                         " incompatible with weight " + shape_str(weight.shape()));
  }
  if (g.stride_h == 0 || g.stride_w == 0) throw DimensionError("stride must be positive");
  ConvDims d{};
  d.O = x.extent(0);
  d.oh = x.extent(1);
  d.ow = x.extent(2);
  d.C = weight.extent(1);
  d.kh = weight.extent(2);
  d.kw = weight.extent(3);
  d.sh = g.stride_h;
  d.sw = g.stride_w;
  d.pt = g.crop_top;
  d.pl = g.crop_left;
  const std::size_t full_h = (d.oh - 1) * d.sh + d.kh;
  const std::size_t full_w = (d.ow - 1) * d.sw + d.kw;
  if (g.crop_top >= full_h || g.crop_left >= full_w) {
    throw DimensionError("conv_transpose2d: crop exceeds output");
  }
  d.H = g.out_h ? g.out_h : full_h - g.crop_top;
  d.W = g.out_w ? g.out_w : full_w - g.crop_left;
  if (d.H + g.crop_top > full_h || d.W + g.crop_left > full_w) {
    throw DimensionError("conv_transpose2d: requested output " +
                         std::to_string(d.H) + "x" + std::to_string(d.W) +
                         " exceeds full extent " + std::to_string(full_h) + "x" +
                         std::to_string(full_w));
  }
  check_bias("conv_transpose2d", bias, d.C);
  return conv_transpose_impl<T>("conv_transpose2d", x, weight, bias, d,
                                {d.C, d.H, d.W});
}

template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight,
                           const Tensor<T>& bias, std::size_t stride,
                           std::size_t crop_left, std::size_t out_len) {
  require_rank("conv_transpose1d", x, 2);
  require_rank("conv_transpose1d", weight, 3);
  if (weight.extent(0) != x.extent(0)) {
    throw DimensionError("conv_transpose1d: input " + shape_str(x.shape()) +
                         " incompatible with weight " + shape_str(weight.shape()));
  }
  if (stride == 0) throw DimensionError("stride must be positive");
  ConvDims d{};
  d.O = x.extent(0);
  d.oh = 1;
  d.ow = x.extent(1);
  d.C = weight.extent(1);
  d.kh = 1;
  d.kw = weight.extent(2);
  d.sh = 1;
  d.sw = stride;
  d.pt = 0;
  d.pl = crop_left;
  const std::size_t full = (d.ow - 1) * stride + d.kw;
  if (crop_left >= full) throw DimensionError("conv_transpose1d: crop exceeds output");
  d.H = 1;
  d.W = out_len ? out_len : full - crop_left;
  if (d.W + crop_left > full) {
    throw DimensionError("conv_transpose1d: requested length " + std::to_string(d.W) +
                         " exceeds full extent " + std::to_string(full));
  }
  check_bias("conv_transpose1d", bias, d.C);
  return conv_transpose_impl<T>("conv_transpose1d", x, weight, bias, d, {d.C, d.W});
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", logits, 2);
  const std::size_t N = logits.extent(0), K = logits.extent(1);
  if (labels.size() != N) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(N) + " rows");
  }
  const auto& xd = logits.node()->data;
  std::vector<T> prob(N * K);
  double loss = 0;
  for (std::size_t n = 0; n < N; ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= K) {
      throw ContractError("softmax_cross_entropy: label " + std::to_string(labels[n]) +
                          " outside [0, " + std::to_string(K) + ")");
    }
    const T* row = &xd[n * K];
    const double mx = *std::max_element(row, row + K);
    double total = 0;
    for (std::size_t k = 0; k < K; ++k) total += std::exp(row[k] - mx);
    const double lse = mx + std::log(total);
    loss += lse - row[labels[n]];
    for (std::size_t k = 0; k < K; ++k)
      prob[n * K + k] = static_cast<T>(std::exp(row[k] - lse));
  }
  loss /= static_cast<double>(N);
  auto out = detail::make_output<T>("softmax_cross_entropy", {1},
                                    {static_cast<T>(loss)});
  if (detail::needs_grad<T>({&logits})) {
    auto xn = logits.node();
    std::vector<int> lab(labels.begin(), labels.end());
    detail::attach<T>(out, {&logits}, [xn, N, K, lab = std::move(lab),
                                       prob = std::move(prob)](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      const T s = gy[0] / static_cast<T>(N);
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
          const T onehot = static_cast<int>(k) == lab[n] ? T(1) : T(0);
          (*gx)[n * K + k] += s * (prob[n * K + k] - onehot);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape("bce_with_logits", pred, target);
  const auto &xd = pred.node()->data, &td = target.node()->data;
  double loss = 0;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    if (!(td[i] >= T(0) && td[i] <= T(1))) {
      throw ContractError("bce_with_logits: target outside [0, 1] at index " +
                          std::to_string(i));
    }
    const double x = xd[i];
    loss += std::max(x, 0.0) - x * td[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(xd.size());
  auto out = detail::make_output<T>("bce_with_logits", {1},
                                    {static_cast<T>(loss / n)});
  if (detail::needs_grad<T>({&pred})) {
    auto xn = pred.node(), tn = target.node();
    detail::attach<T>(out, {&pred}, [xn, tn, n](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      const T s = static_cast<T>(gy[0] / n);
      for (std::size_t i = 0; i < gx->size(); ++i)
        (*gx)[i] += s * (sigmoid_scalar(xn->data[i]) - tn->data[i]);
    });
  }
  return out;
}

#define GAFX_INSTANTIATE(T)                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale(const Tensor<T>&, double);                                \
  template Tensor<T> add_scalar(const Tensor<T>&, double);                           \
  template Tensor<T> relu(const Tensor<T>&);                                         \
  template Tensor<T> gelu(const Tensor<T>&);                                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                                      \
  template Tensor<T> tanh(const Tensor<T>&);                                         \
  template Tensor<T> glu(const Tensor<T>&, std::size_t);                             \
  template Tensor<T> softmax(const Tensor<T>&);                                      \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&,                  \
                                const Tensor<T>&, double);                           \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&,                  \
                                const Tensor<T>&, Tensor<T>&, Tensor<T>&, bool,      \
                                double, double);                                     \
  template Tensor<T> max_pool2d(const Tensor<T>&, const Pool2d&);                    \
  template Tensor<T> sum(const Tensor<T>&, std::size_t);                             \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                            \
  template Tensor<T> sum_all(const Tensor<T>&);                                      \
  template Tensor<T> mean_all(const Tensor<T>&);                                     \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> transpose(const Tensor<T>&);                                    \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                               \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);             \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t); \
  template Tensor<T> pad(const Tensor<T>&, std::size_t, std::size_t, std::size_t);   \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                            const Conv2d&);                                          \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                            std::size_t, std::size_t, std::size_t);                  \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&,            \
                                      const Tensor<T>&, const ConvTranspose2d&);     \
  template Tensor<T> conv_transpose1d(const Tensor<T>&, const Tensor<T>&,            \
                                      const Tensor<T>&, std::size_t, std::size_t,    \
                                      std::size_t);                                  \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);  \
  template Tensor<T> bce_with_logits(const Tensor<T>&, const Tensor<T>&);

GAFX_INSTANTIATE(float)
GAFX_INSTANTIATE(double)

#undef GAFX_INSTANTIATE

}  // namespace gafx::ops
