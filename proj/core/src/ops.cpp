#include "afecnn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace afecnn::ops {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;

using Strides = std::vector<std::size_t>;

// Strides of `in` when viewed in the index space of `out` (0 on stretched axes).
Strides broadcast_strides(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  const std::size_t pad = r - in.size();
  Strides s(r, 0);
  std::size_t stride = 1;
  for (std::size_t d = r; d-- > 0;) {
    if (d < pad) break;
    const std::size_t e = in[d - pad];
    s[d] = (e == 1 && out[d] != 1) ? 0 : stride;
    stride *= e;
  }
  return s;
}

template <class F>
void for_each_broadcast(const Shape& out, const Strides& sa, const Strides& sb, F&& f) {
  const std::size_t r = out.size();
  const std::size_t n = element_count(out);
  std::vector<std::size_t> idx(r, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, oa, ob);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < out[d]) break;
      oa -= sa[d] * out[d];
      ob -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

std::string pair_message(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b);
}

enum class BinaryKind { kAdd, kSub, kMul };

template <class T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinaryKind kind, const char* name) {
  Shape out_shape;
  try {
    out_shape = broadcast_shape(a.shape(), b.shape());
  } catch (const DimensionError&) {
    throw DimensionError(pair_message(name, a.shape(), b.shape()));
  }
  Tensor<T> out(out_shape);
  auto od = out.mutable_data();
  const auto ad = a.data();
  const auto bd = b.data();
  const bool same = a.shape() == b.shape();
  const Strides sa = broadcast_strides(a.shape(), out_shape);
  const Strides sb = broadcast_strides(b.shape(), out_shape);

  auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinaryKind::kAdd: return x + y;
      case BinaryKind::kSub: return x - y;
      case BinaryKind::kMul: return x * y;
    }
    return T(0);
  };
  if (same) {
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = apply(ad[i], bd[i]);
  } else {
    for_each_broadcast(out_shape, sa, sb,
                       [&](std::size_t i, std::size_t ia, std::size_t ib) { od[i] = apply(ad[ia], bd[ib]); });
  }
  detail::check_finite(out.data(), name);

  if (detail::should_record<T>({&a, &b})) {
    detail::record(out, [a, b, kind, same, sa, sb, out_shape](std::span<const T> g) mutable {
      const bool ga = a.requires_grad();
      const bool gb = b.requires_grad();
      std::span<T> da = ga ? a.grad_buffer() : std::span<T>{};
      std::span<T> db = gb ? b.grad_buffer() : std::span<T>{};
      const auto av = a.data();
      const auto bv = b.data();
      auto step = [&](std::size_t i, std::size_t ia, std::size_t ib) {
        switch (kind) {
          case BinaryKind::kAdd:
            if (ga) da[ia] += g[i];
            if (gb) db[ib] += g[i];
            break;
          case BinaryKind::kSub:
            if (ga) da[ia] += g[i];
            if (gb) db[ib] -= g[i];
            break;
          case BinaryKind::kMul:
            if (ga) da[ia] += g[i] * bv[ib];
            if (gb) db[ib] += g[i] * av[ia];
            break;
        }
      };
      if (same) {
        for (std::size_t i = 0; i < g.size(); ++i) step(i, i, i);
      } else {
        for_each_broadcast(out_shape, sa, sb, step);
      }
    });
  }
  return out;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t d = 0; d < r; ++d) {
    const std::size_t ea = d + a.size() >= r ? a[d + a.size() - r] : 1;
    const std::size_t eb = d + b.size() >= r ? b[d + b.size() - r] : 1;
    if (ea != eb && ea != 1 && eb != 1) throw DimensionError(pair_message("broadcast", a, b));
    out[d] = std::max(ea, eb);
  }
  return out;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kAdd, "add");
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kSub, "sub");
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kMul, "mul");
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  auto od = out.mutable_data();
  const auto ad = a.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * factor;
  if (detail::should_record<T>({&a})) {
    detail::record(out, [a, factor](std::span<const T> g) mutable {
      auto da = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
    });
  }
  return out;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw DimensionError(pair_message("matmul", a.shape(), b.shape()));
  const std::size_t m = a.extent(-2), k = a.extent(-1);
  const std::size_t kb = b.extent(-2), n = b.extent(-1);
  if (k != kb) throw DimensionError(pair_message("matmul", a.shape(), b.shape()));

  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  Shape batch;
  try {
    batch = broadcast_shape(batch_a, batch_b);
  } catch (const DimensionError&) {
    throw DimensionError(pair_message("matmul", a.shape(), b.shape()));
  }
  Strides sa = broadcast_strides(batch_a, batch);
  Strides sb = broadcast_strides(batch_b, batch);
  for (auto& s : sa) s *= m * k;
  for (auto& s : sb) s *= k * n;

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<T> out(out_shape);
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  T* od = out.mutable_data().data();
  for_each_broadcast(batch, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    MatMap<T> c(od + i * m * n, m, n);
    c.noalias() = ConstMatMap<T>(ad + ia, m, k) * ConstMatMap<T>(bd + ib, k, n);
  });
  detail::check_finite(out.data(), "matmul");

  if (detail::should_record<T>({&a, &b})) {
    detail::record(out, [a, b, batch, sa, sb, m, k, n](std::span<const T> g) mutable {
      const bool ga = a.requires_grad();
      const bool gb = b.requires_grad();
      T* da = ga ? a.grad_buffer().data() : nullptr;
      T* db = gb ? b.grad_buffer().data() : nullptr;
      const T* av = a.data().data();
      const T* bv = b.data().data();
      for_each_broadcast(batch, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        ConstMatMap<T> gc(g.data() + i * m * n, m, n);
        if (ga) MatMap<T>(da + ia, m, k).noalias() += gc * ConstMatMap<T>(bv + ib, k, n).transpose();
        if (gb) MatMap<T>(db + ib, k, n).noalias() += ConstMatMap<T>(av + ia, m, k).transpose() * gc;
      });
    });
  }
  return out;
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  if (!(slope > T(0) && slope < T(1))) {
    throw InputError("leaky_relu slope must lie in (0, 1), got " + std::to_string(slope));
  }
  Tensor<T> out(x.shape());
  auto od = out.mutable_data();
  const auto xd = x.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] >= T(0) ? xd[i] : slope * xd[i];
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x, slope](std::span<const T> g) mutable {
      auto dx = x.grad_buffer();
      const auto xv = x.data();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] >= T(0) ? g[i] : slope * g[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() == 0) throw DimensionError("softmax_rows needs at least one axis");
  const std::size_t n = x.extent(-1);
  const std::size_t rows = x.size() / n;
  Tensor<T> out(x.shape());
  auto od = out.mutable_data();
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xd.data() + r * n;
    T* y = od.data() + r * n;
    const T peak = *std::max_element(in, in + n);
    T total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(in[j] - peak);
      total += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= total;
  }
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x, y = out.clone(), n, rows](std::span<const T> g) mutable {
      auto dx = x.grad_buffer();
      const auto yv = y.data();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * n;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += g[base + j] * yv[base + j];
        for (std::size_t j = 0; j < n; ++j) dx[base + j] += yv[base + j] * (g[base + j] - dot);
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || x.rank() == 0 ||
      x.extent(-1) != weight.extent(1) || bias.extent(0) != weight.extent(0)) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t in = weight.extent(1), out_features = weight.extent(0);
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_features;
  Tensor<T> out(out_shape);

  ConstMatMap<T> xm(x.data().data(), rows, in);
  ConstMatMap<T> wm(weight.data().data(), out_features, in);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(bias.data().data(), out_features);
  MatMap<T> ym(out.mutable_data().data(), rows, out_features);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += bv;
  detail::check_finite(out.data(), "linear");

  if (detail::should_record<T>({&x, &weight, &bias})) {
    detail::record(out, [x, weight, bias, rows, in, out_features](std::span<const T> g) mutable {
      ConstMatMap<T> gm(g.data(), rows, out_features);
      if (x.requires_grad()) {
        MatMap<T>(x.grad_buffer().data(), rows, in).noalias() +=
            gm * ConstMatMap<T>(weight.data().data(), out_features, in);
      }
      if (weight.requires_grad()) {
        MatMap<T>(weight.grad_buffer().data(), out_features, in).noalias() +=
            gm.transpose() * ConstMatMap<T>(x.data().data(), rows, in);
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.grad_buffer().data(), out_features) +=
            gm.colwise().sum();
      }
    });
  }
  return out;
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw InputError("convolution stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  if (x.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1 ||
      kernels.extent(1) != x.extent(0) || kernels.extent(2) != kernels.extent(3) ||
      bias.extent(0) != kernels.extent(0)) {
    throw DimensionError("conv2d: input " + shape_string(x.shape()) + ", kernels " +
                         shape_string(kernels.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t cout = kernels.extent(0), k = kernels.extent(2);
  const std::size_t ho = conv_output_extent(h, k, stride, padding);
  const std::size_t wo = conv_output_extent(w, k, stride, padding);
  if (ho < 1 || wo < 1) {
    throw DimensionError("conv2d: output extent < 1 for input " + shape_string(x.shape()) +
                         " with padding " + std::to_string(padding));
  }
  const std::size_t patch = cin * k * k;
  const std::size_t positions = ho * wo;

  // im2col: rows index (channel, ky, kx), columns index output pixels.
  auto cols = std::make_shared<detail::AlignedVector<T>>(patch * positions, T(0));
  const T* xd = x.data().data();
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols->data() + ((c * k + ky) * k + kx) * positions;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            row[oy * wo + ox] = xd[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }

  Tensor<T> out(Shape{cout, ho, wo});
  MatMap<T> om(out.mutable_data().data(), cout, positions);
  om.noalias() = ConstMatMap<T>(kernels.data().data(), cout, patch) *
                 ConstMatMap<T>(cols->data(), patch, positions);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(bias.data().data(), cout);
  om.colwise() += bv;
  detail::check_finite(out.data(), "conv2d");

  if (detail::should_record<T>({&x, &kernels, &bias})) {
    detail::record(out, [x, kernels, bias, cols, cin, h, w, cout, k, ho, wo, stride, padding, patch,
                         positions](std::span<const T> g) mutable {
      ConstMatMap<T> gm(g.data(), cout, positions);
      if (kernels.requires_grad()) {
        MatMap<T>(kernels.grad_buffer().data(), cout, patch).noalias() +=
            gm * ConstMatMap<T>(cols->data(), patch, positions).transpose();
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.grad_buffer().data(), cout) +=
            gm.rowwise().sum();
      }
      if (x.requires_grad()) {
        RowMat<T> dcols = ConstMatMap<T>(kernels.data().data(), cout, patch).transpose() * gm;
        T* dx = x.grad_buffer().data();
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const T* row = dcols.data() + ((c * k + ky) * k + kx) * positions;
              for (std::size_t oy = 0; oy < ho; ++oy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                          static_cast<std::ptrdiff_t>(padding);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t ox = 0; ox < wo; ++ox) {
                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                            static_cast<std::ptrdiff_t>(padding);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                  dx[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] +=
                      row[oy * wo + ox];
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> maxpool2d(const Tensor<T>& x) {
  if (x.rank() != 3) throw DimensionError("maxpool2d expects [C, H, W], got " + shape_string(x.shape()));
  const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("maxpool2d needs even spatial extents, got " + shape_string(x.shape()));
  }
  const std::size_t ho = h / 2, wo = w / 2;
  Tensor<T> out(Shape{c, ho, wo});
  auto od = out.mutable_data();
  const auto xd = x.data();
  auto argmax = std::make_shared<std::vector<std::size_t>>(od.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        const std::size_t base = (ch * h + 2 * i) * w + 2 * j;
        const std::size_t window[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = window[0];
        for (std::size_t q = 1; q < 4; ++q) {
          if (xd[window[q]] > xd[best]) best = window[q];
        }
        const std::size_t o = (ch * ho + i) * wo + j;
        od[o] = xd[best];
        (*argmax)[o] = best;
      }
    }
  }
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x, argmax](std::span<const T> g) mutable {
      auto dx = x.grad_buffer();
      for (std::size_t o = 0; o < g.size(); ++o) dx[(*argmax)[o]] += g[o];
    });
  }
  return out;
}

template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw DimensionError("cross_entropy expects [batch, classes], got " + shape_string(logits.shape()));
  }
  const std::size_t batch = logits.extent(0), classes = logits.extent(1);
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  auto probs = std::make_shared<std::vector<T>>(logits.size());
  const auto ld = logits.data();
  T total = 0;
  for (std::size_t r = 0; r < batch; ++r) {
    const T* row = ld.data() + r * classes;
    const T peak = *std::max_element(row, row + classes);
    T denom = 0;
    for (std::size_t j = 0; j < classes; ++j) denom += std::exp(row[j] - peak);
    const T log_denom = std::log(denom);
    for (std::size_t j = 0; j < classes; ++j) {
      (*probs)[r * classes + j] = std::exp(row[j] - peak - log_denom);
    }
    total += -(row[labels[r]] - peak - log_denom);
  }
  Tensor<T> out = Tensor<T>::scalar(total / static_cast<T>(batch));
  if (detail::should_record<T>({&logits})) {
    std::vector<int> label_copy(labels.begin(), labels.end());
    detail::record(out, [logits, probs, label_copy, batch, classes](std::span<const T> g) mutable {
      auto dl = logits.grad_buffer();
      const T factor = g[0] / static_cast<T>(batch);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t j = 0; j < classes; ++j) {
          const T onehot = static_cast<std::size_t>(label_copy[r]) == j ? T(1) : T(0);
          dl[r * classes + j] += factor * ((*probs)[r * classes + j] - onehot);
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  const auto xd = x.data();
  T total = 0;
  for (T v : xd) total += v;
  Tensor<T> out = Tensor<T>::scalar(total);
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x](std::span<const T> g) mutable {
      for (T& v : x.grad_buffer()) v += g[0];
    });
  }
  return out;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw DimensionError("reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x](std::span<const T> g) mutable { x.accumulate_grad(g); });
  }
  return out;
}

template <class T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) throw DimensionError("permute: axis list does not match rank");
  std::vector<bool> seen(r, false);
  for (std::size_t a : axes) {
    if (a >= r || seen[a]) throw DimensionError("permute: invalid axis list");
    seen[a] = true;
  }
  Strides in_strides(r, 1);
  for (std::size_t d = r; d-- > 1;) in_strides[d - 1] = in_strides[d] * x.shape()[d];
  Shape out_shape(r);
  Strides gather(r);
  for (std::size_t d = 0; d < r; ++d) {
    out_shape[d] = x.shape()[axes[d]];
    gather[d] = in_strides[axes[d]];
  }
  Tensor<T> out(out_shape);
  auto od = out.mutable_data();
  const auto xd = x.data();
  const Strides none(r, 0);
  for_each_broadcast(out_shape, gather, none,
                     [&](std::size_t i, std::size_t src, std::size_t) { od[i] = xd[src]; });
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x, out_shape, gather, none](std::span<const T> g) mutable {
      auto dx = x.grad_buffer();
      for_each_broadcast(out_shape, gather, none,
                         [&](std::size_t i, std::size_t src, std::size_t) { dx[src] += g[i]; });
    });
  }
  return out;
}

template <class T>
Tensor<T> transpose(const Tensor<T>& x) {
  if (x.rank() < 2) throw DimensionError("transpose needs rank >= 2, got " + shape_string(x.shape()));
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(x, axes);
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw UsageError("concat of an empty list");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw DimensionError("concat needs rank >= 1");
  Shape out_shape = first;
  out_shape[0] = 0;
  for (const auto& p : parts) {
    if (p.rank() != first.size() || !std::equal(first.begin() + 1, first.end(), p.shape().begin() + 1)) {
      throw DimensionError(pair_message("concat", first, p.shape()));
    }
    out_shape[0] += p.extent(0);
  }
  std::vector<T> values;
  values.reserve(element_count(out_shape));
  for (const auto& p : parts) values.insert(values.end(), p.data().begin(), p.data().end());
  Tensor<T> out(out_shape, std::move(values));

  Tape* tape = Tape::active();
  const bool any = tape != nullptr && std::any_of(parts.begin(), parts.end(),
                                                  [](const Tensor<T>& p) { return p.requires_grad(); });
  if (any) {
    detail::record(out, [parts](std::span<const T> g) mutable {
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) p.accumulate_grad(g.subspan(offset, p.size()));
        offset += p.size();
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> time_difference(const Tensor<T>& x, T dt) {
  if (!(dt > T(0))) throw InputError("time_difference: dt must be positive");
  if (x.rank() == 0 || x.extent(-1) < 2) {
    throw DimensionError("time_difference needs at least two time steps, got " + shape_string(x.shape()));
  }
  const std::size_t steps = x.extent(-1);
  const std::size_t rows = x.size() / steps;
  Tensor<T> out(x.shape());
  auto od = out.mutable_data();
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * steps;
    for (std::size_t t = 0; t + 1 < steps; ++t) od[base + t] = (xd[base + t + 1] - xd[base + t]) / dt;
  }
  if (detail::should_record<T>({&x})) {
    detail::record(out, [x, dt, rows, steps](std::span<const T> g) mutable {
      auto dx = x.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * steps;
        for (std::size_t t = 0; t + 1 < steps; ++t) {
          dx[base + t + 1] += g[base + t] / dt;
          dx[base + t] -= g[base + t] / dt;
        }
      }
    });
  }
  return out;
}

#define AFECNN_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                          \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                           \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                            std::size_t);                                                      \
  template Tensor<T> maxpool2d(const Tensor<T>&);                                              \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);                    \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);               \
  template Tensor<T> transpose(const Tensor<T>&);                                              \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                                    \
  template Tensor<T> time_difference(const Tensor<T>&, T);

AFECNN_INSTANTIATE_OPS(float)
AFECNN_INSTANTIATE_OPS(double)

#undef AFECNN_INSTANTIATE_OPS

}  // namespace afecnn::ops
