#include "vsdl/autodiff/ops.hpp"

// Small products must not fall back to Eigen's lazy coefficient path, whose
// reductions depend on buffer alignment.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "vsdl/error.hpp"

namespace vsdl::autodiff {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using NodeT = detail::Node<T>;

// Fixed-order sum of a[i]*b[i*stride]; results do not depend on alignment.
template <typename T>
T dot(const T* a, const T* b, std::size_t n, std::size_t stride = 1) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[(i + j) * stride];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i * stride];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
T sum(const T* a, std::size_t n, std::size_t stride = 1) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i * stride];
  return acc;
}

// C[m,n] (+)= sum_k A[m,k] B[k,n] for row-major buffers. Degenerate shapes
// would reach Eigen's GEMV, which is alignment dependent, so they take
// explicit loops; a_t / b_t read A or B transposed.
template <typename T>
void matmul(T* c, const T* a, const T* b, std::size_t m, std::size_t n, std::size_t k, bool a_t, bool b_t,
            bool accumulate) {
  if (m == 0 || n == 0) return;
  if (m == 1 || n == 1 || k == 1) {
    const std::size_t a_row = a_t ? 1 : k, a_col = a_t ? m : 1;
    const std::size_t b_step = b_t ? k : 1, b_stride = b_t ? 1 : n;
    std::vector<T> arow(k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) arow[p] = a[i * a_row + p * a_col];
      for (std::size_t j = 0; j < n; ++j) {
        const T v = dot(arow.data(), b + j * b_step, k, b_stride);
        c[i * n + j] = accumulate ? c[i * n + j] + v : v;
      }
    }
    return;
  }
  const auto M = static_cast<Eigen::Index>(m), N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(k);
  Eigen::Map<RowMat<T>> cm(c, M, N);
  Eigen::Map<const RowMat<T>> am(a, a_t ? K : M, a_t ? M : K);
  Eigen::Map<const RowMat<T>> bm(b, b_t ? N : K, b_t ? K : N);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate) {
      cm.noalias() += lhs * rhs;
    } else {
      cm.noalias() = lhs * rhs;
    }
  };
  if (a_t && b_t) {
    run(am.transpose(), bm.transpose());
  } else if (a_t) {
    run(am.transpose(), bm);
  } else if (b_t) {
    run(am, bm.transpose());
  } else {
    run(am, bm);
  }
}

// The message is built only on failure.
template <typename Message>
void require(bool ok, Message&& message) {
  if (!ok) throw ShapeError(std::string(message()));
}

// Conv and pool geometry in a uniform 3-spatial-axis form; 2D ops use a
// depth of one with unit kernel, stride and no padding along it.
struct Geometry {
  std::size_t batch = 1, channels = 1, depth = 1, height = 1, width = 1;
  std::size_t out_channels = 1, k_d = 1, k_h = 1, k_w = 1;
  std::size_t s_d = 1, s_h = 1, s_w = 1;
  std::size_t p_d = 0, p_h = 0, p_w = 0;
  std::size_t o_d = 1, o_h = 1, o_w = 1;

  std::size_t in_volume() const { return channels * depth * height * width; }
  std::size_t patch() const { return channels * k_d * k_h * k_w; }
  std::size_t out_pixels() const { return o_d * o_h * o_w; }
};

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                        const char* axis) {
  const std::size_t padded = in + 2 * pad;
  if (k > padded) {
    throw ConfigError(std::string("kernel extent ") + std::to_string(k) + " exceeds padded " + axis +
                      " extent " + std::to_string(padded));
  }
  if ((padded - k) % stride != 0) {
    throw ConfigError(std::string("non-integral output ") + axis + " extent: (" + std::to_string(in) +
                      " + 2*" + std::to_string(pad) + " - " + std::to_string(k) + ") / " +
                      std::to_string(stride) + " + 1");
  }
  return (padded - k) / stride + 1;
}

std::size_t pool_extent(std::size_t in, std::size_t window, std::size_t stride, const char* axis) {
  if (window > in) {
    throw ConfigError(std::string("pool window ") + std::to_string(window) + " exceeds " + axis +
                      " extent " + std::to_string(in));
  }
  return (in - window) / stride + 1;
}

template <typename T>
void im2col(const T* in, T* col, const Geometry& g) {
  std::size_t row = 0;
  const std::size_t plane = g.height * g.width;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t kd = 0; kd < g.k_d; ++kd) {
      for (std::size_t kh = 0; kh < g.k_h; ++kh) {
        for (std::size_t kw = 0; kw < g.k_w; ++kw, ++row) {
          T* out = col + row * g.out_pixels();
          for (std::size_t od = 0; od < g.o_d; ++od) {
            const auto id = static_cast<std::ptrdiff_t>(od * g.s_d + kd) - static_cast<std::ptrdiff_t>(g.p_d);
            for (std::size_t oh = 0; oh < g.o_h; ++oh) {
              const auto ih = static_cast<std::ptrdiff_t>(oh * g.s_h + kh) - static_cast<std::ptrdiff_t>(g.p_h);
              const bool row_valid = id >= 0 && id < static_cast<std::ptrdiff_t>(g.depth) && ih >= 0 &&
                                     ih < static_cast<std::ptrdiff_t>(g.height);
              if (!row_valid) {
                std::fill(out, out + g.o_w, T{});
                out += g.o_w;
                continue;
              }
              const T* src = in + (c * g.depth + static_cast<std::size_t>(id)) * plane +
                             static_cast<std::size_t>(ih) * g.width;
              if (g.s_w == 1) {
                // Contiguous run: zero the padded edges, copy the interior.
                const auto shift = static_cast<std::ptrdiff_t>(kw) - static_cast<std::ptrdiff_t>(g.p_w);
                const auto lo = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(-shift, 0, g.o_w));
                const auto hi = static_cast<std::size_t>(
                    std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.width) - shift, lo, g.o_w));
                std::fill(out, out + lo, T{});
                std::copy(src + lo + shift, src + hi + shift, out + lo);
                std::fill(out + hi, out + g.o_w, T{});
                out += g.o_w;
                continue;
              }
              for (std::size_t ow = 0; ow < g.o_w; ++ow) {
                const auto iw = static_cast<std::ptrdiff_t>(ow * g.s_w + kw) - static_cast<std::ptrdiff_t>(g.p_w);
                *out++ = (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width)) ? src[iw] : T{};
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_accumulate(const T* col, T* in_grad, const Geometry& g) {
  std::size_t row = 0;
  const std::size_t plane = g.height * g.width;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t kd = 0; kd < g.k_d; ++kd) {
      for (std::size_t kh = 0; kh < g.k_h; ++kh) {
        for (std::size_t kw = 0; kw < g.k_w; ++kw, ++row) {
          const T* src = col + row * g.out_pixels();
          for (std::size_t od = 0; od < g.o_d; ++od) {
            const auto id = static_cast<std::ptrdiff_t>(od * g.s_d + kd) - static_cast<std::ptrdiff_t>(g.p_d);
            for (std::size_t oh = 0; oh < g.o_h; ++oh) {
              const auto ih = static_cast<std::ptrdiff_t>(oh * g.s_h + kh) - static_cast<std::ptrdiff_t>(g.p_h);
              const bool row_valid = id >= 0 && id < static_cast<std::ptrdiff_t>(g.depth) && ih >= 0 &&
                                     ih < static_cast<std::ptrdiff_t>(g.height);
              if (!row_valid) {
                src += g.o_w;
                continue;
              }
              T* dst = in_grad + (c * g.depth + static_cast<std::size_t>(id)) * plane +
                       static_cast<std::size_t>(ih) * g.width;
              for (std::size_t ow = 0; ow < g.o_w; ++ow, ++src) {
                const auto iw = static_cast<std::ptrdiff_t>(ow * g.s_w + kw) - static_cast<std::ptrdiff_t>(g.p_w);
                if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width)) dst[iw] += *src;
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> conv_core(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                         const BasicTensor<T>& bias, const Geometry& g, Shape out_shape) {
  const std::size_t col_size = g.patch() * g.out_pixels();
  std::vector<T> out(g.batch * g.out_channels * g.out_pixels());
  // Columns for every batch item, kept for the kernel gradient.
  auto cols = std::make_shared<std::vector<T>>(g.batch * col_size);
  for (std::size_t n = 0; n < g.batch; ++n) {
    T* col = cols->data() + n * col_size;
    im2col(input.data().data() + n * g.in_volume(), col, g);
    T* o = out.data() + n * g.out_channels * g.out_pixels();
    matmul(o, kernels.data().data(), col, g.out_channels, g.out_pixels(), g.patch(), false, false, false);
    for (std::size_t c = 0; c < g.out_channels; ++c) {
      const T b = bias.data()[c];
      for (std::size_t p = 0; p < g.out_pixels(); ++p) o[c * g.out_pixels() + p] += b;
    }
  }

  auto backward_fn = [g, cols, col_size](NodeT<T>& self) {
    auto& in_node = *self.parents[0];
    auto& k_node = *self.parents[1];
    auto& b_node = *self.parents[2];
    std::vector<T> dcol;
    if (in_node.requires_grad) dcol.resize(col_size);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* dout = self.grad.data() + n * g.out_channels * g.out_pixels();
      if (b_node.requires_grad) {
        for (std::size_t c = 0; c < g.out_channels; ++c) {
          b_node.grad[c] += sum(dout + c * g.out_pixels(), g.out_pixels());
        }
      }
      if (k_node.requires_grad) {
        matmul(k_node.grad.data(), dout, cols->data() + n * col_size, g.out_channels, g.patch(),
               g.out_pixels(), false, true, true);
      }
      if (in_node.requires_grad) {
        matmul(dcol.data(), k_node.data.data(), dout, g.patch(), g.out_pixels(), g.out_channels, true, false,
               false);
        col2im_accumulate(dcol.data(), in_node.grad.data() + n * g.in_volume(), g);
      }
    }
  };
  return detail::make_result<T>(std::move(out_shape), std::move(out), {input, kernels, bias},
                                std::move(backward_fn));
}

void check_conv_args(int stride, int padding) {
  if (stride < 1) throw ConfigError("stride must be positive, got " + std::to_string(stride));
  if (padding < 0) throw ConfigError("padding must be non-negative, got " + std::to_string(padding));
}

template <typename T>
BasicTensor<T> pool_core(const BasicTensor<T>& input, const Geometry& g, Shape out_shape) {
  const std::size_t planes = g.batch * g.channels;
  const std::size_t in_plane = g.depth * g.height * g.width;
  const std::size_t out_plane = g.out_pixels();
  std::vector<T> out(planes * out_plane);
  std::vector<std::size_t> argmax(out.size());
  const T* in = input.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = in + p * in_plane;
    std::size_t o = p * out_plane;
    for (std::size_t od = 0; od < g.o_d; ++od) {
      for (std::size_t oh = 0; oh < g.o_h; ++oh) {
        for (std::size_t ow = 0; ow < g.o_w; ++ow, ++o) {
          std::size_t best = (od * g.s_d * g.height + oh * g.s_h) * g.width + ow * g.s_w;
          T best_value = src[best];
          for (std::size_t kd = 0; kd < g.k_d; ++kd) {
            for (std::size_t kh = 0; kh < g.k_h; ++kh) {
              for (std::size_t kw = 0; kw < g.k_w; ++kw) {
                const std::size_t idx =
                    ((od * g.s_d + kd) * g.height + oh * g.s_h + kh) * g.width + ow * g.s_w + kw;
                if (src[idx] > best_value) {
                  best_value = src[idx];
                  best = idx;
                }
              }
            }
          }
          out[o] = best_value;
          argmax[o] = p * in_plane + best;
        }
      }
    }
  }
  auto backward_fn = [argmax = std::move(argmax)](NodeT<T>& self) {
    auto& in_node = *self.parents[0];
    if (!in_node.requires_grad) return;
    for (std::size_t o = 0; o < argmax.size(); ++o) in_node.grad[argmax[o]] += self.grad[o];
  };
  return detail::make_result<T>(std::move(out_shape), std::move(out), {input}, std::move(backward_fn));
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), [&] { return std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                                      to_string(b.shape()); });
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                      int stride, int padding) {
  check_conv_args(stride, padding);
  require(input.rank() == 3 || input.rank() == 4, [&] { return "conv2d: input must be [C,H,W] or [N,C,H,W], got " + to_string(input.shape()); });
  require(kernels.rank() == 4, [&] { return "conv2d: kernels must be [C_out,C_in,kH,kW], got " + to_string(kernels.shape()); });
  const bool batched = input.rank() == 4;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? input.dim(0) : 1;
  g.channels = input.dim(off);
  g.height = input.dim(off + 1);
  g.width = input.dim(off + 2);
  g.out_channels = kernels.dim(0);
  require(kernels.dim(1) == g.channels, [&] { return "conv2d: kernel expects " + std::to_string(kernels.dim(1)) +
                                            " input channels, input has " + std::to_string(g.channels); });
  require(bias.rank() == 1 && bias.dim(0) == g.out_channels, [&] { return "conv2d: bias must be [" + std::to_string(g.out_channels) + "], got " + to_string(bias.shape()); });
  g.k_h = kernels.dim(2);
  g.k_w = kernels.dim(3);
  g.s_h = g.s_w = static_cast<std::size_t>(stride);
  g.p_h = g.p_w = static_cast<std::size_t>(padding);
  g.o_h = conv_extent(g.height, g.k_h, g.s_h, g.p_h, "height");
  g.o_w = conv_extent(g.width, g.k_w, g.s_w, g.p_w, "width");
  Shape out_shape = batched ? Shape{g.batch, g.out_channels, g.o_h, g.o_w} : Shape{g.out_channels, g.o_h, g.o_w};
  return conv_core(input, kernels, bias, g, std::move(out_shape));
}

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                      int stride, int padding) {
  check_conv_args(stride, padding);
  require(input.rank() == 4 || input.rank() == 5, [&] { return "conv3d: input must be [C,D,H,W] or [N,C,D,H,W], got " + to_string(input.shape()); });
  require(kernels.rank() == 5, [&] { return "conv3d: kernels must be [C_out,C_in,kD,kH,kW], got " + to_string(kernels.shape()); });
  const bool batched = input.rank() == 5;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? input.dim(0) : 1;
  g.channels = input.dim(off);
  g.depth = input.dim(off + 1);
  g.height = input.dim(off + 2);
  g.width = input.dim(off + 3);
  g.out_channels = kernels.dim(0);
  require(kernels.dim(1) == g.channels, [&] { return "conv3d: kernel expects " + std::to_string(kernels.dim(1)) +
                                            " input channels, input has " + std::to_string(g.channels); });
  require(bias.rank() == 1 && bias.dim(0) == g.out_channels, [&] { return "conv3d: bias must be [" + std::to_string(g.out_channels) + "], got " + to_string(bias.shape()); });
  g.k_d = kernels.dim(2);
  g.k_h = kernels.dim(3);
  g.k_w = kernels.dim(4);
  g.s_d = g.s_h = g.s_w = static_cast<std::size_t>(stride);
  g.p_d = g.p_h = g.p_w = static_cast<std::size_t>(padding);
  g.o_d = conv_extent(g.depth, g.k_d, g.s_d, g.p_d, "depth");
  g.o_h = conv_extent(g.height, g.k_h, g.s_h, g.p_h, "height");
  g.o_w = conv_extent(g.width, g.k_w, g.s_w, g.p_w, "width");
  Shape out_shape = batched ? Shape{g.batch, g.out_channels, g.o_d, g.o_h, g.o_w}
                            : Shape{g.out_channels, g.o_d, g.o_h, g.o_w};
  return conv_core(input, kernels, bias, g, std::move(out_shape));
}

template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, int window, int stride) {
  if (window < 1 || stride < 1) throw ConfigError("maxpool2d: window and stride must be positive");
  require(input.rank() == 3 || input.rank() == 4, [&] { return "maxpool2d: input must be [C,H,W] or [N,C,H,W], got " + to_string(input.shape()); });
  const bool batched = input.rank() == 4;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? input.dim(0) : 1;
  g.channels = input.dim(off);
  g.height = input.dim(off + 1);
  g.width = input.dim(off + 2);
  g.k_h = g.k_w = static_cast<std::size_t>(window);
  g.s_h = g.s_w = static_cast<std::size_t>(stride);
  g.o_h = pool_extent(g.height, g.k_h, g.s_h, "height");
  g.o_w = pool_extent(g.width, g.k_w, g.s_w, "width");
  Shape out_shape = batched ? Shape{g.batch, g.channels, g.o_h, g.o_w} : Shape{g.channels, g.o_h, g.o_w};
  return pool_core(input, g, std::move(out_shape));
}

template <typename T>
BasicTensor<T> maxpool3d(const BasicTensor<T>& input, int window, int stride) {
  if (window < 1 || stride < 1) throw ConfigError("maxpool3d: window and stride must be positive");
  require(input.rank() == 4 || input.rank() == 5, [&] { return "maxpool3d: input must be [C,D,H,W] or [N,C,D,H,W], got " + to_string(input.shape()); });
  const bool batched = input.rank() == 5;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? input.dim(0) : 1;
  g.channels = input.dim(off);
  g.depth = input.dim(off + 1);
  g.height = input.dim(off + 2);
  g.width = input.dim(off + 3);
  g.k_d = g.k_h = g.k_w = static_cast<std::size_t>(window);
  g.s_d = g.s_h = g.s_w = static_cast<std::size_t>(stride);
  g.o_d = pool_extent(g.depth, g.k_d, g.s_d, "depth");
  g.o_h = pool_extent(g.height, g.k_h, g.s_h, "height");
  g.o_w = pool_extent(g.width, g.k_w, g.s_w, "width");
  Shape out_shape = batched ? Shape{g.batch, g.channels, g.o_d, g.o_h, g.o_w}
                            : Shape{g.channels, g.o_d, g.o_h, g.o_w};
  return pool_core(input, g, std::move(out_shape));
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights, const BasicTensor<T>& bias) {
  require(input.rank() == 1 || input.rank() == 2, [&] { return "dense: input must be [N] or [B,N], got " + to_string(input.shape()); });
  require(weights.rank() == 2, [&] { return "dense: weights must be [M,N], got " + to_string(weights.shape()); });
  const bool batched = input.rank() == 2;
  const std::size_t rows = batched ? input.dim(0) : 1;
  const std::size_t in_width = batched ? input.dim(1) : input.dim(0);
  const std::size_t out_width = weights.dim(0);
  require(weights.dim(1) == in_width, [&] { return "dense: weights " + to_string(weights.shape()) +
                                          " do not accept input of width " + std::to_string(in_width); });
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.rank() == 1 && bias.dim(0) == out_width, [&] { return "dense: bias must be [" + std::to_string(out_width) + "], got " + to_string(bias.shape()); });
  }

  const std::size_t R = rows, N = in_width, M = out_width;
  std::vector<T> out(R * M);
  matmul(out.data(), input.data().data(), weights.data().data(), R, M, N, false, true, false);
  if (has_bias) {
    const auto b = bias.data();
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t m = 0; m < M; ++m) out[r * M + m] += b[m];
    }
  }

  std::vector<BasicTensor<T>> parents{input, weights};
  if (has_bias) parents.push_back(bias);
  Shape out_shape = batched ? Shape{rows, out_width} : Shape{out_width};
  auto backward_fn = [R, N, M, has_bias](NodeT<T>& self) {
    auto& x_node = *self.parents[0];
    auto& w_node = *self.parents[1];
    const T* dy = self.grad.data();
    if (w_node.requires_grad) {
      matmul(w_node.grad.data(), dy, x_node.data.data(), M, N, R, true, false, true);
    }
    if (x_node.requires_grad) {
      matmul(x_node.grad.data(), dy, w_node.data.data(), R, N, M, false, false, true);
    }
    if (has_bias && self.parents[2]->requires_grad) {
      auto& db = self.parents[2]->grad;
      for (std::size_t m = 0; m < M; ++m) db[m] += sum(dy + m, R, M);
    }
  };
  return detail::make_result<T>(std::move(out_shape), std::move(out), std::move(parents), std::move(backward_fn));
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
  const auto x = input.data();
  std::vector<T> y(x.size());
  // Keep sigmoid in (0,1) and tanh in (-1,1) even where the exact value rounds
  // to the boundary.
  const T upper = std::nextafter(T{1}, T{0});
  const T lower = std::numeric_limits<T>::min();
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) {
        T s;
        if (x[i] >= T{0}) {
          s = T{1} / (T{1} + std::exp(-x[i]));
        } else {
          const T e = std::exp(x[i]);
          s = e / (T{1} + e);
        }
        y[i] = std::clamp(s, lower, upper);
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(std::tanh(x[i]), -upper, upper);
      break;
  }
  auto backward_fn = [kind](NodeT<T>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    const auto& out = self.data;
    switch (kind) {
      case Activation::relu:
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (out[i] > T{0}) in.grad[i] += self.grad[i];
        }
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < out.size(); ++i) in.grad[i] += self.grad[i] * out[i] * (T{1} - out[i]);
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < out.size(); ++i) in.grad[i] += self.grad[i] * (T{1} - out[i] * out[i]);
        break;
    }
  };
  return detail::make_result<T>(input.shape(), std::move(y), {input}, std::move(backward_fn));
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a, b}, [](NodeT<T>& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] - b.data()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a, b}, [](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a, b}, [](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * factor;
  return detail::make_result<T>(a.shape(), std::move(y), {a}, [factor](NodeT<T>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T total{};
  for (T v : a.data()) total += v;
  return detail::make_result<T>({}, {total}, {a}, [](NodeT<T>& self) {
    auto& p = *self.parents[0];
    for (auto& g : p.grad) g += self.grad[0];
  });
}

template <typename T>
BasicTensor<T> mean(const std::vector<BasicTensor<T>>& scalars) {
  require(!scalars.empty(), [&] { return "mean: no inputs"; });
  T total{};
  for (const auto& s : scalars) {
    require(s.size() == 1, [&] { return "mean: inputs must be single-element, got " + to_string(s.shape()); });
    total += s.data()[0];
  }
  const T inv = T{1} / static_cast<T>(scalars.size());
  return detail::make_result<T>({}, {total * inv}, scalars, [inv](NodeT<T>& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->grad[0] += self.grad[0] * inv;
    }
  });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  require(element_count(shape) == a.size(), [&] { return "reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape); });
  std::vector<T> y(a.data().begin(), a.data().end());
  return detail::make_result<T>(std::move(shape), std::move(y), {a}, [](NodeT<T>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& a, std::size_t begin, std::size_t count) {
  require(a.rank() >= 1, [&] { return "slice: rank-0 tensor"; });
  require(count >= 1 && begin + count <= a.dim(0), [&] { return "slice: range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
              ") outside leading extent " + std::to_string(a.dim(0)); });
  Shape shape = a.shape();
  const std::size_t stride = a.size() / shape[0];
  shape[0] = count;
  const std::size_t offset = begin * stride;
  std::vector<T> y(a.data().begin() + offset, a.data().begin() + offset + count * stride);
  return detail::make_result<T>(std::move(shape), std::move(y), {a}, [offset](NodeT<T>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[offset + i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> select(const BasicTensor<T>& a, std::size_t index) {
  auto s = slice(a, index, 1);
  Shape shape(a.shape().begin() + 1, a.shape().end());
  return reshape(s, std::move(shape));
}

template <typename T>
BasicTensor<T> stack(const std::vector<BasicTensor<T>>& parts) {
  require(!parts.empty(), [&] { return "stack: no inputs"; });
  const Shape& part_shape = parts.front().shape();
  Shape shape{parts.size()};
  shape.insert(shape.end(), part_shape.begin(), part_shape.end());
  std::vector<T> y;
  y.reserve(element_count(shape));
  for (const auto& p : parts) {
    require(p.shape() == part_shape, [&] { return "stack: shape mismatch " + to_string(p.shape()) + " vs " +
                                         to_string(part_shape); });
    y.insert(y.end(), p.data().begin(), p.data().end());
  }
  const std::size_t stride = element_count(part_shape);
  return detail::make_result<T>(std::move(shape), std::move(y), parts, [stride](NodeT<T>& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      for (std::size_t i = 0; i < stride; ++i) p.grad[i] += self.grad[k * stride + i];
    }
  });
}

template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& prediction, T label) {
  require(prediction.size() == 1, [&] { return "bce_loss: prediction must be a single probability, got " +
                                      to_string(prediction.shape()); });
  if (label != T{0} && label != T{1}) throw InputError("bce_loss: label must be 0 or 1");
  const T eps = static_cast<T>(kProbabilityClamp);
  const T p = std::clamp(prediction.data()[0], eps, T{1} - eps);
  const T loss = -(label * std::log(p) + (T{1} - label) * std::log(T{1} - p));
  return detail::make_result<T>({}, {loss}, {prediction}, [p, label](NodeT<T>& self) {
    auto& in = *self.parents[0];
    in.grad[0] += self.grad[0] * (-label / p + (T{1} - label) / (T{1} - p));
  });
}

#define VSDL_INSTANTIATE_OPS(T)                                                                           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, int, \
                                 int);                                                                    \
  template BasicTensor<T> conv3d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, int, \
                                 int);                                                                    \
  template BasicTensor<T> maxpool2d(const BasicTensor<T>&, int, int);                                     \
  template BasicTensor<T> maxpool3d(const BasicTensor<T>&, int, int);                                     \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> activation(const BasicTensor<T>&, Activation);                                  \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                                     \
  template BasicTensor<T> mean(const std::vector<BasicTensor<T>>&);                                       \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                          \
  template BasicTensor<T> select(const BasicTensor<T>&, std::size_t);                                     \
  template BasicTensor<T> slice(const BasicTensor<T>&, std::size_t, std::size_t);                         \
  template BasicTensor<T> stack(const std::vector<BasicTensor<T>>&);                                      \
  template BasicTensor<T> bce_loss(const BasicTensor<T>&, T);

VSDL_INSTANTIATE_OPS(float)
VSDL_INSTANTIATE_OPS(double)

#undef VSDL_INSTANTIATE_OPS

}  // namespace vsdl::autodiff
