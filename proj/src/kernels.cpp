#include "snnconv/kernels.hpp"

#include <algorithm>
#include <vector>

namespace snnconv::kernels {

namespace {

using idx = std::ptrdiff_t;

// Range of output rows oy for which oy*stride - pad + k lands inside [0, in).
inline void valid_range(std::size_t k, std::size_t pad, std::size_t stride, std::size_t in, std::size_t out,
                        std::size_t& lo, std::size_t& hi) {
  // need oy*stride >= pad - k  and  oy*stride <= in - 1 + pad - k
  const idx low_num = static_cast<idx>(pad) - static_cast<idx>(k);
  lo = low_num <= 0 ? 0 : static_cast<std::size_t>((low_num + static_cast<idx>(stride) - 1) / static_cast<idx>(stride));
  const idx high_num = static_cast<idx>(in) - 1 + static_cast<idx>(pad) - static_cast<idx>(k);
  if (high_num < 0) {
    hi = 0;
    lo = 0;
    return;
  }
  hi = std::min(out, static_cast<std::size_t>(high_num / static_cast<idx>(stride)) + 1);
  if (lo > hi) lo = hi;
}

}  // namespace

template <class T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::span<const T> in, std::span<const T> w,
                    std::span<T> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel * g.kernel;
  const idx jobs = static_cast<idx>(batch * g.out_channels);
#pragma omp parallel
  {
    std::vector<double> acc(oh * ow);
#pragma omp for schedule(static)
    for (idx job = 0; job < jobs; ++job) {
      const std::size_t n = static_cast<std::size_t>(job) / g.out_channels;
      const std::size_t oc = static_cast<std::size_t>(job) % g.out_channels;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
        const T* plane = in.data() + (n * g.in_channels + ic) * g.in_h * g.in_w;
        const T* wk = w.data() + (oc * g.in_channels + ic) * kk;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          std::size_t y0, y1;
          valid_range(ky, g.padding, g.stride, g.in_h, oh, y0, y1);
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            std::size_t x0, x1;
            valid_range(kx, g.padding, g.stride, g.in_w, ow, x0, x1);
            const double wv = wk[ky * g.kernel + kx];
            if (wv == 0.0) continue;
            for (std::size_t oy = y0; oy < y1; ++oy) {
              const T* row = plane + (oy * g.stride + ky - g.padding) * g.in_w;
              double* arow = acc.data() + oy * ow;
              for (std::size_t ox = x0; ox < x1; ++ox) arow[ox] += wv * row[ox * g.stride + kx - g.padding];
            }
          }
        }
      }
      T* dst = out.data() + (n * g.out_channels + oc) * oh * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) dst[i] = static_cast<T>(acc[i]);
    }
  }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::size_t batch, std::span<const T> grad_out,
                           std::span<const T> w, std::span<T> grad_in) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel * g.kernel;
  const idx jobs = static_cast<idx>(batch * g.in_channels);
#pragma omp parallel
  {
    std::vector<double> acc(g.in_h * g.in_w);
#pragma omp for schedule(static)
    for (idx job = 0; job < jobs; ++job) {
      const std::size_t n = static_cast<std::size_t>(job) / g.in_channels;
      const std::size_t ic = static_cast<std::size_t>(job) % g.in_channels;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        const T* gplane = grad_out.data() + (n * g.out_channels + oc) * oh * ow;
        const T* wk = w.data() + (oc * g.in_channels + ic) * kk;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          std::size_t y0, y1;
          valid_range(ky, g.padding, g.stride, g.in_h, oh, y0, y1);
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            std::size_t x0, x1;
            valid_range(kx, g.padding, g.stride, g.in_w, ow, x0, x1);
            const double wv = wk[ky * g.kernel + kx];
            for (std::size_t oy = y0; oy < y1; ++oy) {
              double* arow = acc.data() + (oy * g.stride + ky - g.padding) * g.in_w;
              const T* grow = gplane + oy * ow;
              for (std::size_t ox = x0; ox < x1; ++ox) arow[ox * g.stride + kx - g.padding] += wv * grow[ox];
            }
          }
        }
      }
      T* dst = grad_in.data() + (n * g.in_channels + ic) * g.in_h * g.in_w;
      for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<T>(acc[i]);
    }
  }
}

template <class T>
void conv2d_backward_weights(const ConvGeometry& g, std::size_t batch, std::span<const T> in,
                             std::span<const T> grad_out, std::span<T> grad_w) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel * g.kernel;
  const idx jobs = static_cast<idx>(g.out_channels * g.in_channels);
#pragma omp parallel for schedule(static)
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t oc = static_cast<std::size_t>(job) / g.in_channels;
    const std::size_t ic = static_cast<std::size_t>(job) % g.in_channels;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      std::size_t y0, y1;
      valid_range(ky, g.padding, g.stride, g.in_h, oh, y0, y1);
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        std::size_t x0, x1;
        valid_range(kx, g.padding, g.stride, g.in_w, ow, x0, x1);
        double acc = 0.0;
        for (std::size_t n = 0; n < batch; ++n) {
          const T* plane = in.data() + (n * g.in_channels + ic) * g.in_h * g.in_w;
          const T* gplane = grad_out.data() + (n * g.out_channels + oc) * oh * ow;
          for (std::size_t oy = y0; oy < y1; ++oy) {
            const T* row = plane + (oy * g.stride + ky - g.padding) * g.in_w;
            const T* grow = gplane + oy * ow;
            for (std::size_t ox = x0; ox < x1; ++ox) {
              acc += static_cast<double>(grow[ox]) * row[ox * g.stride + kx - g.padding];
            }
          }
        }
        grad_w[(oc * g.in_channels + ic) * kk + ky * g.kernel + kx] = static_cast<T>(acc);
      }
    }
  }
}

template <class T>
void linear_forward(std::size_t batch, std::size_t in_features, std::size_t out_features, std::span<const T> in,
                    std::span<const T> w, std::span<T> out) {
  const idx jobs = static_cast<idx>(batch * out_features);
#pragma omp parallel for schedule(static)
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / out_features;
    const std::size_t o = static_cast<std::size_t>(job) % out_features;
    const T* x = in.data() + n * in_features;
    const T* wr = w.data() + o * in_features;
    double acc = 0.0;
    for (std::size_t i = 0; i < in_features; ++i) acc += static_cast<double>(wr[i]) * x[i];
    out[job] = static_cast<T>(acc);
  }
}

template <class T>
void linear_backward_input(std::size_t batch, std::size_t in_features, std::size_t out_features,
                           std::span<const T> grad_out, std::span<const T> w, std::span<T> grad_in) {
  const idx jobs = static_cast<idx>(batch * in_features);
#pragma omp parallel for schedule(static)
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / in_features;
    const std::size_t i = static_cast<std::size_t>(job) % in_features;
    double acc = 0.0;
    for (std::size_t o = 0; o < out_features; ++o) {
      acc += static_cast<double>(grad_out[n * out_features + o]) * w[o * in_features + i];
    }
    grad_in[job] = static_cast<T>(acc);
  }
}

template <class T>
void linear_backward_weights(std::size_t batch, std::size_t in_features, std::size_t out_features,
                             std::span<const T> in, std::span<const T> grad_out, std::span<T> grad_w) {
  const idx jobs = static_cast<idx>(out_features * in_features);
#pragma omp parallel for schedule(static)
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t o = static_cast<std::size_t>(job) / in_features;
    const std::size_t i = static_cast<std::size_t>(job) % in_features;
    double acc = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      acc += static_cast<double>(grad_out[n * out_features + o]) * in[n * in_features + i];
    }
    grad_w[job] = static_cast<T>(acc);
  }
}

template <class T>
void avgpool_forward(const PoolGeometry& g, std::size_t batch, std::span<const T> in, std::span<T> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const double inv = 1.0 / static_cast<double>(g.kernel * g.kernel);
  const idx jobs = static_cast<idx>(batch * g.channels);
#pragma omp parallel for schedule(static)
  for (idx job = 0; job < jobs; ++job) {
    const T* plane = in.data() + static_cast<std::size_t>(job) * g.in_h * g.in_w;
    T* dst = out.data() + static_cast<std::size_t>(job) * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            acc += plane[(oy * g.stride + ky) * g.in_w + ox * g.stride + kx];
          }
        }
        dst[oy * ow + ox] = static_cast<T>(acc * inv);
      }
    }
  }
}

template <class T>
void avgpool_backward(const PoolGeometry& g, std::size_t batch, std::span<const T> grad_out, std::span<T> grad_in) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const double inv = 1.0 / static_cast<double>(g.kernel * g.kernel);
  const idx jobs = static_cast<idx>(batch * g.channels);
#pragma omp parallel
  {
    std::vector<double> acc(g.in_h * g.in_w);
#pragma omp for schedule(static)
    for (idx job = 0; job < jobs; ++job) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const T* gplane = grad_out.data() + static_cast<std::size_t>(job) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double v = gplane[oy * ow + ox] * inv;
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) acc[(oy * g.stride + ky) * g.in_w + ox * g.stride + kx] += v;
          }
        }
      }
      T* dst = grad_in.data() + static_cast<std::size_t>(job) * g.in_h * g.in_w;
      for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<T>(acc[i]);
    }
  }
}

namespace reference {

template <class T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::span<const T> in, std::span<const T> w,
                    std::span<T> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const idx iy = static_cast<idx>(oy * g.stride + ky) - static_cast<idx>(g.padding);
                const idx ix = static_cast<idx>(ox * g.stride + kx) - static_cast<idx>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<idx>(g.in_h) || ix >= static_cast<idx>(g.in_w)) continue;
                acc += static_cast<double>(w[((oc * g.in_channels + ic) * g.kernel + ky) * g.kernel + kx]) *
                       in[((n * g.in_channels + ic) * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                          static_cast<std::size_t>(ix)];
              }
          out[((n * g.out_channels + oc) * oh + oy) * ow + ox] = static_cast<T>(acc);
        }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::size_t batch, std::span<const T> grad_out,
                           std::span<const T> w, std::span<T> grad_in) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::vector<double> acc(batch * g.in_size(), 0.0);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const idx iy = static_cast<idx>(oy * g.stride + ky) - static_cast<idx>(g.padding);
                const idx ix = static_cast<idx>(ox * g.stride + kx) - static_cast<idx>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<idx>(g.in_h) || ix >= static_cast<idx>(g.in_w)) continue;
                acc[((n * g.in_channels + ic) * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                    static_cast<std::size_t>(ix)] +=
                    static_cast<double>(w[((oc * g.in_channels + ic) * g.kernel + ky) * g.kernel + kx]) *
                    grad_out[((n * g.out_channels + oc) * oh + oy) * ow + ox];
              }
  for (std::size_t i = 0; i < acc.size(); ++i) grad_in[i] = static_cast<T>(acc[i]);
}

template <class T>
void conv2d_backward_weights(const ConvGeometry& g, std::size_t batch, std::span<const T> in,
                             std::span<const T> grad_out, std::span<T> grad_w) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::vector<double> acc(g.weight_size(), 0.0);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const idx iy = static_cast<idx>(oy * g.stride + ky) - static_cast<idx>(g.padding);
                const idx ix = static_cast<idx>(ox * g.stride + kx) - static_cast<idx>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<idx>(g.in_h) || ix >= static_cast<idx>(g.in_w)) continue;
                acc[((oc * g.in_channels + ic) * g.kernel + ky) * g.kernel + kx] +=
                    static_cast<double>(grad_out[((n * g.out_channels + oc) * oh + oy) * ow + ox]) *
                    in[((n * g.in_channels + ic) * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                       static_cast<std::size_t>(ix)];
              }
  for (std::size_t i = 0; i < acc.size(); ++i) grad_w[i] = static_cast<T>(acc[i]);
}

template <class T>
void linear_forward(std::size_t batch, std::size_t in_features, std::size_t out_features, std::span<const T> in,
                    std::span<const T> w, std::span<T> out) {
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < out_features; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in_features; ++i) {
        acc += static_cast<double>(w[o * in_features + i]) * in[n * in_features + i];
      }
      out[n * out_features + o] = static_cast<T>(acc);
    }
}

template <class T>
void avgpool_forward(const PoolGeometry& g, std::size_t batch, std::span<const T> in, std::span<T> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (std::size_t ky = 0; ky < g.kernel; ++ky)
            for (std::size_t kx = 0; kx < g.kernel; ++kx)
              acc += in[((n * g.channels + c) * g.in_h + oy * g.stride + ky) * g.in_w + ox * g.stride + kx];
          out[((n * g.channels + c) * oh + oy) * ow + ox] =
              static_cast<T>(acc / static_cast<double>(g.kernel * g.kernel));
        }
}

}  // namespace reference

#define SNNCONV_INSTANTIATE(T)                                                                                   \
  template void conv2d_forward<T>(const ConvGeometry&, std::size_t, std::span<const T>, std::span<const T>,       \
                                  std::span<T>);                                                                 \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::size_t, std::span<const T>, std::span<const T>, \
                                         std::span<T>);                                                          \
  template void conv2d_backward_weights<T>(const ConvGeometry&, std::size_t, std::span<const T>,                  \
                                           std::span<const T>, std::span<T>);                                    \
  template void linear_forward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>,  \
                                  std::span<T>);                                                                 \
  template void linear_backward_input<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,               \
                                         std::span<const T>, std::span<T>);                                      \
  template void linear_backward_weights<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,             \
                                           std::span<const T>, std::span<T>);                                    \
  template void avgpool_forward<T>(const PoolGeometry&, std::size_t, std::span<const T>, std::span<T>);          \
  template void avgpool_backward<T>(const PoolGeometry&, std::size_t, std::span<const T>, std::span<T>);         \
  template void reference::conv2d_forward<T>(const ConvGeometry&, std::size_t, std::span<const T>,                \
                                             std::span<const T>, std::span<T>);                                  \
  template void reference::conv2d_backward_input<T>(const ConvGeometry&, std::size_t, std::span<const T>,         \
                                                    std::span<const T>, std::span<T>);                           \
  template void reference::conv2d_backward_weights<T>(const ConvGeometry&, std::size_t, std::span<const T>,       \
                                                      std::span<const T>, std::span<T>);                         \
  template void reference::linear_forward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,           \
                                             std::span<const T>, std::span<T>);                                  \
  template void reference::avgpool_forward<T>(const PoolGeometry&, std::size_t, std::span<const T>, std::span<T>);

SNNCONV_INSTANTIATE(float)
SNNCONV_INSTANTIATE(double)

#undef SNNCONV_INSTANTIATE

}  // namespace snnconv::kernels
