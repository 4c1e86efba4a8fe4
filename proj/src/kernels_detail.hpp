#pragma once

#include <cmath>
#include <limits>

#include "morphbench/kernels.hpp"

// Per-output-element bodies shared by the serial and OpenMP drivers. Keeping
// one definition guarantees the two variants run the same arithmetic in the
// same order.
namespace morphbench::kernels::detail {

inline double conv2d_one(const double* in, int n_idx, int in_c, int h, int w, int oy, int ox,
                         int oc, const double* weights, const double* bias,
                         const Conv2dShape& s) {
  const int icg = s.in_c / s.groups;  // input channels per group
  const int ocg = s.out_c / s.groups;
  const int g = oc / ocg;
  const double* wbase =
      weights + static_cast<int64_t>(oc) * icg * s.kernel * s.kernel;
  const double* ibase = in + (static_cast<int64_t>(n_idx) * in_c + g * icg) *
                                 static_cast<int64_t>(h) * w;
  double acc = bias ? bias[oc] : 0.0;
  const int iy0 = oy * s.stride - s.pad;
  const int ix0 = ox * s.stride - s.pad;
  for (int ic = 0; ic < icg; ++ic) {
    const double* iplane = ibase + static_cast<int64_t>(ic) * h * w;
    const double* wplane = wbase + static_cast<int64_t>(ic) * s.kernel * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= h) continue;
      for (int kx = 0; kx < s.kernel; ++kx) {
        const int ix = ix0 + kx;
        if (ix < 0 || ix >= w) continue;
        acc += iplane[static_cast<int64_t>(iy) * w + ix] * wplane[ky * s.kernel + kx];
      }
    }
  }
  return acc;
}

inline double conv2d_bwd_data_one(const double* dout, int n_idx, int h, int w, int iy, int ix,
                                  int ic, const double* weights, const Conv2dShape& s) {
  const int oh = s.out_side(h);
  const int ow = s.out_side(w);
  const int icg = s.in_c / s.groups;
  const int ocg = s.out_c / s.groups;
  const int g = ic / icg;
  const int ic_local = ic - g * icg;
  double acc = 0.0;
  for (int oc = g * ocg; oc < (g + 1) * ocg; ++oc) {
    const double* dplane =
        dout + (static_cast<int64_t>(n_idx) * s.out_c + oc) * static_cast<int64_t>(oh) * ow;
    const double* wplane = weights + (static_cast<int64_t>(oc) * icg + ic_local) *
                                         static_cast<int64_t>(s.kernel) * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      const int num_y = iy + s.pad - ky;
      if (num_y < 0 || num_y % s.stride != 0) continue;
      const int oy = num_y / s.stride;
      if (oy >= oh) continue;
      for (int kx = 0; kx < s.kernel; ++kx) {
        const int num_x = ix + s.pad - kx;
        if (num_x < 0 || num_x % s.stride != 0) continue;
        const int ox = num_x / s.stride;
        if (ox >= ow) continue;
        acc += dplane[static_cast<int64_t>(oy) * ow + ox] * wplane[ky * s.kernel + kx];
      }
    }
  }
  return acc;
}

// One weight-gradient element: full sum over batch and output positions.
inline double conv2d_bwd_weight_one(const double* in, const double* dout, int n, int h, int w,
                                    int oc, int ic_local, int ky, int kx, const Conv2dShape& s) {
  const int oh = s.out_side(h);
  const int ow = s.out_side(w);
  const int icg = s.in_c / s.groups;
  const int ocg = s.out_c / s.groups;
  const int g = oc / ocg;
  const int ic = g * icg + ic_local;
  double acc = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* iplane =
        in + (static_cast<int64_t>(n_idx) * s.in_c + ic) * static_cast<int64_t>(h) * w;
    const double* dplane =
        dout + (static_cast<int64_t>(n_idx) * s.out_c + oc) * static_cast<int64_t>(oh) * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * s.stride - s.pad + ky;
      if (iy < 0 || iy >= h) continue;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * s.stride - s.pad + kx;
        if (ix < 0 || ix >= w) continue;
        acc += iplane[static_cast<int64_t>(iy) * w + ix] *
               dplane[static_cast<int64_t>(oy) * ow + ox];
      }
    }
  }
  return acc;
}

inline double conv2d_bwd_bias_one(const double* dout, int n, int oh, int ow, int out_c, int oc) {
  double acc = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* dplane =
        dout + (static_cast<int64_t>(n_idx) * out_c + oc) * static_cast<int64_t>(oh) * ow;
    for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) acc += dplane[i];
  }
  return acc;
}

inline double dense_one(const double* in, int n_idx, int fin, const double* weights,
                        const double* bias, int o) {
  const double* irow = in + static_cast<int64_t>(n_idx) * fin;
  const double* wrow = weights + static_cast<int64_t>(o) * fin;
  double acc = bias ? bias[o] : 0.0;
  for (int i = 0; i < fin; ++i) acc += irow[i] * wrow[i];
  return acc;
}

inline double dense_bwd_data_one(const double* dout, int n_idx, int fin, const double* weights,
                                 int fout, int i) {
  const double* drow = dout + static_cast<int64_t>(n_idx) * fout;
  double acc = 0.0;
  for (int o = 0; o < fout; ++o) acc += drow[o] * weights[static_cast<int64_t>(o) * fin + i];
  return acc;
}

inline double dense_bwd_weight_one(const double* in, const double* dout, int n, int fin,
                                   int fout, int o, int i) {
  double acc = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx)
    acc += dout[static_cast<int64_t>(n_idx) * fout + o] * in[static_cast<int64_t>(n_idx) * fin + i];
  return acc;
}

// Batch statistics and normalization for one channel.
inline void batchnorm_train_channel(const double* in, int n, int c, int h, int w, int ch,
                                    const double* gamma, const double* beta, double eps,
                                    double* out, double* batch_mean, double* batch_var) {
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t m = static_cast<int64_t>(n) * plane;
  double sum = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    for (int64_t i = 0; i < plane; ++i) sum += p[i];
  }
  const double mean = sum / static_cast<double>(m);
  double sq = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    for (int64_t i = 0; i < plane; ++i) {
      const double d = p[i] - mean;
      sq += d * d;
    }
  }
  const double var = sq / static_cast<double>(m);
  const double invstd = 1.0 / std::sqrt(var + eps);
  const double g = gamma[ch];
  const double b = beta[ch];
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    double* q = out + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * invstd + b;
  }
  batch_mean[ch] = mean;
  batch_var[ch] = var;
}

inline void batchnorm_backward_channel(const double* in, const double* dout, int n, int c, int h,
                                       int w, int ch, const double* gamma,
                                       const double* batch_mean, const double* batch_var,
                                       double eps, double* din, double* dgamma, double* dbeta) {
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t m = static_cast<int64_t>(n) * plane;
  const double mean = batch_mean[ch];
  const double invstd = 1.0 / std::sqrt(batch_var[ch] + eps);
  double sum_dy = 0.0;
  double sum_dy_xhat = 0.0;
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* x = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    const double* dy = dout + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    for (int64_t i = 0; i < plane; ++i) {
      sum_dy += dy[i];
      sum_dy_xhat += dy[i] * (x[i] - mean) * invstd;
    }
  }
  dbeta[ch] = sum_dy;
  dgamma[ch] = sum_dy_xhat;
  const double inv_m = 1.0 / static_cast<double>(m);
  const double g = gamma[ch];
  for (int n_idx = 0; n_idx < n; ++n_idx) {
    const double* x = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    const double* dy = dout + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    double* dx = din + (static_cast<int64_t>(n_idx) * c + ch) * plane;
    for (int64_t i = 0; i < plane; ++i) {
      const double xhat = (x[i] - mean) * invstd;
      dx[i] = g * invstd * (dy[i] - inv_m * sum_dy - xhat * inv_m * sum_dy_xhat);
    }
  }
}

inline void maxpool_one(const double* in, int n_idx, int c, int h, int w, int ch, int oy, int ox,
                        int kernel, int stride, int pad, int oh_total, int ow_total, double* out,
                        int32_t* argmax) {
  const double* plane = in + (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(h) * w;
  double best = -std::numeric_limits<double>::infinity();
  int32_t best_idx = -1;
  for (int ky = 0; ky < kernel; ++ky) {
    const int iy = oy * stride - pad + ky;
    if (iy < 0 || iy >= h) continue;
    for (int kx = 0; kx < kernel; ++kx) {
      const int ix = ox * stride - pad + kx;
      if (ix < 0 || ix >= w) continue;
      const double v = plane[static_cast<int64_t>(iy) * w + ix];
      if (v > best) {
        best = v;
        best_idx = static_cast<int32_t>(iy * w + ix);
      }
    }
  }
  const int64_t out_idx =
      ((static_cast<int64_t>(n_idx) * c + ch) * oh_total + oy) * static_cast<int64_t>(ow_total) +
      ox;
  out[out_idx] = best;
  argmax[out_idx] = best_idx;
}

// Gather form: each input cell sums the upstream gradient of every window
// whose recorded argmax points at it. Scatter-free, so thread-safe.
inline double maxpool_bwd_one(const double* dout, const int32_t* argmax, int n_idx, int c, int h,
                              int w, int ch, int iy, int ix, int kernel, int stride, int pad) {
  const int oh = (h + 2 * pad - kernel) / stride + 1;
  const int ow = (w + 2 * pad - kernel) / stride + 1;
  const int32_t flat = static_cast<int32_t>(iy * w + ix);
  double acc = 0.0;
  const int oy_lo = (iy + pad - kernel + stride >= 0) ? (iy + pad - kernel + stride) / stride : 0;
  const int oy_hi = (iy + pad) / stride;
  const int ox_lo = (ix + pad - kernel + stride >= 0) ? (ix + pad - kernel + stride) / stride : 0;
  const int ox_hi = (ix + pad) / stride;
  const int64_t base = (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(oh) * ow;
  for (int oy = oy_lo; oy <= oy_hi && oy < oh; ++oy)
    for (int ox = ox_lo; ox <= ox_hi && ox < ow; ++ox) {
      const int64_t idx = base + static_cast<int64_t>(oy) * ow + ox;
      if (argmax[idx] == flat) acc += dout[idx];
    }
  return acc;
}

}  // namespace morphbench::kernels::detail
