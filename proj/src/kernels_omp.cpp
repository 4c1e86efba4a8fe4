#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_detail.hpp"
#include "morphbench/kernels.hpp"

namespace morphbench::kernels {

namespace detail = morphbench::kernels::detail;

void set_threads(int n) {
#ifdef _OPENMP
  if (n < 1) n = omp_get_num_procs();
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void conv2d_forward(const double* in, int n, int h, int w, const double* weights,
                    const double* bias, const Conv2dShape& s, double* out) {
  const int oh = s.out_side(h);
  const int ow = s.out_side(w);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int oc = 0; oc < s.out_c; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          out[((static_cast<int64_t>(n_idx) * s.out_c + oc) * oh + oy) * ow + ox] =
              detail::conv2d_one(in, n_idx, s.in_c, h, w, oy, ox, oc, weights, bias, s);
}

void conv2d_backward_data(const double* dout, int n, int h, int w, const double* weights,
                          const Conv2dShape& s, double* din) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ic = 0; ic < s.in_c; ++ic)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
          din[((static_cast<int64_t>(n_idx) * s.in_c + ic) * h + iy) * w + ix] =
              detail::conv2d_bwd_data_one(dout, n_idx, h, w, iy, ix, ic, weights, s);
}

void conv2d_backward_weights(const double* in, const double* dout, int n, int h, int w,
                             const Conv2dShape& s, double* dweights, double* dbias) {
  const int icg = s.in_c / s.groups;
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.out_c; ++oc)
    for (int ic = 0; ic < icg; ++ic)
      for (int ky = 0; ky < s.kernel; ++ky)
        for (int kx = 0; kx < s.kernel; ++kx)
          dweights[((static_cast<int64_t>(oc) * icg + ic) * s.kernel + ky) * s.kernel + kx] =
              detail::conv2d_bwd_weight_one(in, dout, n, h, w, oc, ic, ky, kx, s);
  if (dbias) {
    const int oh = s.out_side(h);
    const int ow = s.out_side(w);
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc)
      dbias[oc] = detail::conv2d_bwd_bias_one(dout, n, oh, ow, s.out_c, oc);
  }
}

void dense_forward(const double* in, int n, int fin, const double* weights, const double* bias,
                   int fout, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int o = 0; o < fout; ++o)
      out[static_cast<int64_t>(n_idx) * fout + o] =
          detail::dense_one(in, n_idx, fin, weights, bias, o);
}

void dense_backward_data(const double* dout, int n, int fin, const double* weights, int fout,
                         double* din) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int i = 0; i < fin; ++i)
      din[static_cast<int64_t>(n_idx) * fin + i] =
          detail::dense_bwd_data_one(dout, n_idx, fin, weights, fout, i);
}

void dense_backward_weights(const double* in, const double* dout, int n, int fin, int fout,
                            double* dweights, double* dbias) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < fout; ++o)
    for (int i = 0; i < fin; ++i)
      dweights[static_cast<int64_t>(o) * fin + i] =
          detail::dense_bwd_weight_one(in, dout, n, fin, fout, o, i);
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < fout; ++o) {
      double acc = 0.0;
      for (int n_idx = 0; n_idx < n; ++n_idx) acc += dout[static_cast<int64_t>(n_idx) * fout + o];
      dbias[o] = acc;
    }
  }
}

void batchnorm_forward_train(const double* in, int n, int c, int h, int w, const double* gamma,
                             const double* beta, double eps, double* out, double* batch_mean,
                             double* batch_var) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch)
    detail::batchnorm_train_channel(in, n, c, h, w, ch, gamma, beta, eps, out, batch_mean,
                                    batch_var);
}

void batchnorm_forward_eval(const double* in, int n, int c, int h, int w, const double* gamma,
                            const double* beta, const double* run_mean, const double* run_var,
                            double eps, double* out) {
  const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double invstd = 1.0 / std::sqrt(run_var[ch] + eps);
      const double g = gamma[ch];
      const double b = beta[ch];
      const double mean = run_mean[ch];
      const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      double* q = out + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * invstd + b;
    }
}

void batchnorm_backward(const double* in, const double* dout, int n, int c, int h, int w,
                        const double* gamma, const double* batch_mean, const double* batch_var,
                        double eps, double* din, double* dgamma, double* dbeta) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch)
    detail::batchnorm_backward_channel(in, dout, n, c, h, w, ch, gamma, batch_mean, batch_var,
                                       eps, din, dgamma, dbeta);
}

void maxpool_forward(const double* in, int n, int c, int h, int w, int kernel, int stride,
                     int pad, double* out, int32_t* argmax) {
  const int oh = (h + 2 * pad - kernel) / stride + 1;
  const int ow = (w + 2 * pad - kernel) / stride + 1;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          detail::maxpool_one(in, n_idx, c, h, w, ch, oy, ox, kernel, stride, pad, oh, ow, out,
                              argmax);
}

void maxpool_backward(const double* dout, const int32_t* argmax, int n, int c, int h, int w,
                      int kernel, int stride, int pad, double* din) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
          din[((static_cast<int64_t>(n_idx) * c + ch) * h + iy) * w + ix] =
              detail::maxpool_bwd_one(dout, argmax, n_idx, c, h, w, ch, iy, ix, kernel, stride,
                                      pad);
}

void avgpool2_forward(const double* in, int n, int c, int h, int w, double* out) {
  const int oh = h / 2;
  const int ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(h) * w;
      double* q = out + (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(oh) * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          q[static_cast<int64_t>(oy) * ow + ox] =
              0.25 * (p[static_cast<int64_t>(2 * oy) * w + 2 * ox] +
                      p[static_cast<int64_t>(2 * oy) * w + 2 * ox + 1] +
                      p[static_cast<int64_t>(2 * oy + 1) * w + 2 * ox] +
                      p[static_cast<int64_t>(2 * oy + 1) * w + 2 * ox + 1]);
    }
}

void avgpool2_backward(const double* dout, int n, int c, int h, int w, double* din) {
  const int oh = h / 2;
  const int ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double* q =
          dout + (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(oh) * ow;
      double* p = din + (static_cast<int64_t>(n_idx) * c + ch) * static_cast<int64_t>(h) * w;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
          p[static_cast<int64_t>(iy) * w + ix] =
              0.25 * q[static_cast<int64_t>(iy / 2) * ow + ix / 2];
    }
}

void global_avg_pool_forward(const double* in, int n, int c, int h, int w, double* out) {
  const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double* p = in + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) acc += p[i];
      out[static_cast<int64_t>(n_idx) * c + ch] = acc / static_cast<double>(plane);
    }
}

void global_avg_pool_backward(const double* dout, int n, int c, int h, int w, double* din) {
  const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double g = dout[static_cast<int64_t>(n_idx) * c + ch] / static_cast<double>(plane);
      double* p = din + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) p[i] = g;
    }
}

void relu_forward(const double* in, int64_t size, double* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* dout, int64_t size, double* din) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) din[i] = in[i] > 0.0 ? dout[i] : 0.0;
}

void silu_forward(const double* in, int64_t size, double* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) {
    const double sig = 1.0 / (1.0 + std::exp(-in[i]));
    out[i] = in[i] * sig;
  }
}

void silu_backward(const double* in, const double* dout, int64_t size, double* din) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) {
    const double sig = 1.0 / (1.0 + std::exp(-in[i]));
    din[i] = dout[i] * sig * (1.0 + in[i] * (1.0 - sig));
  }
}

void sigmoid_forward(const double* in, int64_t size, double* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
}

void sigmoid_backward(const double* out, const double* dout, int64_t size, double* din) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) din[i] = dout[i] * out[i] * (1.0 - out[i]);
}

void add_forward(const double* a, const double* b, int64_t size, double* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) out[i] = a[i] + b[i];
}

void channel_scale_forward(const double* x, const double* s, int n, int c, int h, int w,
                           double* out) {
  const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const double scale = s[static_cast<int64_t>(n_idx) * c + ch];
      const double* p = x + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      double* q = out + (static_cast<int64_t>(n_idx) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) q[i] = p[i] * scale;
    }
}

void channel_scale_backward(const double* x, const double* s, const double* dout, int n, int c,
                            int h, int w, double* dx, double* ds) {
  const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch) {
      const int64_t base = (static_cast<int64_t>(n_idx) * c + ch) * plane;
      const double scale = s[static_cast<int64_t>(n_idx) * c + ch];
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) {
        dx[base + i] = dout[base + i] * scale;
        acc += dout[base + i] * x[base + i];
      }
      ds[static_cast<int64_t>(n_idx) * c + ch] = acc;
    }
}

void dropout_apply(const double* in, const double* mask, double keep_prob, int64_t size,
                   double* out) {
  const double inv = 1.0 / keep_prob;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < size; ++i) out[i] = in[i] * mask[i] * inv;
}

}  // namespace morphbench::kernels
