#include "kernels_detail.hpp"
#include "morphbench/kernels.hpp"

namespace morphbench::kernels::serial {

namespace detail = morphbench::kernels::detail;

void conv2d_forward(const double* in, int n, int h, int w, const double* weights,
                    const double* bias, const Conv2dShape& s, double* out) {
  const int oh = s.out_side(h);
  const int ow = s.out_side(w);
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int oc = 0; oc < s.out_c; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          out[((static_cast<int64_t>(n_idx) * s.out_c + oc) * oh + oy) * ow + ox] =
              detail::conv2d_one(in, n_idx, s.in_c, h, w, oy, ox, oc, weights, bias, s);
}

void conv2d_backward_data(const double* dout, int n, int h, int w, const double* weights,
                          const Conv2dShape& s, double* din) {
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
  for (int oc = 0; oc < s.out_c; ++oc)
    for (int ic = 0; ic < icg; ++ic)
      for (int ky = 0; ky < s.kernel; ++ky)
        for (int kx = 0; kx < s.kernel; ++kx)
          dweights[((static_cast<int64_t>(oc) * icg + ic) * s.kernel + ky) * s.kernel + kx] =
              detail::conv2d_bwd_weight_one(in, dout, n, h, w, oc, ic, ky, kx, s);
  if (dbias) {
    const int oh = s.out_side(h);
    const int ow = s.out_side(w);
    for (int oc = 0; oc < s.out_c; ++oc)
      dbias[oc] = detail::conv2d_bwd_bias_one(dout, n, oh, ow, s.out_c, oc);
  }
}

void dense_forward(const double* in, int n, int fin, const double* weights, const double* bias,
                   int fout, double* out) {
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int o = 0; o < fout; ++o)
      out[static_cast<int64_t>(n_idx) * fout + o] =
          detail::dense_one(in, n_idx, fin, weights, bias, o);
}

void dense_backward_data(const double* dout, int n, int fin, const double* weights, int fout,
                         double* din) {
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int i = 0; i < fin; ++i)
      din[static_cast<int64_t>(n_idx) * fin + i] =
          detail::dense_bwd_data_one(dout, n_idx, fin, weights, fout, i);
}

void dense_backward_weights(const double* in, const double* dout, int n, int fin, int fout,
                            double* dweights, double* dbias) {
  for (int o = 0; o < fout; ++o)
    for (int i = 0; i < fin; ++i)
      dweights[static_cast<int64_t>(o) * fin + i] =
          detail::dense_bwd_weight_one(in, dout, n, fin, fout, o, i);
  if (dbias)
    for (int o = 0; o < fout; ++o) {
      double acc = 0.0;
      for (int n_idx = 0; n_idx < n; ++n_idx) acc += dout[static_cast<int64_t>(n_idx) * fout + o];
      dbias[o] = acc;
    }
}

void batchnorm_forward_train(const double* in, int n, int c, int h, int w, const double* gamma,
                             const double* beta, double eps, double* out, double* batch_mean,
                             double* batch_var) {
  for (int ch = 0; ch < c; ++ch)
    detail::batchnorm_train_channel(in, n, c, h, w, ch, gamma, beta, eps, out, batch_mean,
                                    batch_var);
}

void batchnorm_backward(const double* in, const double* dout, int n, int c, int h, int w,
                        const double* gamma, const double* batch_mean, const double* batch_var,
                        double eps, double* din, double* dgamma, double* dbeta) {
  for (int ch = 0; ch < c; ++ch)
    detail::batchnorm_backward_channel(in, dout, n, c, h, w, ch, gamma, batch_mean, batch_var,
                                       eps, din, dgamma, dbeta);
}

void maxpool_forward(const double* in, int n, int c, int h, int w, int kernel, int stride,
                     int pad, double* out, int32_t* argmax) {
  const int oh = (h + 2 * pad - kernel) / stride + 1;
  const int ow = (w + 2 * pad - kernel) / stride + 1;
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          detail::maxpool_one(in, n_idx, c, h, w, ch, oy, ox, kernel, stride, pad, oh, ow, out,
                              argmax);
}

void maxpool_backward(const double* dout, const int32_t* argmax, int n, int c, int h, int w,
                      int kernel, int stride, int pad, double* din) {
  for (int n_idx = 0; n_idx < n; ++n_idx)
    for (int ch = 0; ch < c; ++ch)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
          din[((static_cast<int64_t>(n_idx) * c + ch) * h + iy) * w + ix] =
              detail::maxpool_bwd_one(dout, argmax, n_idx, c, h, w, ch, iy, ix, kernel, stride,
                                      pad);
}

}  // namespace morphbench::kernels::serial
