#pragma once

#include <cstdint>

// Numeric kernels behind the network layers. Every kernel exists twice: the
// default entry points run OpenMP-parallel loops, and kernels::serial holds
// the single-threaded reference implementations used by the equivalence
// tests and the benchmark. Both variants compute each output element with
// the same serial reduction order, so results are bit-identical regardless
// of thread count.
namespace morphbench::kernels {

// Worker thread cap (also settable via the MORPHBENCH_THREADS variable,
// which the CLI applies at startup). Values < 1 reset to the hardware
// default.
void set_threads(int n);
int threads();

struct Conv2dShape {
  int in_c = 0;
  int out_c = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  int groups = 1;

  int out_side(int in_side) const { return (in_side + 2 * pad - kernel) / stride + 1; }
};

// Convolution, NCHW activations, [out_c, in_c/groups, k, k] weights.
void conv2d_forward(const double* in, int n, int h, int w, const double* weights,
                    const double* bias, const Conv2dShape& s, double* out);
void conv2d_backward_data(const double* dout, int n, int h, int w, const double* weights,
                          const Conv2dShape& s, double* din);
void conv2d_backward_weights(const double* in, const double* dout, int n, int h, int w,
                             const Conv2dShape& s, double* dweights, double* dbias);

// Fully connected: in [n, fin], weights [fout, fin], bias [fout] or null.
void dense_forward(const double* in, int n, int fin, const double* weights, const double* bias,
                   int fout, double* out);
void dense_backward_data(const double* dout, int n, int fin, const double* weights, int fout,
                         double* din);
void dense_backward_weights(const double* in, const double* dout, int n, int fin, int fout,
                            double* dweights, double* dbias);

// Batch normalization over (n, h, w) per channel. Training mode emits the
// biased batch statistics for the caller to cache and fold into running
// averages; backward recomputes the normalized values from them.
void batchnorm_forward_train(const double* in, int n, int c, int h, int w, const double* gamma,
                             const double* beta, double eps, double* out, double* batch_mean,
                             double* batch_var);
void batchnorm_forward_eval(const double* in, int n, int c, int h, int w, const double* gamma,
                            const double* beta, const double* run_mean, const double* run_var,
                            double eps, double* out);
void batchnorm_backward(const double* in, const double* dout, int n, int c, int h, int w,
                        const double* gamma, const double* batch_mean, const double* batch_var,
                        double eps, double* din, double* dgamma, double* dbeta);

// Max pooling; padding cells count as -inf. argmax records the winning flat
// (y * w + x) index per output element and drives the gather-form backward.
void maxpool_forward(const double* in, int n, int c, int h, int w, int kernel, int stride,
                     int pad, double* out, int32_t* argmax);
void maxpool_backward(const double* dout, const int32_t* argmax, int n, int c, int h, int w,
                      int kernel, int stride, int pad, double* din);

// 2x2/2 average pooling (transition layers); input sides must be even.
void avgpool2_forward(const double* in, int n, int c, int h, int w, double* out);
void avgpool2_backward(const double* dout, int n, int c, int h, int w, double* din);

void global_avg_pool_forward(const double* in, int n, int c, int h, int w, double* out);
void global_avg_pool_backward(const double* dout, int n, int c, int h, int w, double* din);

// Elementwise activations on flat arrays.
void relu_forward(const double* in, int64_t size, double* out);
void relu_backward(const double* in, const double* dout, int64_t size, double* din);
void silu_forward(const double* in, int64_t size, double* out);
void silu_backward(const double* in, const double* dout, int64_t size, double* din);
void sigmoid_forward(const double* in, int64_t size, double* out);
void sigmoid_backward(const double* out, const double* dout, int64_t size, double* din);

void add_forward(const double* a, const double* b, int64_t size, double* out);

// Per-channel scaling (squeeze-excitation apply): x [n,c,h,w] * s [n,c].
void channel_scale_forward(const double* x, const double* s, int n, int c, int h, int w,
                           double* out);
void channel_scale_backward(const double* x, const double* s, const double* dout, int n, int c,
                            int h, int w, double* dx, double* ds);

// Inverted dropout: y = x * mask / keep_prob, mask in {0,1}.
void dropout_apply(const double* in, const double* mask, double keep_prob, int64_t size,
                   double* out);

namespace serial {
void conv2d_forward(const double* in, int n, int h, int w, const double* weights,
                    const double* bias, const Conv2dShape& s, double* out);
void conv2d_backward_data(const double* dout, int n, int h, int w, const double* weights,
                          const Conv2dShape& s, double* din);
void conv2d_backward_weights(const double* in, const double* dout, int n, int h, int w,
                             const Conv2dShape& s, double* dweights, double* dbias);
void dense_forward(const double* in, int n, int fin, const double* weights, const double* bias,
                   int fout, double* out);
void dense_backward_data(const double* dout, int n, int fin, const double* weights, int fout,
                         double* din);
void dense_backward_weights(const double* in, const double* dout, int n, int fin, int fout,
                            double* dweights, double* dbias);
void batchnorm_forward_train(const double* in, int n, int c, int h, int w, const double* gamma,
                             const double* beta, double eps, double* out, double* batch_mean,
                             double* batch_var);
void batchnorm_backward(const double* in, const double* dout, int n, int c, int h, int w,
                        const double* gamma, const double* batch_mean, const double* batch_var,
                        double eps, double* din, double* dgamma, double* dbeta);
void maxpool_forward(const double* in, int n, int c, int h, int w, int kernel, int stride,
                     int pad, double* out, int32_t* argmax);
void maxpool_backward(const double* dout, const int32_t* argmax, int n, int c, int h, int w,
                      int kernel, int stride, int pad, double* din);
}  // namespace serial

}  // namespace morphbench::kernels
