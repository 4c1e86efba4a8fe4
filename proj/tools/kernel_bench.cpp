// Times the OpenMP kernels against their serial reference twins on
// representative layer shapes and checks that both produce bit-identical
// results. Exit status is nonzero if any pair disagrees.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morphbench/kernels.hpp"
#include "morphbench/rng.hpp"

namespace {

using namespace morphbench;
using Clock = std::chrono::steady_clock;

std::vector<double> random_vec(size_t size, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(size);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

double best_seconds(const std::function<void()>& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    const std::chrono::duration<double> dt = Clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Case {
  std::string name;
  std::function<void()> serial_run;
  std::function<void()> parallel_run;
  std::function<bool()> matches;
};

int run_cases(std::vector<Case>& cases, int repeats) {
  std::printf("%-28s  %12s  %12s  %8s  %s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "bitwise");
  bool all_ok = true;
  for (Case& c : cases) {
    const double ts = best_seconds(c.serial_run, repeats);
    const double tp = best_seconds(c.parallel_run, repeats);
    const bool ok = c.matches();
    all_ok = all_ok && ok;
    std::printf("%-28s  %12.3f  %12.3f  %8.2f  %s\n", c.name.c_str(), ts * 1e3, tp * 1e3,
                ts / tp, ok ? "ok" : "MISMATCH");
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel comparison"};
  bool quick = false;
  int threads = 0;
  app.add_flag("--quick", quick, "Small shapes and fewer repeats (smoke test)");
  app.add_option("--threads", threads, "Worker thread cap (default: hardware)");
  CLI11_PARSE(app, argc, argv);
  if (threads >= 1) kernels::set_threads(threads);

  const int repeats = quick ? 2 : 5;
  const int n = quick ? 2 : 8;
  const int side = quick ? 16 : 32;
  const int in_c = 16, out_c = 32;
  std::printf("threads: %d\n", kernels::threads());

  Rng rng(20240817);
  kernels::Conv2dShape conv{in_c, out_c, 3, 1, 1, 1};
  const int out_side = conv.out_side(side);

  const std::vector<double> x =
      random_vec(static_cast<size_t>(n) * in_c * side * side, rng);
  const std::vector<double> w =
      random_vec(static_cast<size_t>(out_c) * in_c * 3 * 3, rng);
  const std::vector<double> b = random_vec(static_cast<size_t>(out_c), rng);
  const std::vector<double> dy =
      random_vec(static_cast<size_t>(n) * out_c * out_side * out_side, rng);

  std::vector<double> y_s(dy.size()), y_p(dy.size());
  std::vector<double> dx_s(x.size()), dx_p(x.size());
  std::vector<double> dw_s(w.size()), dw_p(w.size());
  std::vector<double> db_s(b.size()), db_p(b.size());

  const int fin = quick ? 256 : 1024, fout = quick ? 128 : 512;
  const std::vector<double> fx = random_vec(static_cast<size_t>(n) * fin, rng);
  const std::vector<double> fw = random_vec(static_cast<size_t>(fout) * fin, rng);
  const std::vector<double> fb = random_vec(static_cast<size_t>(fout), rng);
  const std::vector<double> fdy = random_vec(static_cast<size_t>(n) * fout, rng);
  std::vector<double> fy_s(fdy.size()), fy_p(fdy.size());
  std::vector<double> fdx_s(fx.size()), fdx_p(fx.size());
  std::vector<double> fdw_s(fw.size()), fdw_p(fw.size());
  std::vector<double> fdb_s(fb.size()), fdb_p(fb.size());

  const std::vector<double> gamma = random_vec(static_cast<size_t>(in_c), rng, 0.5, 1.5);
  const std::vector<double> beta = random_vec(static_cast<size_t>(in_c), rng);
  const std::vector<double> bn_dy = random_vec(x.size(), rng);
  std::vector<double> bn_y_s(x.size()), bn_y_p(x.size());
  std::vector<double> bn_m_s(in_c), bn_m_p(in_c), bn_v_s(in_c), bn_v_p(in_c);
  std::vector<double> bn_dx_s(x.size()), bn_dx_p(x.size());
  std::vector<double> bn_dg_s(in_c), bn_dg_p(in_c), bn_db_s(in_c), bn_db_p(in_c);

  const int pool_out = (side + 2 * 1 - 3) / 2 + 1;
  const size_t pool_size = static_cast<size_t>(n) * in_c * pool_out * pool_out;
  const std::vector<double> pdy = random_vec(pool_size, rng);
  std::vector<double> p_y_s(pool_size), p_y_p(pool_size);
  std::vector<int32_t> p_am_s(pool_size), p_am_p(pool_size);
  std::vector<double> p_dx_s(x.size()), p_dx_p(x.size());

  std::vector<Case> cases;
  cases.push_back({"conv2d forward",
                   [&] { kernels::serial::conv2d_forward(x.data(), n, side, side, w.data(),
                                                         b.data(), conv, y_s.data()); },
                   [&] { kernels::conv2d_forward(x.data(), n, side, side, w.data(), b.data(),
                                                 conv, y_p.data()); },
                   [&] { return bit_equal(y_s, y_p); }});
  cases.push_back({"conv2d backward data",
                   [&] { kernels::serial::conv2d_backward_data(dy.data(), n, side, side,
                                                               w.data(), conv, dx_s.data()); },
                   [&] { kernels::conv2d_backward_data(dy.data(), n, side, side, w.data(), conv,
                                                       dx_p.data()); },
                   [&] { return bit_equal(dx_s, dx_p); }});
  cases.push_back({"conv2d backward weights",
                   [&] {
                     kernels::serial::conv2d_backward_weights(x.data(), dy.data(), n, side, side,
                                                              conv, dw_s.data(), db_s.data());
                   },
                   [&] {
                     kernels::conv2d_backward_weights(x.data(), dy.data(), n, side, side, conv,
                                                      dw_p.data(), db_p.data());
                   },
                   [&] { return bit_equal(dw_s, dw_p) && bit_equal(db_s, db_p); }});
  cases.push_back({"dense forward",
                   [&] { kernels::serial::dense_forward(fx.data(), n, fin, fw.data(), fb.data(),
                                                        fout, fy_s.data()); },
                   [&] { kernels::dense_forward(fx.data(), n, fin, fw.data(), fb.data(), fout,
                                                fy_p.data()); },
                   [&] { return bit_equal(fy_s, fy_p); }});
  cases.push_back({"dense backward data",
                   [&] { kernels::serial::dense_backward_data(fdy.data(), n, fin, fw.data(),
                                                              fout, fdx_s.data()); },
                   [&] { kernels::dense_backward_data(fdy.data(), n, fin, fw.data(), fout,
                                                      fdx_p.data()); },
                   [&] { return bit_equal(fdx_s, fdx_p); }});
  cases.push_back({"dense backward weights",
                   [&] {
                     kernels::serial::dense_backward_weights(fx.data(), fdy.data(), n, fin, fout,
                                                             fdw_s.data(), fdb_s.data());
                   },
                   [&] {
                     kernels::dense_backward_weights(fx.data(), fdy.data(), n, fin, fout,
                                                     fdw_p.data(), fdb_p.data());
                   },
                   [&] { return bit_equal(fdw_s, fdw_p) && bit_equal(fdb_s, fdb_p); }});
  cases.push_back({"batchnorm forward (train)",
                   [&] {
                     kernels::serial::batchnorm_forward_train(x.data(), n, in_c, side, side,
                                                              gamma.data(), beta.data(), 1e-5,
                                                              bn_y_s.data(), bn_m_s.data(),
                                                              bn_v_s.data());
                   },
                   [&] {
                     kernels::batchnorm_forward_train(x.data(), n, in_c, side, side,
                                                      gamma.data(), beta.data(), 1e-5,
                                                      bn_y_p.data(), bn_m_p.data(),
                                                      bn_v_p.data());
                   },
                   [&] {
                     return bit_equal(bn_y_s, bn_y_p) && bit_equal(bn_m_s, bn_m_p) &&
                            bit_equal(bn_v_s, bn_v_p);
                   }});
  cases.push_back({"batchnorm backward",
                   [&] {
                     kernels::serial::batchnorm_backward(x.data(), bn_dy.data(), n, in_c, side,
                                                         side, gamma.data(), bn_m_s.data(),
                                                         bn_v_s.data(), 1e-5, bn_dx_s.data(),
                                                         bn_dg_s.data(), bn_db_s.data());
                   },
                   [&] {
                     kernels::batchnorm_backward(x.data(), bn_dy.data(), n, in_c, side, side,
                                                 gamma.data(), bn_m_s.data(), bn_v_s.data(),
                                                 1e-5, bn_dx_p.data(), bn_dg_p.data(),
                                                 bn_db_p.data());
                   },
                   [&] {
                     return bit_equal(bn_dx_s, bn_dx_p) && bit_equal(bn_dg_s, bn_dg_p) &&
                            bit_equal(bn_db_s, bn_db_p);
                   }});
  cases.push_back({"maxpool forward",
                   [&] {
                     kernels::serial::maxpool_forward(x.data(), n, in_c, side, side, 3, 2, 1,
                                                      p_y_s.data(), p_am_s.data());
                   },
                   [&] {
                     kernels::maxpool_forward(x.data(), n, in_c, side, side, 3, 2, 1,
                                              p_y_p.data(), p_am_p.data());
                   },
                   [&] {
                     return bit_equal(p_y_s, p_y_p) &&
                            std::memcmp(p_am_s.data(), p_am_p.data(),
                                        p_am_s.size() * sizeof(int32_t)) == 0;
                   }});
  cases.push_back({"maxpool backward",
                   [&] {
                     kernels::serial::maxpool_backward(pdy.data(), p_am_s.data(), n, in_c, side,
                                                       side, 3, 2, 1, p_dx_s.data());
                   },
                   [&] {
                     kernels::maxpool_backward(pdy.data(), p_am_s.data(), n, in_c, side, side, 3,
                                               2, 1, p_dx_p.data());
                   },
                   [&] { return bit_equal(p_dx_s, p_dx_p); }});

  // The batchnorm backward case reads the forward's batch statistics, and
  // maxpool backward reads the forward's argmax; keep the list order.
  return run_cases(cases, repeats);
}
