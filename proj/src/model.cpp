#include "morphbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace morphbench {

namespace {

namespace k = morphbench::kernels;

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // run <- 0.9 run + 0.1 batch

struct GraphBuilder {
  NetworkDescription net;
  int auto_id = 0;

  int push(LayerNode n) {
    net.nodes.push_back(std::move(n));
    return static_cast<int>(net.nodes.size()) - 1;
  }
  std::string anon(const char* base) { return std::string(base) + std::to_string(auto_id++); }

  int input(int side) {
    net.input_side = side;
    LayerNode n;
    n.kind = LayerKind::input;
    n.name = "input";
    return push(std::move(n));
  }
  int conv(int in, std::string name, int in_c, int out_c, int kernel, int stride, int pad,
           int groups, bool bias) {
    LayerNode n;
    n.kind = LayerKind::conv;
    n.name = std::move(name);
    n.inputs = {in};
    n.conv = {in_c, out_c, kernel, stride, pad, groups};
    n.conv_bias = bias;
    return push(std::move(n));
  }
  int bn(int in, std::string name, int channels) {
    LayerNode n;
    n.kind = LayerKind::batchnorm;
    n.name = std::move(name);
    n.inputs = {in};
    n.channels = channels;
    return push(std::move(n));
  }
  int unary(int in, LayerKind kind, const char* base) {
    LayerNode n;
    n.kind = kind;
    n.name = anon(base);
    n.inputs = {in};
    return push(std::move(n));
  }
  int relu(int in) { return unary(in, LayerKind::relu, "relu"); }
  int silu(int in) { return unary(in, LayerKind::silu, "silu"); }
  int sigmoid(int in) { return unary(in, LayerKind::sigmoid, "sigmoid"); }
  int maxpool(int in, int kernel, int stride, int pad) {
    LayerNode n;
    n.kind = LayerKind::maxpool;
    n.name = anon("maxpool");
    n.inputs = {in};
    n.pool_kernel = kernel;
    n.pool_stride = stride;
    n.pool_pad = pad;
    return push(std::move(n));
  }
  int avgpool2(int in) { return unary(in, LayerKind::avgpool2, "avgpool"); }
  int gap(int in) { return unary(in, LayerKind::global_avg_pool, "gap"); }
  int dense(int in, std::string name, int fin, int fout, bool head) {
    LayerNode n;
    n.kind = LayerKind::dense;
    n.name = std::move(name);
    n.inputs = {in};
    n.dense_in = fin;
    n.dense_out = fout;
    n.head_dense = head;
    return push(std::move(n));
  }
  int dropout(int in, double rate) {
    LayerNode n;
    n.kind = LayerKind::dropout;
    n.name = anon("dropout");
    n.inputs = {in};
    n.dropout_rate = rate;
    return push(std::move(n));
  }
  int add2(int a, int b) {
    LayerNode n;
    n.kind = LayerKind::add;
    n.name = anon("add");
    n.inputs = {a, b};
    return push(std::move(n));
  }
  int concat(std::vector<int> ins) {
    LayerNode n;
    n.kind = LayerKind::concat;
    n.name = anon("concat");
    n.inputs = std::move(ins);
    return push(std::move(n));
  }
  int channel_scale(int x, int s) {
    LayerNode n;
    n.kind = LayerKind::channel_scale;
    n.name = anon("scale");
    n.inputs = {x, s};
    return push(std::move(n));
  }
  int squash(int in) { return unary(in, LayerKind::squash, "squash"); }
};

// 1x1 reduce -> 3x3 (carries the stride) -> 1x1 expand, with identity or
// projected shortcut.
int bottleneck(GraphBuilder& g, const std::string& prefix, int x, int in_c, int mid, int out_c,
               int stride) {
  int shortcut = x;
  int y = g.conv(x, prefix + ".conv1", in_c, mid, 1, 1, 0, 1, false);
  y = g.bn(y, prefix + ".bn1", mid);
  y = g.relu(y);
  y = g.conv(y, prefix + ".conv2", mid, mid, 3, stride, 1, 1, false);
  y = g.bn(y, prefix + ".bn2", mid);
  y = g.relu(y);
  y = g.conv(y, prefix + ".conv3", mid, out_c, 1, 1, 0, 1, false);
  y = g.bn(y, prefix + ".bn3", out_c);
  if (stride != 1 || in_c != out_c) {
    shortcut = g.conv(x, prefix + ".down.conv", in_c, out_c, 1, stride, 0, 1, false);
    shortcut = g.bn(shortcut, prefix + ".down.bn", out_c);
  }
  y = g.add2(y, shortcut);
  return g.relu(y);
}

// Bottleneck-residual stack: 50-layer layout for full, a 3-stage reduction
// with the same block structure for tiny.
std::pair<int, int> residual_core(GraphBuilder& g, int x, bool tiny) {
  const int stem_c = tiny ? 8 : 64;
  x = g.conv(x, "stem.conv", 1, stem_c, tiny ? 5 : 7, tiny ? 4 : 2, tiny ? 2 : 3, 1, false);
  x = g.bn(x, "stem.bn", stem_c);
  x = g.relu(x);
  x = g.maxpool(x, 3, 2, 1);
  const std::vector<int> mids = tiny ? std::vector<int>{8, 16, 32}
                                     : std::vector<int>{64, 128, 256, 512};
  const std::vector<int> blocks = tiny ? std::vector<int>{1, 2, 3}
                                       : std::vector<int>{3, 4, 6, 3};
  const int expansion = tiny ? 2 : 4;
  int c = stem_c;
  for (size_t s_i = 0; s_i < mids.size(); ++s_i) {
    const int out_c = mids[s_i] * expansion;
    const int stage_stride = s_i == 0 ? 1 : 2;
    for (int b = 0; b < blocks[s_i]; ++b) {
      const std::string prefix =
          "stage" + std::to_string(s_i + 1) + ".block" + std::to_string(b);
      x = bottleneck(g, prefix, x, c, mids[s_i], out_c, b == 0 ? stage_stride : 1);
      c = out_c;
    }
  }
  return {x, c};
}

// Densely connected stack: each layer sees the concatenation of everything
// before it in the block; transitions halve channels and spatial size.
std::pair<int, int> dense_core(GraphBuilder& g, int x, bool tiny) {
  const int stem_c = tiny ? 16 : 64;
  const int growth = tiny ? 8 : 32;
  const int bneck = tiny ? 16 : 128;
  const std::vector<int> blocks = tiny ? std::vector<int>{2, 4, 16}
                                       : std::vector<int>{6, 12, 24, 16};
  x = g.conv(x, "stem.conv", 1, stem_c, tiny ? 5 : 7, tiny ? 4 : 2, tiny ? 2 : 3, 1, false);
  x = g.bn(x, "stem.bn", stem_c);
  x = g.relu(x);
  x = g.maxpool(x, 3, 2, 1);
  int c = stem_c;
  for (size_t bl = 0; bl < blocks.size(); ++bl) {
    for (int l = 0; l < blocks[bl]; ++l) {
      const std::string prefix =
          "block" + std::to_string(bl + 1) + ".layer" + std::to_string(l);
      int y = g.bn(x, prefix + ".bn1", c);
      y = g.relu(y);
      y = g.conv(y, prefix + ".conv1", c, bneck, 1, 1, 0, 1, false);
      y = g.bn(y, prefix + ".bn2", bneck);
      y = g.relu(y);
      y = g.conv(y, prefix + ".conv2", bneck, growth, 3, 1, 1, 1, false);
      x = g.concat({x, y});
      c += growth;
    }
    if (bl + 1 < blocks.size()) {
      const std::string prefix = "transition" + std::to_string(bl + 1);
      x = g.bn(x, prefix + ".bn", c);
      x = g.relu(x);
      const int half = c / 2;
      x = g.conv(x, prefix + ".conv", c, half, 1, 1, 0, 1, false);
      x = g.avgpool2(x);
      c = half;
    }
  }
  x = g.bn(x, "final.bn", c);
  x = g.relu(x);
  return {x, c};
}

struct MbStage {
  int expand;
  int kernel;
  int stride;
  int out;
  int repeat;
};

// Mobile inverted bottleneck with squeeze-excitation; residual only for
// stride-1 same-width blocks. The squeeze width follows the block's input
// channel count.
int mbconv(GraphBuilder& g, const std::string& prefix, int x, int in_c, int out_c, int expand,
           int kernel, int stride) {
  const int shortcut = x;
  const int c = in_c * expand;
  int y = x;
  if (expand != 1) {
    y = g.conv(y, prefix + ".expand.conv", in_c, c, 1, 1, 0, 1, false);
    y = g.bn(y, prefix + ".expand.bn", c);
    y = g.silu(y);
  }
  y = g.conv(y, prefix + ".dw.conv", c, c, kernel, stride, kernel / 2, c, false);
  y = g.bn(y, prefix + ".dw.bn", c);
  y = g.silu(y);
  const int squeeze = std::max(1, in_c / 4);
  int s = g.gap(y);
  s = g.dense(s, prefix + ".se.reduce", c, squeeze, false);
  s = g.silu(s);
  s = g.dense(s, prefix + ".se.expand", squeeze, c, false);
  s = g.sigmoid(s);
  y = g.channel_scale(y, s);
  y = g.conv(y, prefix + ".project.conv", c, out_c, 1, 1, 0, 1, false);
  y = g.bn(y, prefix + ".project.bn", out_c);
  if (stride == 1 && in_c == out_c) y = g.add2(y, shortcut);
  return y;
}

std::pair<int, int> compound_core(GraphBuilder& g, int x, bool tiny) {
  const int stem_c = tiny ? 16 : 32;
  x = g.conv(x, "stem.conv", 1, stem_c, 3, tiny ? 4 : 2, 1, 1, false);
  x = g.bn(x, "stem.bn", stem_c);
  x = g.silu(x);
  const std::vector<MbStage> stages =
      tiny ? std::vector<MbStage>{{1, 3, 2, 16, 1}, {4, 5, 2, 24, 2}, {4, 5, 2, 48, 2}}
           : std::vector<MbStage>{{1, 3, 1, 16, 1}, {6, 3, 2, 24, 2}, {6, 5, 2, 40, 2},
                                  {6, 3, 2, 80, 3}, {6, 5, 1, 112, 3}, {6, 5, 2, 192, 4},
                                  {6, 3, 1, 320, 1}};
  int c = stem_c;
  for (size_t s_i = 0; s_i < stages.size(); ++s_i) {
    const MbStage& st = stages[s_i];
    for (int b = 0; b < st.repeat; ++b) {
      const std::string prefix =
          "stage" + std::to_string(s_i + 1) + ".block" + std::to_string(b);
      x = mbconv(g, prefix, x, c, st.out, st.expand, st.kernel, b == 0 ? st.stride : 1);
      c = st.out;
    }
  }
  const int head_c = tiny ? 128 : 1280;
  x = g.conv(x, "head.conv", c, head_c, 1, 1, 0, 1, false);
  x = g.bn(x, "head.bn", head_c);
  x = g.silu(x);
  return {x, head_c};
}

}  // namespace

NetworkDescription build_network(std::string_view family, std::string_view config,
                                 int output_width, double dropout_rate) {
  if (config != "full" && config != "tiny")
    throw std::invalid_argument("unknown config: " + std::string(config));
  const bool tiny = config == "tiny";
  GraphBuilder g;
  g.net.family = std::string(family);
  g.net.config = std::string(config);
  g.net.dropout_rate = dropout_rate;
  g.net.output_width = output_width;
  const int x = g.input(224);
  std::pair<int, int> core;  // (node, channels)
  if (family == "residual")
    core = residual_core(g, x, tiny);
  else if (family == "dense-connect")
    core = dense_core(g, x, tiny);
  else if (family == "compound-scaled")
    core = compound_core(g, x, tiny);
  else
    throw std::invalid_argument("unknown family: " + std::string(family));
  int y = g.gap(core.first);
  y = g.dropout(y, dropout_rate);
  y = g.dense(y, "head.fc", core.second, output_width, true);
  g.net.output = g.squash(y);
  return std::move(g.net);
}

ParameterSet init_parameters(const NetworkDescription& net, uint64_t seed) {
  ParameterSet p;
  uint64_t base = hash_str(hash_u64(0x6d6f64656cULL, seed), net.family);
  base = hash_str(base, net.config);
  for (const LayerNode& n : net.nodes) {
    switch (n.kind) {
      case LayerKind::conv: {
        Tensor w({n.conv.out_c, n.conv.in_c / n.conv.groups, n.conv.kernel, n.conv.kernel});
        const double fan_in =
            static_cast<double>(n.conv.in_c / n.conv.groups) * n.conv.kernel * n.conv.kernel;
        const double stddev = std::sqrt(2.0 / fan_in);
        Rng rng(hash_str(base, n.name));
        for (double& v : w.data) v = stddev * rng.normal();
        p.add(n.name + ".weight", std::move(w), true);
        if (n.conv_bias) p.add(n.name + ".bias", Tensor({n.conv.out_c}), true);
        break;
      }
      case LayerKind::batchnorm: {
        Tensor gamma({n.channels});
        std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
        Tensor run_var({n.channels});
        std::fill(run_var.data.begin(), run_var.data.end(), 1.0);
        p.add(n.name + ".gamma", std::move(gamma), true);
        p.add(n.name + ".beta", Tensor({n.channels}), true);
        p.add(n.name + ".run_mean", Tensor({n.channels}), false);
        p.add(n.name + ".run_var", std::move(run_var), false);
        break;
      }
      case LayerKind::dense: {
        Tensor w({n.dense_out, n.dense_in});
        Rng rng(hash_str(base, n.name));
        if (n.head_dense) {
          for (double& v : w.data) v = rng.uniform(-0.01, 0.01);
        } else {
          // squeeze-excitation layers are 1x1 convolutions in spirit
          const double stddev = std::sqrt(2.0 / n.dense_in);
          for (double& v : w.data) v = stddev * rng.normal();
        }
        p.add(n.name + ".weight", std::move(w), true);
        p.add(n.name + ".bias", Tensor({n.dense_out}), true);
        break;
      }
      default:
        break;
    }
  }
  return p;
}

std::pair<NetworkDescription, ParameterSet> build_model(std::string_view family,
                                                        std::string_view config,
                                                        const DecisionTreeSchema& schema,
                                                        double dropout_rate, uint64_t seed) {
  NetworkDescription net = build_network(family, config, schema.total_answers(), dropout_rate);
  ParameterSet params = init_parameters(net, seed);
  return {std::move(net), std::move(params)};
}

ModelRuntime::ModelRuntime(const NetworkDescription& net) : net_(&net) { infer_shapes(); }

void ModelRuntime::infer_shapes() {
  const auto& nodes = net_->nodes;
  shapes_.assign(nodes.size(), NodeShape{});
  for (size_t i = 0; i < nodes.size(); ++i) {
    const LayerNode& n = nodes[i];
    NodeShape& sh = shapes_[i];
    const NodeShape* in = n.inputs.empty() ? nullptr : &shapes_[n.inputs[0]];
    switch (n.kind) {
      case LayerKind::input:
        sh = {false, 1, net_->input_side, net_->input_side};
        break;
      case LayerKind::conv:
        if (in->flat || in->c != n.conv.in_c)
          throw std::logic_error("conv input mismatch at " + n.name);
        sh = {false, n.conv.out_c, n.conv.out_side(in->h), n.conv.out_side(in->w)};
        break;
      case LayerKind::batchnorm:
        if (in->flat || in->c != n.channels)
          throw std::logic_error("batchnorm input mismatch at " + n.name);
        sh = *in;
        break;
      case LayerKind::relu:
      case LayerKind::silu:
      case LayerKind::sigmoid:
      case LayerKind::dropout:
      case LayerKind::squash:
        sh = *in;
        break;
      case LayerKind::maxpool:
        sh = {false, in->c,
              (in->h + 2 * n.pool_pad - n.pool_kernel) / n.pool_stride + 1,
              (in->w + 2 * n.pool_pad - n.pool_kernel) / n.pool_stride + 1};
        break;
      case LayerKind::avgpool2:
        if (in->h % 2 != 0 || in->w % 2 != 0)
          throw std::logic_error("avgpool2 needs even sides at " + n.name);
        sh = {false, in->c, in->h / 2, in->w / 2};
        break;
      case LayerKind::global_avg_pool:
        sh = {true, in->c, 0, 0};
        break;
      case LayerKind::dense:
        if (!in->flat || in->c != n.dense_in)
          throw std::logic_error("dense input mismatch at " + n.name);
        sh = {true, n.dense_out, 0, 0};
        break;
      case LayerKind::add: {
        const NodeShape& b = shapes_[n.inputs[1]];
        if (in->flat != b.flat || in->c != b.c || in->h != b.h || in->w != b.w)
          throw std::logic_error("add operand mismatch at " + n.name);
        sh = *in;
        break;
      }
      case LayerKind::concat: {
        int total = 0;
        for (int inp : n.inputs) {
          const NodeShape& s = shapes_[inp];
          if (s.flat || s.h != in->h || s.w != in->w)
            throw std::logic_error("concat operand mismatch at " + n.name);
          total += s.c;
        }
        sh = {false, total, in->h, in->w};
        break;
      }
      case LayerKind::channel_scale: {
        const NodeShape& s = shapes_[n.inputs[1]];
        if (in->flat || !s.flat || s.c != in->c)
          throw std::logic_error("channel_scale operand mismatch at " + n.name);
        sh = *in;
        break;
      }
    }
  }
}

int ModelRuntime::param_index(const std::string& tensor_name, const ParameterSet& params) const {
  for (size_t i = 0; i < params.names.size(); ++i)
    if (params.names[i] == tensor_name) return static_cast<int>(i);
  throw std::invalid_argument("parameter set is missing tensor " + tensor_name);
}

Tensor ModelRuntime::forward(const Tensor& batch, ParameterSet& params, RunMode mode, Rng* rng) {
  if (batch.shape.size() != 4 || batch.dim(1) != 1 || batch.dim(2) != net_->input_side ||
      batch.dim(3) != net_->input_side)
    throw std::invalid_argument("forward expects [n, 1, " + std::to_string(net_->input_side) +
                                ", " + std::to_string(net_->input_side) + "] input");
  const int n = batch.dim(0);
  const auto& nodes = net_->nodes;
  const bool training = mode == RunMode::training;

  act_.assign(nodes.size(), Tensor());
  bn_mean_.assign(nodes.size(), Tensor());
  bn_var_.assign(nodes.size(), Tensor());
  dropout_mask_.assign(nodes.size(), Tensor());
  pool_argmax_.assign(nodes.size(), {});

  auto make_act = [&](size_t i) {
    const NodeShape& sh = shapes_[i];
    return sh.flat ? Tensor({n, sh.c}) : Tensor({n, sh.c, sh.h, sh.w});
  };

  act_[0] = batch;
  for (size_t i = 1; i < nodes.size(); ++i) {
    const LayerNode& node = nodes[i];
    const int inp = node.inputs.empty() ? -1 : node.inputs[0];
    const NodeShape& ish = shapes_[inp];
    const Tensor& x = act_[inp];
    Tensor out = make_act(i);
    switch (node.kind) {
      case LayerKind::input:
        break;
      case LayerKind::conv: {
        const Tensor& w = params.tensors[param_index(node.name + ".weight", params)];
        const double* bias =
            node.conv_bias ? params.tensors[param_index(node.name + ".bias", params)].ptr()
                           : nullptr;
        k::conv2d_forward(x.ptr(), n, ish.h, ish.w, w.ptr(), bias, node.conv, out.ptr());
        break;
      }
      case LayerKind::batchnorm: {
        const Tensor& gamma = params.tensors[param_index(node.name + ".gamma", params)];
        const Tensor& beta = params.tensors[param_index(node.name + ".beta", params)];
        Tensor& run_mean = params.tensors[param_index(node.name + ".run_mean", params)];
        Tensor& run_var = params.tensors[param_index(node.name + ".run_var", params)];
        if (training) {
          Tensor bm({node.channels});
          Tensor bv({node.channels});
          k::batchnorm_forward_train(x.ptr(), n, node.channels, ish.h, ish.w, gamma.ptr(),
                                     beta.ptr(), kBnEps, out.ptr(), bm.ptr(), bv.ptr());
          for (int c = 0; c < node.channels; ++c) {
            run_mean[c] = kBnMomentum * run_mean[c] + (1.0 - kBnMomentum) * bm[c];
            run_var[c] = kBnMomentum * run_var[c] + (1.0 - kBnMomentum) * bv[c];
          }
          bn_mean_[i] = std::move(bm);
          bn_var_[i] = std::move(bv);
        } else {
          k::batchnorm_forward_eval(x.ptr(), n, node.channels, ish.h, ish.w, gamma.ptr(),
                                    beta.ptr(), run_mean.ptr(), run_var.ptr(), kBnEps,
                                    out.ptr());
        }
        break;
      }
      case LayerKind::relu:
        k::relu_forward(x.ptr(), x.size(), out.ptr());
        break;
      case LayerKind::silu:
        k::silu_forward(x.ptr(), x.size(), out.ptr());
        break;
      case LayerKind::sigmoid:
        k::sigmoid_forward(x.ptr(), x.size(), out.ptr());
        break;
      case LayerKind::maxpool: {
        std::vector<int32_t> argmax(static_cast<size_t>(out.size()));
        k::maxpool_forward(x.ptr(), n, ish.c, ish.h, ish.w, node.pool_kernel, node.pool_stride,
                           node.pool_pad, out.ptr(), argmax.data());
        pool_argmax_[i] = std::move(argmax);
        break;
      }
      case LayerKind::avgpool2:
        k::avgpool2_forward(x.ptr(), n, ish.c, ish.h, ish.w, out.ptr());
        break;
      case LayerKind::global_avg_pool:
        k::global_avg_pool_forward(x.ptr(), n, ish.c, ish.h, ish.w, out.ptr());
        break;
      case LayerKind::dense: {
        const Tensor& w = params.tensors[param_index(node.name + ".weight", params)];
        const Tensor& b = params.tensors[param_index(node.name + ".bias", params)];
        k::dense_forward(x.ptr(), n, node.dense_in, w.ptr(), b.ptr(), node.dense_out, out.ptr());
        break;
      }
      case LayerKind::dropout: {
        const double rate = node.dropout_rate;
        if (mode == RunMode::deterministic || rate <= 0.0) {
          out = x;  // exact identity, including rate 0 in stochastic modes
        } else {
          if (rng == nullptr)
            throw std::invalid_argument("dropout is active but no rng was supplied");
          const double keep = 1.0 - rate;
          Tensor mask(out.shape);
          for (int64_t j = 0; j < mask.size(); ++j)
            mask[j] = rng->uniform() < keep ? 1.0 : 0.0;
          k::dropout_apply(x.ptr(), mask.ptr(), keep, x.size(), out.ptr());
          dropout_mask_[i] = std::move(mask);
        }
        break;
      }
      case LayerKind::add:
        k::add_forward(x.ptr(), act_[node.inputs[1]].ptr(), x.size(), out.ptr());
        break;
      case LayerKind::concat: {
        const NodeShape& osh = shapes_[i];
        const int64_t hw = static_cast<int64_t>(osh.h) * osh.w;
        int off = 0;
        for (int src : node.inputs) {
          const int cj = shapes_[src].c;
          const Tensor& t = act_[src];
          for (int n_idx = 0; n_idx < n; ++n_idx)
            std::copy(t.ptr() + static_cast<int64_t>(n_idx) * cj * hw,
                      t.ptr() + static_cast<int64_t>(n_idx + 1) * cj * hw,
                      out.ptr() + (static_cast<int64_t>(n_idx) * osh.c + off) * hw);
          off += cj;
        }
        break;
      }
      case LayerKind::channel_scale:
        k::channel_scale_forward(x.ptr(), act_[node.inputs[1]].ptr(), n, ish.c, ish.h, ish.w,
                                 out.ptr());
        break;
      case LayerKind::squash: {
        k::sigmoid_forward(x.ptr(), x.size(), out.ptr());
        // Saturated sigmoids would land exactly on the interval bounds in
        // floating point; stop at the nearest representable interior values
        // so downstream concentration checks stay valid.
        const double lo = std::nextafter(1.0, 100.0);
        const double hi = std::nextafter(100.0, 1.0);
        for (int64_t j = 0; j < out.size(); ++j)
          out[j] = std::min(std::max(1.0 + 99.0 * out[j], lo), hi);
        break;
      }
    }
    act_[i] = std::move(out);
  }

  trace_n_ = n;
  trace_valid_ = training;
  return act_[static_cast<size_t>(net_->output)];
}

void ModelRuntime::backward(const Tensor& dconcentration, const ParameterSet& params,
                            ParameterSet& grads) {
  if (!trace_valid_)
    throw std::logic_error("backward requires a training-mode forward for this batch");
  const int n = trace_n_;
  if (dconcentration.shape != std::vector<int>{n, net_->output_width})
    throw std::invalid_argument("upstream gradient shape mismatch");
  const auto& nodes = net_->nodes;

  std::vector<Tensor> gbuf(nodes.size());
  gbuf[static_cast<size_t>(net_->output)] = dconcentration;

  auto accumulate = [&](int target, Tensor&& t) {
    if (target == 0) return;  // the input consumes no gradient
    Tensor& g = gbuf[static_cast<size_t>(target)];
    if (g.size() == 0) {
      g = std::move(t);
    } else {
      for (int64_t j = 0; j < g.size(); ++j) g[j] += t[j];
    }
  };

  for (int i = static_cast<int>(nodes.size()) - 1; i >= 1; --i) {
    if (gbuf[static_cast<size_t>(i)].size() == 0) continue;
    Tensor dy = std::move(gbuf[static_cast<size_t>(i)]);
    const LayerNode& node = nodes[static_cast<size_t>(i)];
    const int inp = node.inputs[0];
    const NodeShape& ish = shapes_[static_cast<size_t>(inp)];
    switch (node.kind) {
      case LayerKind::input:
        break;
      case LayerKind::conv: {
        const Tensor& w = params.tensors[param_index(node.name + ".weight", params)];
        Tensor& gw = grads.tensors[param_index(node.name + ".weight", grads)];
        double* gb = node.conv_bias
                         ? grads.tensors[param_index(node.name + ".bias", grads)].ptr()
                         : nullptr;
        k::conv2d_backward_weights(act_[static_cast<size_t>(inp)].ptr(), dy.ptr(), n, ish.h,
                                   ish.w, node.conv, gw.ptr(), gb);
        if (inp != 0) {
          Tensor din({n, ish.c, ish.h, ish.w});
          k::conv2d_backward_data(dy.ptr(), n, ish.h, ish.w, w.ptr(), node.conv, din.ptr());
          accumulate(inp, std::move(din));
        }
        break;
      }
      case LayerKind::batchnorm: {
        const Tensor& gamma = params.tensors[param_index(node.name + ".gamma", params)];
        Tensor& dgamma = grads.tensors[param_index(node.name + ".gamma", grads)];
        Tensor& dbeta = grads.tensors[param_index(node.name + ".beta", grads)];
        Tensor din({n, ish.c, ish.h, ish.w});
        k::batchnorm_backward(act_[static_cast<size_t>(inp)].ptr(), dy.ptr(), n, node.channels,
                              ish.h, ish.w, gamma.ptr(), bn_mean_[static_cast<size_t>(i)].ptr(),
                              bn_var_[static_cast<size_t>(i)].ptr(), kBnEps, din.ptr(),
                              dgamma.ptr(), dbeta.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::relu: {
        Tensor din(dy.shape);
        k::relu_backward(act_[static_cast<size_t>(inp)].ptr(), dy.ptr(), dy.size(), din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::silu: {
        Tensor din(dy.shape);
        k::silu_backward(act_[static_cast<size_t>(inp)].ptr(), dy.ptr(), dy.size(), din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::sigmoid: {
        Tensor din(dy.shape);
        k::sigmoid_backward(act_[static_cast<size_t>(i)].ptr(), dy.ptr(), dy.size(), din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::maxpool: {
        Tensor din({n, ish.c, ish.h, ish.w});
        k::maxpool_backward(dy.ptr(), pool_argmax_[static_cast<size_t>(i)].data(), n, ish.c,
                            ish.h, ish.w, node.pool_kernel, node.pool_stride, node.pool_pad,
                            din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::avgpool2: {
        Tensor din({n, ish.c, ish.h, ish.w});
        k::avgpool2_backward(dy.ptr(), n, ish.c, ish.h, ish.w, din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::global_avg_pool: {
        Tensor din({n, ish.c, ish.h, ish.w});
        k::global_avg_pool_backward(dy.ptr(), n, ish.c, ish.h, ish.w, din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::dense: {
        const Tensor& w = params.tensors[param_index(node.name + ".weight", params)];
        Tensor& gw = grads.tensors[param_index(node.name + ".weight", grads)];
        Tensor& gb = grads.tensors[param_index(node.name + ".bias", grads)];
        k::dense_backward_weights(act_[static_cast<size_t>(inp)].ptr(), dy.ptr(), n,
                                  node.dense_in, node.dense_out, gw.ptr(), gb.ptr());
        Tensor din({n, node.dense_in});
        k::dense_backward_data(dy.ptr(), n, node.dense_in, w.ptr(), node.dense_out, din.ptr());
        accumulate(inp, std::move(din));
        break;
      }
      case LayerKind::dropout: {
        const Tensor& mask = dropout_mask_[static_cast<size_t>(i)];
        if (mask.size() == 0) {
          accumulate(inp, std::move(dy));
        } else {
          Tensor din(dy.shape);
          k::dropout_apply(dy.ptr(), mask.ptr(), 1.0 - node.dropout_rate, dy.size(), din.ptr());
          accumulate(inp, std::move(din));
        }
        break;
      }
      case LayerKind::add: {
        Tensor copy = dy;
        accumulate(node.inputs[1], std::move(copy));
        accumulate(inp, std::move(dy));
        break;
      }
      case LayerKind::concat: {
        const NodeShape& osh = shapes_[static_cast<size_t>(i)];
        const int64_t hw = static_cast<int64_t>(osh.h) * osh.w;
        int off = 0;
        for (int src : node.inputs) {
          const int cj = shapes_[static_cast<size_t>(src)].c;
          Tensor slice({n, cj, osh.h, osh.w});
          for (int n_idx = 0; n_idx < n; ++n_idx)
            std::copy(dy.ptr() + (static_cast<int64_t>(n_idx) * osh.c + off) * hw,
                      dy.ptr() + (static_cast<int64_t>(n_idx) * osh.c + off + cj) * hw,
                      slice.ptr() + static_cast<int64_t>(n_idx) * cj * hw);
          accumulate(src, std::move(slice));
          off += cj;
        }
        break;
      }
      case LayerKind::channel_scale: {
        const int s_node = node.inputs[1];
        Tensor dx({n, ish.c, ish.h, ish.w});
        Tensor ds({n, ish.c});
        k::channel_scale_backward(act_[static_cast<size_t>(inp)].ptr(),
                                  act_[static_cast<size_t>(s_node)].ptr(), dy.ptr(), n, ish.c,
                                  ish.h, ish.w, dx.ptr(), ds.ptr());
        accumulate(inp, std::move(dx));
        accumulate(s_node, std::move(ds));
        break;
      }
      case LayerKind::squash: {
        const Tensor& out = act_[static_cast<size_t>(i)];
        Tensor din(dy.shape);
        for (int64_t j = 0; j < dy.size(); ++j) {
          const double sig = (out[j] - 1.0) / 99.0;
          din[j] = dy[j] * 99.0 * sig * (1.0 - sig);
        }
        accumulate(inp, std::move(din));
        break;
      }
    }
  }
}

}  // namespace morphbench
