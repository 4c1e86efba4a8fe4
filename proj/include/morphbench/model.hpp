#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morphbench/kernels.hpp"
#include "morphbench/rng.hpp"
#include "morphbench/schema.hpp"
#include "morphbench/tensor.hpp"

namespace morphbench {

// Node kinds of the layer graph. Nodes are stored in topological order;
// node 0 is the input placeholder.
enum class LayerKind {
  input,
  conv,
  batchnorm,
  relu,
  silu,
  sigmoid,
  maxpool,
  avgpool2,
  global_avg_pool,
  dense,
  dropout,
  add,
  concat,
  channel_scale,
  squash,
};

struct LayerNode {
  LayerKind kind = LayerKind::input;
  std::string name;         // unique; parameter tensors are named "<name>.<part>"
  std::vector<int> inputs;  // upstream node indices (all < own index)

  kernels::Conv2dShape conv;  // conv nodes
  bool conv_bias = false;

  int pool_kernel = 0;  // maxpool nodes
  int pool_stride = 0;
  int pool_pad = 0;

  int dense_in = 0;  // dense nodes
  int dense_out = 0;
  bool head_dense = false;  // final classifier gets small-uniform init

  int channels = 0;           // batchnorm nodes
  double dropout_rate = 0.0;  // dropout nodes
};

// A complete architecture: swappable convolutional core plus the shared
// head (global average pooling -> dropout -> dense(output_width) -> squash
// onto (1, 100)).
struct NetworkDescription {
  std::string family;  // residual | dense-connect | compound-scaled
  std::string config;  // full | tiny
  double dropout_rate = 0.2;
  int input_side = 224;
  int output_width = 34;
  std::vector<LayerNode> nodes;
  int output = -1;  // index of the squash node
};

// Build the layer graph for a family/config pair. Throws std::invalid_argument
// on an unknown family or config.
NetworkDescription build_network(std::string_view family, std::string_view config,
                                 int output_width, double dropout_rate);

// Deterministic initialization from seed: He fan-in normals for convolution
// weights, small-uniform for the classifier head, zero biases, identity
// batch-norm (gamma 1, beta 0, running mean 0 / var 1).
ParameterSet init_parameters(const NetworkDescription& net, uint64_t seed);

// Convenience: graph plus freshly initialized parameters, with the head
// sized to the schema's answer count.
std::pair<NetworkDescription, ParameterSet> build_model(std::string_view family,
                                                        std::string_view config,
                                                        const DecisionTreeSchema& schema,
                                                        double dropout_rate, uint64_t seed);

enum class RunMode {
  deterministic,  // dropout off, batch-norm running averages
  mc_dropout,     // dropout sampled fresh, batch-norm running averages
  training,       // dropout sampled, batch-norm batch statistics, trace kept
};

// Executes a network graph. A training-mode forward caches every activation
// (plus batch-norm statistics, dropout masks, and pooling argmaxes) so that
// backward() can produce exact gradients for the same batch.
class ModelRuntime {
 public:
  explicit ModelRuntime(const NetworkDescription& net);

  // batch is [n, 1, side, side]; returns concentrations [n, output_width],
  // every component in (1, 100). Training mode updates batch-norm running
  // statistics in params (momentum 0.9). rng is required whenever dropout
  // is active (training / mc-dropout with rate > 0).
  Tensor forward(const Tensor& batch, ParameterSet& params, RunMode mode, Rng* rng);

  // Gradient of the loss w.r.t. every parameter tensor, given the upstream
  // gradient w.r.t. the emitted concentrations. Requires a training-mode
  // forward for the same batch; overwrites grads (shaped like params).
  void backward(const Tensor& dconcentration, const ParameterSet& params, ParameterSet& grads);

  const NetworkDescription& network() const { return *net_; }

 private:
  struct NodeShape {
    bool flat = false;  // [n, c] feature vector vs [n, c, h, w] map
    int c = 0;
    int h = 0;
    int w = 0;
    int64_t numel(int n) const {
      return flat ? static_cast<int64_t>(n) * c : static_cast<int64_t>(n) * c * h * w;
    }
  };

  void infer_shapes();
  int param_index(const std::string& tensor_name, const ParameterSet& params) const;

  const NetworkDescription* net_;
  std::vector<NodeShape> shapes_;

  // Trace of the last training-mode forward.
  int trace_n_ = 0;
  bool trace_valid_ = false;
  std::vector<Tensor> act_;
  std::vector<Tensor> bn_mean_, bn_var_;
  std::vector<Tensor> dropout_mask_;
  std::vector<std::vector<int32_t>> pool_argmax_;
};

}  // namespace morphbench
