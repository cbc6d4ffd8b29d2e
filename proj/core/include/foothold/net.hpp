#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foothold/labeler.hpp"
#include "foothold/terrain.hpp"

namespace foothold {

/**
 * Encoder-decoder layout:
 *   down(1 -> w0) down(w0 -> w1) nb1d x stage2_blocks
 *   down(w1 -> w2) nb1d(dilated) x stage3_blocks
 *   up(w2 -> w1) nb1d x decoder1_blocks  up(w1 -> w0) nb1d x decoder2_blocks
 *   out: 2x2 stride-2 transposed conv (w0 -> classes)
 * Downsamplers concatenate a stride-2 3x3 convolution (out - in channels)
 * with a 2x2 max-pool of the input, then apply ReLU.
 */
struct NetConfig {
  int input_size = 40;
  int classes = kClassCount;
  std::array<int, 3> widths{8, 16, 32};
  int stage2_blocks = 5;
  int stage3_blocks = 8;
  std::vector<int> dilations{2, 4, 8, 16};  // cycled over the stage-3 blocks
  int decoder1_blocks = 2;
  int decoder2_blocks = 2;

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;

  static NetConfig reduced() { return {}; }
  static NetConfig full_scale();
  /// Smallest layout that still exercises every layer type.
  static NetConfig tiny();

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ConvGeom {
  int in_c = 0, out_c = 0;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  int dh = 1, dw = 1;
};

enum class LayerKind { down, nb1d, up, out };

struct Layer {
  LayerKind kind = LayerKind::down;
  int in_c = 0, out_c = 0;
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  std::array<ConvGeom, 4> conv{};
  std::array<std::size_t, 4> weight{};
  std::array<std::size_t, 4> bias{};
  int conv_count = 0;
};

template <typename T>
struct Workspace {
  std::vector<std::vector<T>> acts;      // acts[0] = input, acts[i+1] = layer i output
  std::vector<std::vector<T>> internal;  // per-layer intermediate activations
  std::vector<std::vector<int>> argmax;  // max-pool winners of downsamplers
  std::vector<T> grad_a, grad_b, scratch_a, scratch_b;
};

/// Parameter layout and forward/backward passes for one NetConfig.
template <typename T>
class Network {
 public:
  explicit Network(const NetConfig& config);

  const NetConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t parameter_count() const { return count_; }

  /// He-normal kernels, zero biases; the last conv of each residual branch is damped.
  std::vector<T> initial_parameters(std::uint64_t seed) const;

  Workspace<T> make_workspace() const;

  /// input: input_size^2 values in [0, 1]. Logits (classes x S x S) end up in ws.acts.back().
  void forward(std::span<const T> params, std::span<const T> input, Workspace<T>& ws) const;
  std::span<const T> logits(const Workspace<T>& ws) const { return ws.acts.back(); }

  /// Accumulate d(loss)/d(params) into grad, given d(loss)/d(logits) and the
  /// workspace of the matching forward call.
  void backward(std::span<const T> params, std::span<const T> dlogits, Workspace<T>& ws,
                std::span<T> grad) const;

 private:
  NetConfig config_;
  std::vector<Layer> layers_;
  std::vector<TensorInfo> tensors_;
  std::size_t count_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;
extern template class Network<long double>;  // finite-difference reference

/// Image bytes scaled to [0, 1].
template <typename T>
std::vector<T> image_to_input(const GrayImage& image);

/**
 * Weighted cross-entropy over all pixels: mean of w[label] * -log softmax.
 * When dlogits is non-empty it receives the gradient of that mean, scaled by
 * `grad_scale` (use 1/batch for batch means). Returns the mean loss.
 */
template <typename T>
double weighted_cross_entropy(std::span<const T> logits, const LabelMap& labels,
                              std::span<const double> class_weights, std::span<T> dlogits,
                              double grad_scale = 1.0);

/// Mean weighted cross-entropy plus weight_decay * 0.5 * |params|^2.
template <typename T>
double total_loss(std::span<const T> logits, const LabelMap& labels,
                  std::span<const double> class_weights, std::span<const T> params,
                  double weight_decay);

/// Per-pixel probabilities (classes x pixels) from logits.
template <typename T>
std::vector<T> softmax(std::span<const T> logits, int classes);

/// argmax over classes per pixel.
template <typename T>
LabelMap argmax_labels(std::span<const T> logits, int classes, int size);

// Raw convolution kernels, exposed for testing.
inline int conv_out_size(int in, int k, int s, int p, int d) { return (in + 2 * p - d * (k - 1) - 1) / s + 1; }

template <typename T>
void conv_forward(const ConvGeom& g, const T* w, const T* b, const T* x, int h, int wd, T* y, int ho, int wo);
template <typename T>
void conv_backward_data(const ConvGeom& g, const T* w, const T* dy, int ho, int wo, T* dx, int h, int wd);
template <typename T>
void conv_backward_weights(const ConvGeom& g, const T* x, int h, int wd, const T* dy, int ho, int wo,
                           T* dw, T* db);

}  // namespace foothold
