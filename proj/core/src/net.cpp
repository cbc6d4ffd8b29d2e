#include "foothold/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

#include "foothold/random.hpp"

namespace foothold {

void NetConfig::validate() const {
  if (input_size <= 0 || input_size % 8 != 0)
    throw std::invalid_argument("input size must be a positive multiple of 8");
  if (classes < 2) throw std::invalid_argument("need at least two classes");
  for (const int w : widths)
    if (w <= 0) throw std::invalid_argument("channel widths must be positive");
  if (widths[0] < 2 || widths[1] <= widths[0] || widths[2] <= widths[1])
    throw std::invalid_argument("channel widths must increase strictly from at least 2");
  if (stage2_blocks < 0 || stage3_blocks < 0 || decoder1_blocks < 0 || decoder2_blocks < 0)
    throw std::invalid_argument("block counts must be non-negative");
  if (stage3_blocks > 0 && dilations.empty()) throw std::invalid_argument("dilation cycle is empty");
  for (const int d : dilations)
    if (d < 1) throw std::invalid_argument("dilations must be >= 1");
}

NetConfig NetConfig::full_scale() {
  NetConfig c;
  c.widths = {16, 64, 128};
  return c;
}

NetConfig NetConfig::tiny() {
  NetConfig c;
  c.input_size = 16;
  c.widths = {2, 3, 4};
  c.stage2_blocks = 1;
  c.stage3_blocks = 1;
  c.dilations = {2};
  c.decoder1_blocks = 1;
  c.decoder2_blocks = 1;
  return c;
}

// ---------------------------------------------------------------------------
// convolution kernels

namespace {

// Output index range [lo, hi) for which o * s + off lands in [0, n).
inline void valid_range(int off, int s, int n, int count, int& lo, int& hi) {
  // o * s + off >= 0  ->  o >= ceil(-off / s)
  lo = off >= 0 ? 0 : (-off + s - 1) / s;
  // o * s + off <= n - 1  ->  o <= floor((n - 1 - off) / s)
  const int top = n - 1 - off;
  hi = top < 0 ? 0 : std::min(count, top / s + 1);
  if (lo > hi) lo = hi;
}

}  // namespace

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column buffer: rows (ic, ky, kx), columns (oy, ox).
template <typename T>
std::vector<T>& column_buffer(std::size_t n) {
  thread_local std::vector<T> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

template <typename T>
void im2col(const ConvGeom& g, const T* x, int h, int wd, int ho, int wo, T* col) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ic = 0; ic < g.in_c; ++ic) {
    const T* xi = x + static_cast<std::size_t>(ic) * h * wd;
    for (int ky = 0; ky < g.kh; ++ky) {
      int oy0, oy1;
      valid_range(ky * g.dh - g.ph, g.sh, h, ho, oy0, oy1);
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = col + (static_cast<std::size_t>(ic * g.kh + ky) * g.kw + kx) * plane;
        std::fill(row, row + plane, T(0));
        const int xoff = kx * g.dw - g.pw;
        int ox0, ox1;
        valid_range(xoff, g.sw, wd, wo, ox0, ox1);
        for (int oy = oy0; oy < oy1; ++oy) {
          const T* xr = xi + static_cast<std::size_t>(oy * g.sh + ky * g.dh - g.ph) * wd + xoff;
          T* cr = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = ox0; ox < ox1; ++ox) cr[ox] = xr[ox * g.sw];
        }
      }
    }
  }
}

// Scatter-add of a column buffer back onto the input grid.
template <typename T>
void col2im(const ConvGeom& g, const T* col, int ho, int wo, T* dx, int h, int wd) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ic = 0; ic < g.in_c; ++ic) {
    T* xi = dx + static_cast<std::size_t>(ic) * h * wd;
    for (int ky = 0; ky < g.kh; ++ky) {
      int oy0, oy1;
      valid_range(ky * g.dh - g.ph, g.sh, h, ho, oy0, oy1);
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = col + (static_cast<std::size_t>(ic * g.kh + ky) * g.kw + kx) * plane;
        const int xoff = kx * g.dw - g.pw;
        int ox0, ox1;
        valid_range(xoff, g.sw, wd, wo, ox0, ox1);
        for (int oy = oy0; oy < oy1; ++oy) {
          T* xr = xi + static_cast<std::size_t>(oy * g.sh + ky * g.dh - g.ph) * wd + xoff;
          const T* cr = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = ox0; ox < ox1; ++ox) xr[ox * g.sw] += cr[ox];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv_forward(const ConvGeom& g, const T* w, const T* b, const T* x, int h, int wd, T* y, int ho, int wo) {
  const Eigen::Index k = static_cast<Eigen::Index>(g.in_c) * g.kh * g.kw;
  const Eigen::Index plane = static_cast<Eigen::Index>(ho) * wo;
  auto& col = column_buffer<T>(static_cast<std::size_t>(k * plane));
  im2col(g, x, h, wd, ho, wo, col.data());
  Eigen::Map<const RowMat<T>> wm(w, g.out_c, k);
  Eigen::Map<const RowMat<T>> cm(col.data(), k, plane);
  Eigen::Map<RowMat<T>> ym(y, g.out_c, plane);
  ym.noalias() = wm * cm;
  if (b)
    for (int oc = 0; oc < g.out_c; ++oc) ym.row(oc).array() += b[oc];
}

template <typename T>
void conv_backward_data(const ConvGeom& g, const T* w, const T* dy, int ho, int wo, T* dx, int h, int wd) {
  const Eigen::Index k = static_cast<Eigen::Index>(g.in_c) * g.kh * g.kw;
  const Eigen::Index plane = static_cast<Eigen::Index>(ho) * wo;
  auto& col = column_buffer<T>(static_cast<std::size_t>(k * plane));
  Eigen::Map<const RowMat<T>> wm(w, g.out_c, k);
  Eigen::Map<const RowMat<T>> gm(dy, g.out_c, plane);
  Eigen::Map<RowMat<T>> cm(col.data(), k, plane);
  cm.noalias() = wm.transpose() * gm;
  col2im(g, col.data(), ho, wo, dx, h, wd);
}

template <typename T>
void conv_backward_weights(const ConvGeom& g, const T* x, int h, int wd, const T* dy, int ho, int wo,
                           T* dw, T* db) {
  const Eigen::Index k = static_cast<Eigen::Index>(g.in_c) * g.kh * g.kw;
  const Eigen::Index plane = static_cast<Eigen::Index>(ho) * wo;
  auto& col = column_buffer<T>(static_cast<std::size_t>(k * plane));
  im2col(g, x, h, wd, ho, wo, col.data());
  Eigen::Map<const RowMat<T>> cm(col.data(), k, plane);
  Eigen::Map<const RowMat<T>> gm(dy, g.out_c, plane);
  Eigen::Map<RowMat<T>> wm(dw, g.out_c, k);
  wm.noalias() += gm * cm.transpose();
  if (db)
    for (int oc = 0; oc < g.out_c; ++oc) db[oc] += gm.row(oc).sum();
}

// ---------------------------------------------------------------------------
// network

namespace {

ConvGeom make_geom(int in_c, int out_c, int kh, int kw, int s, int ph, int pw, int dh, int dw) {
  ConvGeom g;
  g.in_c = in_c;
  g.out_c = out_c;
  g.kh = kh;
  g.kw = kw;
  g.sh = g.sw = s;
  g.ph = ph;
  g.pw = pw;
  g.dh = dh;
  g.dw = dw;
  return g;
}

template <typename T>
inline void relu_inplace(std::vector<T>& v) {
  for (auto& x : v) x = x > T(0) ? x : T(0);
}

// Zero the gradient wherever the ReLU output was clipped.
template <typename T>
inline void relu_mask(const T* out, T* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(out[i] > T(0))) grad[i] = T(0);
}

}  // namespace

template <typename T>
Network<T>::Network(const NetConfig& config) : config_(config) {
  config_.validate();
  std::size_t offset = 0;
  const auto add_tensor = [&](const std::string& name, std::vector<int> shape) {
    std::size_t n = 1;
    for (const int d : shape) n *= static_cast<std::size_t>(d);
    tensors_.push_back({name, std::move(shape), offset, n});
    offset += n;
    return tensors_.back().offset;
  };

  int size = config_.input_size;
  int ch = 1;
  int index = 0;

  const auto add_down = [&](int out_c) {
    Layer l;
    l.kind = LayerKind::down;
    l.in_c = ch;
    l.out_c = out_c;
    l.in_h = l.in_w = size;
    l.out_h = l.out_w = size / 2;
    l.conv_count = 1;
    l.conv[0] = make_geom(ch, out_c - ch, 3, 3, 2, 1, 1, 1, 1);
    const std::string p = "l" + std::to_string(index) + ".down";
    l.weight[0] = add_tensor(p + ".weight", {out_c - ch, ch, 3, 3});
    l.bias[0] = add_tensor(p + ".bias", {out_c - ch});
    layers_.push_back(l);
    ch = out_c;
    size /= 2;
    ++index;
  };
  const auto add_block = [&](int dilation) {
    Layer l;
    l.kind = LayerKind::nb1d;
    l.in_c = l.out_c = ch;
    l.in_h = l.in_w = l.out_h = l.out_w = size;
    l.conv_count = 4;
    l.conv[0] = make_geom(ch, ch, 3, 1, 1, 1, 0, 1, 1);
    l.conv[1] = make_geom(ch, ch, 1, 3, 1, 0, 1, 1, 1);
    l.conv[2] = make_geom(ch, ch, 3, 1, 1, dilation, 0, dilation, 1);
    l.conv[3] = make_geom(ch, ch, 1, 3, 1, 0, dilation, 1, dilation);
    const std::string p = "l" + std::to_string(index) + ".nb1d";
    const char* names[4] = {".conv3x1_1", ".conv1x3_1", ".conv3x1_2", ".conv1x3_2"};
    for (int k = 0; k < 4; ++k) {
      const ConvGeom& g = l.conv[k];
      l.weight[k] = add_tensor(p + names[k] + ".weight", {ch, ch, g.kh, g.kw});
      l.bias[k] = add_tensor(p + names[k] + ".bias", {ch});
    }
    layers_.push_back(l);
    ++index;
  };
  // Transposed conv stored as (in, out, kh, kw); it runs as the data-gradient
  // of a conv mapping its output back to its input.
  const auto add_up = [&](int out_c, bool final_layer) {
    Layer l;
    l.kind = final_layer ? LayerKind::out : LayerKind::up;
    l.in_c = ch;
    l.out_c = out_c;
    l.in_h = l.in_w = size;
    l.out_h = l.out_w = size * 2;
    l.conv_count = 1;
    l.conv[0] = final_layer ? make_geom(out_c, ch, 2, 2, 2, 0, 0, 1, 1)
                            : make_geom(out_c, ch, 3, 3, 2, 1, 1, 1, 1);
    const std::string p = "l" + std::to_string(index) + (final_layer ? ".out" : ".up");
    const int k = final_layer ? 2 : 3;
    l.weight[0] = add_tensor(p + ".weight", {ch, out_c, k, k});
    l.bias[0] = add_tensor(p + ".bias", {out_c});
    layers_.push_back(l);
    ch = out_c;
    size *= 2;
    ++index;
  };

  const auto& w = config_.widths;
  add_down(w[0]);
  add_down(w[1]);
  for (int i = 0; i < config_.stage2_blocks; ++i) add_block(1);
  add_down(w[2]);
  for (int i = 0; i < config_.stage3_blocks; ++i)
    add_block(config_.dilations[static_cast<std::size_t>(i) % config_.dilations.size()]);
  add_up(w[1], false);
  for (int i = 0; i < config_.decoder1_blocks; ++i) add_block(1);
  add_up(w[0], false);
  for (int i = 0; i < config_.decoder2_blocks; ++i) add_block(1);
  add_up(config_.classes, true);
  count_ = offset;
}

template <typename T>
std::vector<T> Network<T>::initial_parameters(std::uint64_t seed) const {
  std::vector<T> p(count_, T(0));
  std::size_t tensor = 0;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    for (int k = 0; k < l.conv_count; ++k) {
      const ConvGeom& g = l.conv[k];
      double fan_in = 0.0;
      std::size_t n = 0;
      switch (l.kind) {
        case LayerKind::down:
        case LayerKind::nb1d:
          fan_in = static_cast<double>(g.in_c) * g.kh * g.kw;
          n = static_cast<std::size_t>(g.out_c) * g.in_c * g.kh * g.kw;
          break;
        case LayerKind::up:
        case LayerKind::out:
          // each output receives about in * k * k / stride^2 contributions
          fan_in = static_cast<double>(g.out_c) * g.kh * g.kw / (g.sh * g.sw);
          n = static_cast<std::size_t>(g.out_c) * g.in_c * g.kh * g.kw;
          break;
      }
      double stddev = std::sqrt(2.0 / fan_in);
      if (l.kind == LayerKind::nb1d && k == 3) stddev *= 0.1;
      if (l.kind == LayerKind::out) stddev *= 0.5;
      auto rng = derive_stream(seed, tensor);
      T* dst = p.data() + l.weight[k];
      // Box-Muller from the portable uniform keeps values library-independent.
      for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = 1.0 - uniform(rng, 0.0, 1.0);
        const double u2 = uniform(rng, 0.0, 1.0);
        const double r = std::sqrt(-2.0 * std::log(u1));
        dst[i] = static_cast<T>(stddev * r * std::cos(2.0 * std::numbers::pi * u2));
        if (i + 1 < n) dst[i + 1] = static_cast<T>(stddev * r * std::sin(2.0 * std::numbers::pi * u2));
      }
      tensor += 2;
    }
  }
  return p;
}

template <typename T>
Workspace<T> Network<T>::make_workspace() const {
  Workspace<T> ws;
  ws.acts.resize(layers_.size() + 1);
  ws.internal.resize(layers_.size());
  ws.argmax.resize(layers_.size());
  std::size_t biggest = static_cast<std::size_t>(config_.input_size) * config_.input_size;
  ws.acts[0].assign(biggest, T(0));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const std::size_t n = static_cast<std::size_t>(l.out_c) * l.out_h * l.out_w;
    ws.acts[i + 1].assign(n, T(0));
    biggest = std::max({biggest, n, static_cast<std::size_t>(l.in_c) * l.in_h * l.in_w});
    if (l.kind == LayerKind::nb1d) ws.internal[i].assign(3 * n, T(0));
    if (l.kind == LayerKind::down) ws.argmax[i].assign(static_cast<std::size_t>(l.in_c) * l.out_h * l.out_w, 0);
  }
  ws.grad_a.assign(biggest, T(0));
  ws.grad_b.assign(biggest, T(0));
  ws.scratch_a.assign(biggest, T(0));
  ws.scratch_b.assign(biggest, T(0));
  return ws;
}

template <typename T>
void Network<T>::forward(std::span<const T> params, std::span<const T> input, Workspace<T>& ws) const {
  if (params.size() != count_) throw std::invalid_argument("parameter vector does not match the network layout");
  const std::size_t in_n = static_cast<std::size_t>(config_.input_size) * config_.input_size;
  if (input.size() != in_n) throw std::invalid_argument("input size does not match the network config");
  if (ws.acts.size() != layers_.size() + 1) ws = make_workspace();
  std::copy(input.begin(), input.end(), ws.acts[0].begin());
  const T* P = params.data();

  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    const T* x = ws.acts[li].data();
    std::vector<T>& out = ws.acts[li + 1];
    const std::size_t plane = static_cast<std::size_t>(l.out_h) * l.out_w;
    switch (l.kind) {
      case LayerKind::down: {
        const ConvGeom& g = l.conv[0];
        conv_forward(g, P + l.weight[0], P + l.bias[0], x, l.in_h, l.in_w, out.data(), l.out_h, l.out_w);
        int* am = ws.argmax[li].data();
        for (int c = 0; c < l.in_c; ++c) {
          const T* xc = x + static_cast<std::size_t>(c) * l.in_h * l.in_w;
          T* oc = out.data() + static_cast<std::size_t>(g.out_c + c) * plane;
          for (int r = 0; r < l.out_h; ++r) {
            for (int q = 0; q < l.out_w; ++q) {
              int best = (2 * r) * l.in_w + 2 * q;
              for (const int cand : {(2 * r) * l.in_w + 2 * q + 1, (2 * r + 1) * l.in_w + 2 * q,
                                     (2 * r + 1) * l.in_w + 2 * q + 1})
                if (xc[cand] > xc[best]) best = cand;
              oc[r * l.out_w + q] = xc[best];
              am[(static_cast<std::size_t>(c) * l.out_h + r) * l.out_w + q] = best;
            }
          }
        }
        relu_inplace(out);
        break;
      }
      case LayerKind::nb1d: {
        const std::size_t n = static_cast<std::size_t>(l.out_c) * plane;
        T* t1 = ws.internal[li].data();
        T* t2 = t1 + n;
        T* t3 = t2 + n;
        const int H = l.out_h, W = l.out_w;
        conv_forward(l.conv[0], P + l.weight[0], P + l.bias[0], x, H, W, t1, H, W);
        for (std::size_t i = 0; i < n; ++i) t1[i] = std::max(t1[i], T(0));
        conv_forward(l.conv[1], P + l.weight[1], P + l.bias[1], t1, H, W, t2, H, W);
        for (std::size_t i = 0; i < n; ++i) t2[i] = std::max(t2[i], T(0));
        conv_forward(l.conv[2], P + l.weight[2], P + l.bias[2], t2, H, W, t3, H, W);
        for (std::size_t i = 0; i < n; ++i) t3[i] = std::max(t3[i], T(0));
        conv_forward(l.conv[3], P + l.weight[3], P + l.bias[3], t3, H, W, out.data(), H, W);
        for (std::size_t i = 0; i < n; ++i) out[i] = std::max(out[i] + x[i], T(0));
        break;
      }
      case LayerKind::up:
      case LayerKind::out: {
        const T* b = P + l.bias[0];
        for (int c = 0; c < l.out_c; ++c)
          std::fill(out.begin() + c * plane, out.begin() + (c + 1) * plane, b[c]);
        conv_backward_data(l.conv[0], P + l.weight[0], x, l.in_h, l.in_w, out.data(), l.out_h, l.out_w);
        if (l.kind == LayerKind::up) relu_inplace(out);
        break;
      }
    }
  }
}

template <typename T>
void Network<T>::backward(std::span<const T> params, std::span<const T> dlogits, Workspace<T>& ws,
                          std::span<T> grad) const {
  if (params.size() != count_ || grad.size() != count_)
    throw std::invalid_argument("parameter vector does not match the network layout");
  if (dlogits.size() != ws.acts.back().size()) throw std::invalid_argument("logit gradient has the wrong size");
  const T* P = params.data();
  T* G = grad.data();

  // gout holds d(loss)/d(layer output), gin receives d(loss)/d(layer input).
  std::vector<T>* gout = &ws.grad_a;
  std::vector<T>* gin = &ws.grad_b;
  std::copy(dlogits.begin(), dlogits.end(), gout->begin());

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const T* x = ws.acts[li].data();
    const T* out = ws.acts[li + 1].data();
    const std::size_t plane = static_cast<std::size_t>(l.out_h) * l.out_w;
    const std::size_t n_out = static_cast<std::size_t>(l.out_c) * plane;
    const std::size_t n_in = static_cast<std::size_t>(l.in_c) * l.in_h * l.in_w;
    T* go = gout->data();
    T* gi = gin->data();
    std::fill(gi, gi + n_in, T(0));

    switch (l.kind) {
      case LayerKind::down: {
        relu_mask(out, go, n_out);
        const ConvGeom& g = l.conv[0];
        conv_backward_weights(g, x, l.in_h, l.in_w, go, l.out_h, l.out_w, G + l.weight[0], G + l.bias[0]);
        if (li > 0) {
          conv_backward_data(g, P + l.weight[0], go, l.out_h, l.out_w, gi, l.in_h, l.in_w);
          const int* am = ws.argmax[li].data();
          for (int c = 0; c < l.in_c; ++c) {
            const T* gc = go + static_cast<std::size_t>(g.out_c + c) * plane;
            T* dst = gi + static_cast<std::size_t>(c) * l.in_h * l.in_w;
            for (std::size_t i = 0; i < plane; ++i) dst[am[c * plane + i]] += gc[i];
          }
        }
        break;
      }
      case LayerKind::nb1d: {
        relu_mask(out, go, n_out);
        const int H = l.out_h, W = l.out_w;
        const T* t1 = ws.internal[li].data();
        const T* t2 = t1 + n_out;
        const T* t3 = t2 + n_out;
        T* sa = ws.scratch_a.data();
        T* sb = ws.scratch_b.data();
        std::copy(go, go + n_out, gi);  // identity skip

        conv_backward_weights(l.conv[3], t3, H, W, go, H, W, G + l.weight[3], G + l.bias[3]);
        std::fill(sa, sa + n_out, T(0));
        conv_backward_data(l.conv[3], P + l.weight[3], go, H, W, sa, H, W);
        relu_mask(t3, sa, n_out);

        conv_backward_weights(l.conv[2], t2, H, W, sa, H, W, G + l.weight[2], G + l.bias[2]);
        std::fill(sb, sb + n_out, T(0));
        conv_backward_data(l.conv[2], P + l.weight[2], sa, H, W, sb, H, W);
        relu_mask(t2, sb, n_out);

        conv_backward_weights(l.conv[1], t1, H, W, sb, H, W, G + l.weight[1], G + l.bias[1]);
        std::fill(sa, sa + n_out, T(0));
        conv_backward_data(l.conv[1], P + l.weight[1], sb, H, W, sa, H, W);
        relu_mask(t1, sa, n_out);

        conv_backward_weights(l.conv[0], x, H, W, sa, H, W, G + l.weight[0], G + l.bias[0]);
        conv_backward_data(l.conv[0], P + l.weight[0], sa, H, W, gi, H, W);
        break;
      }
      case LayerKind::up:
      case LayerKind::out: {
        if (l.kind == LayerKind::up) relu_mask(out, go, n_out);
        T* db = G + l.bias[0];
        for (int c = 0; c < l.out_c; ++c) {
          T s = 0;
          for (std::size_t i = 0; i < plane; ++i) s += go[c * plane + i];
          db[c] += s;
        }
        // Roles swap: the conv "input" is this layer's output.
        conv_backward_weights(l.conv[0], go, l.out_h, l.out_w, x, l.in_h, l.in_w, G + l.weight[0],
                              static_cast<T*>(nullptr));
        conv_forward(l.conv[0], P + l.weight[0], static_cast<const T*>(nullptr), go, l.out_h, l.out_w, gi,
                     l.in_h, l.in_w);
        break;
      }
    }
    std::swap(gout, gin);
  }
}

// ---------------------------------------------------------------------------
// loss and helpers

template <typename T>
std::vector<T> image_to_input(const GrayImage& image) {
  std::vector<T> v(image.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(image.pixels[i]) / T(255);
  return v;
}

template <typename T>
double weighted_cross_entropy(std::span<const T> logits, const LabelMap& labels,
                              std::span<const double> class_weights, std::span<T> dlogits,
                              double grad_scale) {
  const std::size_t pixels = labels.values.size();
  if (pixels == 0) throw std::invalid_argument("empty label map");
  const std::size_t classes = logits.size() / pixels;
  if (classes * pixels != logits.size() || class_weights.size() != classes)
    throw std::invalid_argument("logits, labels and class weights disagree in shape");
  if (!dlogits.empty() && dlogits.size() != logits.size())
    throw std::invalid_argument("logit gradient has the wrong size");

  double total = 0.0;
  const double inv = grad_scale / static_cast<double>(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::size_t y = labels.values[p];
    if (y >= classes) throw std::invalid_argument("label id out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) mx = std::max(mx, static_cast<double>(logits[c * pixels + p]));
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(static_cast<double>(logits[c * pixels + p]) - mx);
    const double lse = mx + std::log(z);
    const double w = class_weights[y];
    total += w * (lse - static_cast<double>(logits[y * pixels + p]));
    if (!dlogits.empty()) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double prob = std::exp(static_cast<double>(logits[c * pixels + p]) - lse);
        const double g = w * (prob - (c == y ? 1.0 : 0.0)) * inv;
        dlogits[c * pixels + p] = static_cast<T>(g);
      }
    }
  }
  return total / static_cast<double>(pixels);
}

template <typename T>
double total_loss(std::span<const T> logits, const LabelMap& labels, std::span<const double> class_weights,
                  std::span<const T> params, double weight_decay) {
  const double ce = weighted_cross_entropy<T>(logits, labels, class_weights, std::span<T>{});
  double sq = 0.0;
  for (const T v : params) sq += static_cast<double>(v) * static_cast<double>(v);
  return ce + weight_decay * 0.5 * sq;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits, int classes) {
  const std::size_t pixels = logits.size() / static_cast<std::size_t>(classes);
  std::vector<T> out(logits.size());
  for (std::size_t p = 0; p < pixels; ++p) {
    T mx = logits[p];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits[c * pixels + p]);
    T z = 0;
    for (int c = 0; c < classes; ++c) {
      const T e = std::exp(logits[c * pixels + p] - mx);
      out[c * pixels + p] = e;
      z += e;
    }
    for (int c = 0; c < classes; ++c) out[c * pixels + p] /= z;
  }
  return out;
}

template <typename T>
LabelMap argmax_labels(std::span<const T> logits, int classes, int size) {
  LabelMap out(size);
  const std::size_t pixels = static_cast<std::size_t>(size) * size;
  if (logits.size() != pixels * static_cast<std::size_t>(classes))
    throw std::invalid_argument("logits do not match the label map size");
  for (std::size_t p = 0; p < pixels; ++p) {
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (logits[c * pixels + p] > logits[best * pixels + p]) best = c;
    out.values[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

#define FOOTHOLD_INSTANTIATE(T)                                                                          \
  template class Network<T>;                                                                             \
  template std::vector<T> image_to_input<T>(const GrayImage&);                                           \
  template double weighted_cross_entropy<T>(std::span<const T>, const LabelMap&, std::span<const double>, \
                                            std::span<T>, double);                                        \
  template double total_loss<T>(std::span<const T>, const LabelMap&, std::span<const double>,            \
                                std::span<const T>, double);                                              \
  template std::vector<T> softmax<T>(std::span<const T>, int);                                           \
  template LabelMap argmax_labels<T>(std::span<const T>, int, int);                                      \
  template void conv_forward<T>(const ConvGeom&, const T*, const T*, const T*, int, int, T*, int, int);  \
  template void conv_backward_data<T>(const ConvGeom&, const T*, const T*, int, int, T*, int, int);      \
  template void conv_backward_weights<T>(const ConvGeom&, const T*, int, int, const T*, int, int, T*, T*);

FOOTHOLD_INSTANTIATE(float)
FOOTHOLD_INSTANTIATE(double)
template class Network<long double>;

#undef FOOTHOLD_INSTANTIATE

}  // namespace foothold
