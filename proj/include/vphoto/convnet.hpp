#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vphoto/errors.hpp"
#include "vphoto/image.hpp"
#include "vphoto/model_io.hpp"
#include "vphoto/rng.hpp"

namespace vphoto {

/// Layout of a small strided-conv network: a stack of 4x4 stride-2 pad-1
/// convolutions with tanh, flattened into one dense output layer (raw logits).
struct ConvNetSpec {
  int input_size = 32;
  int in_channels = 3;
  std::vector<int> channels = {8, 16, 16};
  int outputs = 1;

  int conv_count() const { return static_cast<int>(channels.size()); }
  int size_after(int layer) const { return input_size >> layer; }
  int channels_at(int layer) const { return layer == 0 ? in_channels : channels[static_cast<std::size_t>(layer - 1)]; }
  std::size_t flat_size() const {
    const int s = size_after(conv_count());
    return static_cast<std::size_t>(channels.back()) * s * s;
  }

  void validate() const {
    if (channels.empty()) throw std::invalid_argument("ConvNetSpec: need at least one conv layer");
    if (input_size % (1 << conv_count()) != 0 || size_after(conv_count()) < 1) {
      throw std::invalid_argument("ConvNetSpec: input size must be divisible by 2^layers");
    }
    if (outputs < 1 || in_channels < 1) throw std::invalid_argument("ConvNetSpec: bad channel/output count");
  }

  friend bool operator==(const ConvNetSpec&, const ConvNetSpec&) = default;
};

class ConvNet {
 public:
  static constexpr int kKernel = 4;

  struct Cache {
    std::vector<std::vector<double>> acts;  // input, each conv output (post-tanh), logits
  };

  ConvNet() = default;

  explicit ConvNet(ConvNetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t total = 0;
    for (int l = 0; l < spec_.conv_count(); ++l) {
      offsets_.push_back(total);
      const std::size_t in = static_cast<std::size_t>(spec_.channels_at(l));
      const std::size_t out = static_cast<std::size_t>(spec_.channels_at(l + 1));
      total += out * in * kKernel * kKernel + out;
    }
    offsets_.push_back(total);
    total += static_cast<std::size_t>(spec_.outputs) * spec_.flat_size() + static_cast<std::size_t>(spec_.outputs);
    params_.assign(total, 0.0);
  }

  static ConvNet seeded(ConvNetSpec spec, std::uint64_t seed) {
    ConvNet net(std::move(spec));
    Rng rng(derive_seed(seed, {hash_name("convnet-init")}));
    for (int l = 0; l <= net.spec_.conv_count(); ++l) {
      const bool dense = l == net.spec_.conv_count();
      const std::size_t in = dense ? net.spec_.flat_size() : static_cast<std::size_t>(net.spec_.channels_at(l));
      const std::size_t out = dense ? static_cast<std::size_t>(net.spec_.outputs)
                                    : static_cast<std::size_t>(net.spec_.channels_at(l + 1));
      const std::size_t fan_in = dense ? in : in * kKernel * kKernel;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      double* w = net.params_.data() + net.offsets_[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < out * fan_in; ++i) w[i] = rng.uniform(-bound, bound);
    }
    return net;
  }

  const ConvNetSpec& spec() const { return spec_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t input_length() const {
    return static_cast<std::size_t>(spec_.in_channels) * spec_.input_size * spec_.input_size;
  }

  /// Planar (C, H, W) input; returns the output logits.
  std::vector<double> forward(std::span<const double> input, Cache* cache = nullptr) const {
    if (input.size() != input_length()) throw std::invalid_argument("ConvNet: input length mismatch");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.acts.clear();
    c.acts.emplace_back(input.begin(), input.end());
    for (int l = 0; l < spec_.conv_count(); ++l) {
      c.acts.push_back(conv_forward(l, c.acts.back()));
    }
    c.acts.push_back(dense_forward(c.acts.back()));
    return c.acts.back();
  }

  /// Accumulates dLoss/dParams (given dLoss/dLogits) into `grad`; returns
  /// dLoss/dInput.
  std::vector<double> backward(const Cache& cache, std::span<const double> dlogits, std::span<double> grad) const {
    const int L = spec_.conv_count();
    std::vector<double> d = dense_backward(cache.acts[static_cast<std::size_t>(L)], dlogits, grad);
    for (int l = L - 1; l >= 0; --l) {
      // Through tanh of layer l's output.
      const auto& out = cache.acts[static_cast<std::size_t>(l + 1)];
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - out[i] * out[i];
      d = conv_backward(l, cache.acts[static_cast<std::size_t>(l)], d, grad);
    }
    return d;
  }

  ModelFile to_file(std::uint32_t kind_code) const {
    ModelFile f;
    f.extractor_version = 0;  // raw pixels
    f.activation = 1;         // tanh
    f.dims = {kind_code, static_cast<std::uint32_t>(spec_.input_size), static_cast<std::uint32_t>(spec_.in_channels),
              static_cast<std::uint32_t>(spec_.outputs)};
    for (int c : spec_.channels) f.dims.push_back(static_cast<std::uint32_t>(c));
    f.params = params_;
    return f;
  }

  static ConvNet from_file(const ModelFile& f, std::uint32_t expected_kind) {
    if (f.dims.size() < 5 || f.dims[0] != expected_kind) {
      throw IncompatibleModel("model file is not the expected network kind");
    }
    ConvNetSpec spec;
    spec.input_size = static_cast<int>(f.dims[1]);
    spec.in_channels = static_cast<int>(f.dims[2]);
    spec.outputs = static_cast<int>(f.dims[3]);
    spec.channels.assign(f.dims.begin() + 4, f.dims.end());
    ConvNet net(spec);
    if (net.params_.size() != f.params.size()) throw IncompatibleModel("network parameter count mismatch");
    net.params_ = f.params;
    return net;
  }

  friend bool operator==(const ConvNet&, const ConvNet&) = default;

 private:
  std::vector<double> conv_forward(int l, const std::vector<double>& in) const {
    const int ic = spec_.channels_at(l), oc = spec_.channels_at(l + 1);
    const int is = spec_.size_after(l), os = spec_.size_after(l + 1);
    const double* w = params_.data() + offsets_[static_cast<std::size_t>(l)];
    const double* b = w + static_cast<std::size_t>(oc) * ic * kKernel * kKernel;
    std::vector<double> out(static_cast<std::size_t>(oc) * os * os);
    for (int o = 0; o < oc; ++o) {
      for (int y = 0; y < os; ++y) {
        for (int x = 0; x < os; ++x) {
          double acc = b[o];
          for (int i = 0; i < ic; ++i) {
            const double* wk = w + ((static_cast<std::size_t>(o) * ic + i) * kKernel) * kKernel;
            const double* plane = in.data() + static_cast<std::size_t>(i) * is * is;
            for (int ky = 0; ky < kKernel; ++ky) {
              const int sy = 2 * y - 1 + ky;
              if (sy < 0 || sy >= is) continue;
              for (int kx = 0; kx < kKernel; ++kx) {
                const int sx = 2 * x - 1 + kx;
                if (sx < 0 || sx >= is) continue;
                acc += wk[ky * kKernel + kx] * plane[sy * is + sx];
              }
            }
          }
          out[(static_cast<std::size_t>(o) * os + y) * os + x] = std::tanh(acc);
        }
      }
    }
    return out;
  }

  std::vector<double> conv_backward(int l, const std::vector<double>& in, const std::vector<double>& dout,
                                    std::span<double> grad) const {
    const int ic = spec_.channels_at(l), oc = spec_.channels_at(l + 1);
    const int is = spec_.size_after(l), os = spec_.size_after(l + 1);
    const std::size_t off = offsets_[static_cast<std::size_t>(l)];
    const double* w = params_.data() + off;
    double* gw = grad.data() + off;
    double* gb = gw + static_cast<std::size_t>(oc) * ic * kKernel * kKernel;
    std::vector<double> din(in.size(), 0.0);
    for (int o = 0; o < oc; ++o) {
      for (int y = 0; y < os; ++y) {
        for (int x = 0; x < os; ++x) {
          const double g = dout[(static_cast<std::size_t>(o) * os + y) * os + x];
          if (g == 0.0) continue;
          gb[o] += g;
          for (int i = 0; i < ic; ++i) {
            const std::size_t wbase = ((static_cast<std::size_t>(o) * ic + i) * kKernel) * kKernel;
            const std::size_t pbase = static_cast<std::size_t>(i) * is * is;
            for (int ky = 0; ky < kKernel; ++ky) {
              const int sy = 2 * y - 1 + ky;
              if (sy < 0 || sy >= is) continue;
              for (int kx = 0; kx < kKernel; ++kx) {
                const int sx = 2 * x - 1 + kx;
                if (sx < 0 || sx >= is) continue;
                const std::size_t pi = pbase + static_cast<std::size_t>(sy * is + sx);
                gw[wbase + static_cast<std::size_t>(ky * kKernel + kx)] += g * in[pi];
                din[pi] += g * w[wbase + static_cast<std::size_t>(ky * kKernel + kx)];
              }
            }
          }
        }
      }
    }
    return din;
  }

  std::vector<double> dense_forward(const std::vector<double>& in) const {
    const std::size_t n = in.size();
    const std::size_t outs = static_cast<std::size_t>(spec_.outputs);
    const double* w = params_.data() + offsets_.back();
    const double* b = w + outs * n;
    std::vector<double> out(outs);
    for (std::size_t o = 0; o < outs; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < n; ++i) acc += w[o * n + i] * in[i];
      out[o] = acc;
    }
    return out;
  }

  std::vector<double> dense_backward(const std::vector<double>& in, std::span<const double> dout,
                                     std::span<double> grad) const {
    const std::size_t n = in.size();
    const std::size_t outs = static_cast<std::size_t>(spec_.outputs);
    const double* w = params_.data() + offsets_.back();
    double* gw = grad.data() + offsets_.back();
    double* gb = gw + outs * n;
    std::vector<double> din(n, 0.0);
    for (std::size_t o = 0; o < outs; ++o) {
      gb[o] += dout[o];
      for (std::size_t i = 0; i < n; ++i) {
        gw[o * n + i] += dout[o] * in[i];
        din[i] += dout[o] * w[o * n + i];
      }
    }
    return din;
  }

  ConvNetSpec spec_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Interleaved RGB raster to planar (C, H, W).
inline std::vector<double> to_planar(const RasterImage& img) {
  const std::size_t n = img.pixel_count();
  std::vector<double> out(3 * n);
  auto d = img.data();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out[c * n + p] = d[3 * p + c];
  }
  return out;
}

}  // namespace vphoto
