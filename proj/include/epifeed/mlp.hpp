#pragma once

#include "epifeed/common.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace epifeed {

/// Fully connected softmax policy: tanh hidden layers, linear output layer,
/// softmax over actions. Parameters live in one flat vector, layer by layer,
/// each layer as its weight matrix (row-major, out x in) followed by its bias.
class MlpPolicy {
 public:
  /// sizes = {input, hidden..., output}. Weights are Glorot-uniform, biases 0.
  MlpPolicy(std::vector<int> sizes, Rng& rng);
  /// 4 -> (4) x 10 -> 4
  static MlpPolicy default_grid_policy(Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t num_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int num_inputs() const { return sizes_.front(); }
  int num_outputs() const { return sizes_.back(); }

  std::vector<double> probs(std::span<const double> obs) const;
  double log_prob(std::span<const double> obs, int action) const;
  /// grad += scale * d log pi(action | obs) / d params
  void add_log_prob_grad(std::span<const double> obs, int action, double scale,
                         std::vector<double>& grad) const;

  /// Little-endian blob: "EPFMLP01", uint32 layer-size count, the uint32
  /// sizes, uint64 parameter count, then the float64 parameters.
  void save(const std::filesystem::path& path) const;
  static MlpPolicy load(const std::filesystem::path& path);

 private:
  MlpPolicy() = default;
  // activations[l] is the input of layer l; the last entry holds the logits
  void forward(std::span<const double> obs, std::vector<std::vector<double>>& act) const;
  std::size_t layer_offset(std::size_t l) const { return offsets_[l]; }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamState {
  double lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam step in the ascent direction of `grad`.
void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> grad);

}  // namespace epifeed
