#include "epifeed/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace epifeed {

MlpPolicy::MlpPolicy(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw StructuralError("MlpPolicy: need input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw StructuralError("MlpPolicy: layer sizes must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    double* w = params_.data() + offsets_[l];
    for (int k = 0; k < in * out; ++k) w[k] = (2.0 * uniform01(rng) - 1.0) * limit;
  }
}

MlpPolicy MlpPolicy::default_grid_policy(Rng& rng) {
  std::vector<int> sizes{4};
  for (int i = 0; i < 10; ++i) sizes.push_back(4);
  sizes.push_back(4);
  return MlpPolicy(std::move(sizes), rng);
}

void MlpPolicy::forward(std::span<const double> obs, std::vector<std::vector<double>>& act) const {
  if (static_cast<int>(obs.size()) != num_inputs())
    throw StructuralError("MlpPolicy: observation has the wrong size");
  const std::size_t layers = sizes_.size() - 1;
  act.resize(layers + 1);
  act[0].assign(obs.begin(), obs.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + static_cast<std::size_t>(in) * out;
    auto& next = act[l + 1];
    next.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double z = b[o];
      for (int i = 0; i < in; ++i) z += w[o * in + i] * act[l][i];
      next[o] = l + 1 < layers ? std::tanh(z) : z;
    }
  }
}

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - top);
  for (double& x : p) x /= sum;
  return p;
}

}  // namespace

std::vector<double> MlpPolicy::probs(std::span<const double> obs) const {
  std::vector<std::vector<double>> act;
  forward(obs, act);
  return softmax(act.back());
}

double MlpPolicy::log_prob(std::span<const double> obs, int action) const {
  std::vector<std::vector<double>> act;
  forward(obs, act);
  const auto& z = act.back();
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double x : z) sum += std::exp(x - top);
  return z.at(action) - top - std::log(sum);
}

void MlpPolicy::add_log_prob_grad(std::span<const double> obs, int action, double scale,
                                  std::vector<double>& grad) const {
  if (grad.size() != params_.size()) throw StructuralError("MlpPolicy: gradient size mismatch");
  std::vector<std::vector<double>> act;
  forward(obs, act);
  const std::size_t layers = sizes_.size() - 1;
  // d log softmax(z)_a / dz = e_a - p
  std::vector<double> delta = softmax(act.back());
  for (double& x : delta) x = -x;
  delta.at(action) += 1.0;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + static_cast<std::size_t>(in) * out;
    for (int o = 0; o < out; ++o) {
      gb[o] += scale * delta[o];
      for (int i = 0; i < in; ++i) gw[o * in + i] += scale * delta[o] * act[l][i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (int i = 0; i < in; ++i) {
      double s = 0.0;
      for (int o = 0; o < out; ++o) s += w[o * in + i] * delta[o];
      prev[i] = s * (1.0 - act[l][i] * act[l][i]);  // act[l] = tanh of layer l-1
    }
    delta = std::move(prev);
  }
}

namespace {

template <typename T>
void put(std::ofstream& os, T x) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &x, sizeof(T));
  // stored little-endian regardless of host order
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw Error("MlpPolicy: truncated blob");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T x;
  std::memcpy(&x, b, sizeof(T));
  return x;
}

constexpr char kMagic[8] = {'E', 'P', 'F', 'M', 'L', 'P', '0', '1'};

}  // namespace

void MlpPolicy::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("MlpPolicy: cannot open " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sizes_.size()));
  for (int s : sizes_) put<std::uint32_t>(os, static_cast<std::uint32_t>(s));
  put<std::uint64_t>(os, params_.size());
  for (double p : params_) put<double>(os, p);
}

MlpPolicy MlpPolicy::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("MlpPolicy: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error("MlpPolicy: bad blob header");
  Rng dummy(0);
  const auto count = get<std::uint32_t>(is);
  std::vector<int> sizes(count);
  for (auto& s : sizes) s = static_cast<int>(get<std::uint32_t>(is));
  MlpPolicy p(sizes, dummy);
  if (get<std::uint64_t>(is) != p.params_.size()) throw Error("MlpPolicy: parameter count mismatch");
  for (double& x : p.params_) x = get<double>(is);
  return p;
}

void adam_step(AdamState& st, std::vector<double>& params, std::span<const double> grad) {
  if (grad.size() != params.size()) throw StructuralError("adam_step: gradient size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    params[i] += st.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

}  // namespace epifeed
