#include "fddm/nn/layers.hpp"

#include <cmath>

#include "fddm/error.hpp"

namespace fddm::nn {

Var ParamSet::add(std::string name, Tensor init) {
  auto p = parameter(std::move(init));
  entries_.emplace_back(std::move(name), p);
  return p;
}

void ParamSet::share(std::string name, const Var& param) {
  entries_.emplace_back(std::move(name), param);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p->value.numel();
  return n;
}

const Var* ParamSet::find(const std::string& name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return &entry.second;
  }
  return nullptr;
}

void ParamSet::zero_grad() {
  for (auto& [name, p] : entries_) {
    if (!p->grad.data.empty()) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0f);
  }
}

bool ParamSet::all_finite() const {
  for (const auto& [name, p] : entries_) {
    for (float v : p->value.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Tensor uniform_fan_in(Shape shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

Conv2d::Conv2d(ParamSet& params, const std::string& name, int in_channels, int out_channels,
               int kernel, int stride, Rng& rng, bool zero_init)
    : out_channels_(out_channels), stride_(stride), pad_(kernel / 2) {
  const int fan_in = in_channels * kernel * kernel;
  const Shape ws{out_channels, in_channels, kernel, kernel};
  const Shape bs{1, out_channels, 1, 1};
  if (zero_init) {
    weight_ = params.add(name + ".weight", Tensor(ws));
    bias_ = params.add(name + ".bias", Tensor(bs));
  } else {
    weight_ = params.add(name + ".weight", uniform_fan_in(ws, fan_in, rng));
    bias_ = params.add(name + ".bias", uniform_fan_in(bs, fan_in, rng));
  }
}

Var Conv2d::operator()(const Var& x) const { return conv2d(x, weight_, bias_, stride_, pad_); }

GroupNorm::GroupNorm(ParamSet& params, const std::string& name, int channels, int groups)
    : groups_(groups) {
  gamma_ = params.add(name + ".gamma", Tensor(Shape{1, channels, 1, 1}, 1.0f));
  beta_ = params.add(name + ".beta", Tensor(Shape{1, channels, 1, 1}, 0.0f));
}

Var GroupNorm::operator()(const Var& x) const { return group_norm(x, gamma_, beta_, groups_); }

RmsProp::RmsProp(const ParamSet& params, Options options) : options_(options) {
  for (const auto& [name, p] : params.entries()) {
    params_.push_back(p);
    square_avg_.emplace_back(p->value.numel(), 0.0f);
  }
}

void RmsProp::step() {
  const float rho = static_cast<float>(options_.rho);
  const float lr = static_cast<float>(options_.lr);
  const float eps = static_cast<float>(options_.eps);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Node& p = *params_[k];
    if (p.grad.data.empty()) continue;
    auto& v = square_avg_[k];
    for (std::size_t i = 0; i < v.size(); ++i) {
      const float g = p.grad.data[i];
      v[i] = rho * v[i] + (1.0f - rho) * g * g;
      p.value.data[i] -= lr * g / (std::sqrt(v[i]) + eps);
    }
  }
}

Ema::Ema(const ParamSet& params, double decay) : decay_(decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw Error(ErrorKind::ConfigError, "EMA decay must lie in [0, 1]");
  }
  for (const auto& [name, p] : params.entries()) shadow_.push_back(p->value);
}

void Ema::update(const ParamSet& params) {
  const auto& entries = params.entries();
  if (entries.size() != shadow_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "EMA shadow does not match parameter set");
  }
  const double keep = decay_;
  const double take = 1.0 - decay_;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& live = entries[k].second->value.data;
    auto& sh = shadow_[k].data;
    for (std::size_t i = 0; i < sh.size(); ++i) {
      sh[i] = static_cast<float>(keep * sh[i] + take * live[i]);
    }
  }
}

void swap_values(const ParamSet& params, std::vector<Tensor>& values) {
  const auto& entries = params.entries();
  if (entries.size() != values.size()) {
    throw Error(ErrorKind::DimensionMismatch, "swap_values: parameter count mismatch");
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!(entries[k].second->value.shape == values[k].shape)) {
      throw Error(ErrorKind::DimensionMismatch, "swap_values: shape mismatch at " + entries[k].first);
    }
    std::swap(entries[k].second->value, values[k]);
  }
}

}  // namespace fddm::nn
