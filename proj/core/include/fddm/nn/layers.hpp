#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fddm/nn/ops.hpp"
#include "fddm/nn/tensor.hpp"
#include "fddm/rng.hpp"

namespace fddm::nn {

/// Ordered, named collection of trainable leaves. Order is registration
/// order and is what checkpoints serialize.
class ParamSet {
 public:
  Var add(std::string name, Tensor init);
  /// Registers an existing parameter under another set (shared weights).
  void share(std::string name, const Var& param);

  const std::vector<std::pair<std::string, Var>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  const Var* find(const std::string& name) const;

  void zero_grad();
  bool all_finite() const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor uniform_fan_in(Shape shape, int fan_in, Rng& rng);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamSet& params, const std::string& name, int in_channels, int out_channels,
         int kernel, int stride, Rng& rng, bool zero_init = false);

  Var operator()(const Var& x) const;
  int out_channels() const noexcept { return out_channels_; }

 private:
  Var weight_;
  Var bias_;
  int out_channels_ = 0;
  int stride_ = 1;
  int pad_ = 0;
};

class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(ParamSet& params, const std::string& name, int channels, int groups);

  Var operator()(const Var& x) const;

 private:
  Var gamma_;
  Var beta_;
  int groups_ = 1;
};

/// Momentum-free adaptive optimizer (RMSprop):
///   v <- rho v + (1 - rho) g^2 ;  p <- p - lr g / (sqrt(v) + eps)
class RmsProp {
 public:
  struct Options {
    double lr = 1e-4;
    double rho = 0.99;
    double eps = 1e-8;
  };

  RmsProp(const ParamSet& params, Options options);
  void step();
  const Options& options() const noexcept { return options_; }

 private:
  std::vector<Var> params_;
  std::vector<std::vector<float>> square_avg_;
  Options options_;
};

/// Exponential moving average of a parameter set.
class Ema {
 public:
  Ema() = default;
  /// Shadow starts equal to the live values.
  Ema(const ParamSet& params, double decay);

  /// shadow <- decay * shadow + (1 - decay) * live
  void update(const ParamSet& params);
  double decay() const noexcept { return decay_; }
  const std::vector<Tensor>& shadow() const noexcept { return shadow_; }
  std::vector<Tensor>& shadow() noexcept { return shadow_; }

 private:
  std::vector<Tensor> shadow_;
  double decay_ = 0.9999;
};

/// Swaps the live values of params with the given tensors (same order and
/// shapes), e.g. to evaluate with EMA weights.
void swap_values(const ParamSet& params, std::vector<Tensor>& values);

}  // namespace fddm::nn
