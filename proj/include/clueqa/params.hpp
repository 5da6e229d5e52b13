#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "clueqa/errors.hpp"

namespace clueqa {

// One named parameter matrix with its gradient accumulator and first/second
// moment buffers for Adam. Frozen tensors keep value only.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd adam_m;
  Eigen::MatrixXd adam_v;
  bool trainable = true;
};

// Flat registry of model parameters. Registration order is the canonical
// order for serialization and for iterating in the optimizer, so it must be
// deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, int rows, int cols, bool trainable);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void zero_grads();
  void scale_grads(double s);
  long long parameter_count() const;

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. step() consumes the accumulated gradients of
// all trainable tensors (optionally restricted to a name prefix) and leaves
// grads untouched; callers zero them per step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(ParamStore& store, const std::string& only_prefix = "");

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace clueqa
