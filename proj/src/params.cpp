#include "clueqa/params.hpp"

namespace clueqa {

Tensor& ParamStore::add(const std::string& name, int rows, int cols,
                        bool trainable) {
  if (index_.count(name)) throw ContractError("duplicate tensor '" + name + "'");
  if (rows <= 0 || cols <= 0) {
    throw ContractError("tensor '" + name + "' has empty shape");
  }
  index_[name] = tensors_.size();
  Tensor t;
  t.name = name;
  t.value = Eigen::MatrixXd::Zero(rows, cols);
  t.trainable = trainable;
  if (trainable) {
    t.grad = Eigen::MatrixXd::Zero(rows, cols);
    t.adam_m = Eigen::MatrixXd::Zero(rows, cols);
    t.adam_v = Eigen::MatrixXd::Zero(rows, cols);
  }
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no tensor '" + name + "'");
  return tensors_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no tensor '" + name + "'");
  return tensors_[it->second];
}

void ParamStore::zero_grads() {
  for (Tensor& t : tensors_) {
    if (t.trainable) t.grad.setZero();
  }
}

void ParamStore::scale_grads(double s) {
  for (Tensor& t : tensors_) {
    if (t.trainable) t.grad *= s;
  }
}

long long ParamStore::parameter_count() const {
  long long n = 0;
  for (const Tensor& t : tensors_) n += (long long)t.value.size();
  return n;
}

void Adam::step(ParamStore& store, const std::string& only_prefix) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, (double)t_);
  double bc2 = 1.0 - std::pow(cfg_.beta2, (double)t_);
  for (Tensor& p : store.tensors()) {
    if (!p.trainable) continue;
    if (!only_prefix.empty() && p.name.rfind(only_prefix, 0) != 0) continue;
    p.adam_m = cfg_.beta1 * p.adam_m + (1.0 - cfg_.beta1) * p.grad;
    p.adam_v =
        cfg_.beta2 * p.adam_v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    Eigen::MatrixXd m_hat = p.adam_m / bc1;
    Eigen::MatrixXd v_hat = p.adam_v / bc2;
    p.value -=
        cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps)).matrix();
  }
}

}  // namespace clueqa
