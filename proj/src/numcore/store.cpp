#include "numcore/store.hpp"

#include <cmath>

namespace vlnlab::num {

Tensor& ParameterStore::create(const std::string& name, int rows, int cols) {
  if (entries_.count(name))
    throw InvalidParameterError("parameter already exists: " + name);
  Entry e;
  e.value = Tensor(rows, cols);
  e.grad = Tensor(rows, cols);
  e.m = Tensor(rows, cols);
  e.v = Tensor(rows, cols);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParameterStore::create_xavier(const std::string& name, int rows,
                                      int cols, Rng& rng) {
  Tensor& t = create(name, rows, cols);
  const double r = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.raw()) x = rng.uniform(-r, r);
  return t;
}

ParameterStore::Entry& ParameterStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw NotFoundError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::value(const std::string& name) { return entry(name).value; }

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw NotFoundError("unknown parameter: " + name);
  return it->second.value;
}

Tensor& ParameterStore::grad(const std::string& name) { return entry(name).grad; }

void ParameterStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

void ParameterStore::clip_gradients(double max_norm) {
  if (max_norm <= 0.0)
    throw InvalidParameterError("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (const auto& [name, e] : entries_)
    for (double g : e.grad.raw()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto& [name, e] : entries_)
    for (double& g : e.grad.raw()) g *= scale;
}

void ParameterStore::adamw_update(const AdamConfig& cfg) {
  if (cfg.lr <= 0.0)
    throw InvalidParameterError("adamw: learning rate must be positive");
  if (cfg.clip_norm > 0.0) clip_gradients(cfg.clip_norm);
  for (auto& [name, e] : entries_) {
    e.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    double* val = e.value.data();
    double* g = e.grad.data();
    double* m = e.m.data();
    double* v = e.v.data();
    const std::size_t n = e.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) +
                          cfg.weight_decay * val[i]);
      g[i] = 0.0;
    }
    require_finite(e.value, "adamw_update");
  }
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

long ParameterStore::step_of(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw NotFoundError("unknown parameter: " + name);
  return it->second.step;
}

void ParameterStore::load_values(const std::map<std::string, Tensor>& values,
                                 bool strict) {
  for (const auto& [name, tensor] : values) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      if (strict) throw NotFoundError("checkpoint parameter not in model: " + name);
      continue;
    }
    if (!it->second.value.same_shape(tensor))
      throw ShapeError("parameter " + name + ": checkpoint shape " +
                       tensor.shape_str() + " does not match model shape " +
                       it->second.value.shape_str());
    it->second.value = tensor;
  }
}

}  // namespace vlnlab::num
