#ifndef VLNLAB_NUMCORE_STORE_HPP
#define VLNLAB_NUMCORE_STORE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "numcore/tensor.hpp"

namespace vlnlab::num {

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 5.0;  // global-norm gradient clip; 0 disables
};

// Named trainable parameters with gradient accumulators and AdamW state.
// std::map keeps iteration order deterministic for checkpoints and updates.
class ParameterStore {
 public:
  Tensor& create(const std::string& name, int rows, int cols);
  Tensor& create_xavier(const std::string& name, int rows, int cols, Rng& rng);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);

  void zero_grads();

  // Rescales all gradients when their global L2 norm exceeds max_norm.
  void clip_gradients(double max_norm);

  // Decoupled weight decay on values; bias-corrected moments; grads zeroed.
  // Applies clip_gradients(cfg.clip_norm) first when the clip is enabled.
  void adamw_update(const AdamConfig& cfg);

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;
  long step_of(const std::string& name) const;

  // Overwrite values from a loaded checkpoint. Existing names must match
  // shapes exactly; unknown names in `values` are an error when strict.
  void load_values(const std::map<std::string, Tensor>& values, bool strict);

 private:
  struct Entry {
    Tensor value, grad, m, v;
    long step = 0;
  };
  Entry& entry(const std::string& name);
  std::map<std::string, Entry> entries_;
};

}  // namespace vlnlab::num

#endif  // VLNLAB_NUMCORE_STORE_HPP
