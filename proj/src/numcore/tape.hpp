#ifndef VLNLAB_NUMCORE_TAPE_HPP
#define VLNLAB_NUMCORE_TAPE_HPP

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "numcore/store.hpp"
#include "numcore/tensor.hpp"

namespace vlnlab::num {

// Handle into a Tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over a linear tape. Nodes are created in topological
// order by construction, so backward is a single reverse sweep. Parameter
// leaves are memoized per tape and flush their gradients into the bound
// ParameterStore at the end of backward().
class Tape {
 public:
  explicit Tape(ParameterStore* store = nullptr) : store_(store) {}

  Var constant(Tensor t);
  // Parameter leaf, memoized per tape: the value is snapshotted at first
  // use, so mutate the store only between tapes.
  Var param(const std::string& name);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var concat_rows(std::span<const Var> parts);
  Var slice_rows(Var a, int r0, int r1);
  Var slice_cols(Var a, int c0, int c1);
  Var softmax_rows(Var a);
  Var sigmoid(Var a);
  Var tanh_op(Var a);
  Var relu(Var a);
  Var log_op(Var a);
  Var clamp(Var a, double lo, double hi);
  Var embedding(Var table, std::vector<int> ids);
  Var sum(Var a);
  Var mean(Var a);
  Var mean_rows(Var a);
  Var sqdist(Var a, Var b);
  // Euclidean distance between mean-pooled rows of a and b (both KxD).
  Var pairwise_distance(Var a, Var b);
  // x: LxD, m: Lx1 -> row r scaled by m[r].
  Var row_scale(Var x, Var m);
  Var pick(Var a, int r, int c);

  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  double scalar_of(Var v) const;

  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }
  long clamp_clip_count() const { return clamp_clips_; }

 private:
  enum class Op {
    kConstant, kParam, kMatMul, kTranspose, kAdd, kSub, kMul, kScale,
    kAddScalar, kConcatRows, kSliceRows, kSliceCols, kSoftmaxRows, kSigmoid,
    kTanh, kRelu, kLog, kClamp, kEmbedding, kSum, kMean, kMeanRows, kSqDist,
    kPairDist, kRowScale,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    std::vector<int> inputs;   // concat only
    Tensor value;
    Tensor grad;               // allocated lazily during backward
    bool needs_grad = false;
    bool grad_ready = false;
    double c0 = 0.0, c1 = 0.0; // scalar / clamp bounds / slice range
    int i0 = 0, i1 = 0;
    std::vector<int> ids;      // embedding lookups
    std::string param_name;
  };

  int push(Node n);
  Node& node(Var v);
  const Node& cnode(Var v) const;
  Tensor& grad_of(int id);
  void check_var(Var v, const char* op) const;

  ParameterStore* store_ = nullptr;
  std::deque<Node> nodes_;  // stable references: val() stays valid as the
                            // tape grows
  std::map<std::string, int> param_nodes_;
  long clamp_clips_ = 0;
};

// Builds an expression against `store`, runs backward, returns the scalar
// loss. Gradients accumulate into the store.
double evaluate_and_grad(ParameterStore& store,
                         const std::function<Var(Tape&)>& build);

}  // namespace vlnlab::num

#endif  // VLNLAB_NUMCORE_TAPE_HPP
