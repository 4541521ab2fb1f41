#include "numcore/tape.hpp"

#include <algorithm>
#include <cmath>

namespace vlnlab::num {

namespace {

// c += a * b, row-major, i-k-j order.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.data() + static_cast<std::size_t>(i) * k;
    double* crow = c.data() + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a^T * b where a is (n x k): result (k x m).
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.data() + static_cast<std::size_t>(i) * k;
    const double* brow = b.data() + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T where b is (m x k), a is (n x k): result (n x m).
void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.data() + static_cast<std::size_t>(i) * k;
    double* crow = c.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* brow = b.data() + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

}  // namespace

int Tape::push(Node n) {
  require_finite(n.value, "tape op");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tape::Node& Tape::node(Var v) { return nodes_[v.id]; }
const Tape::Node& Tape::cnode(Var v) const { return nodes_[v.id]; }

void Tape::check_var(Var v, const char* op) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw InvalidInputError(std::string(op) + ": invalid tape handle");
}

Tensor& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (!n.grad_ready) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  return n.grad;
}

double Tape::scalar_of(Var v) const {
  check_var(v, "scalar_of");
  const Tensor& t = cnode(v).value;
  if (t.size() != 1)
    throw ShapeError("scalar_of: tensor has shape " + t.shape_str());
  return t.data()[0];
}

Var Tape::constant(Tensor t) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(t);
  return {push(std::move(n))};
}

Var Tape::param(const std::string& name) {
  if (!store_) throw InvalidInputError("tape has no parameter store");
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return {it->second};
  Node n;
  n.op = Op::kParam;
  n.value = store_->value(name);
  n.needs_grad = true;
  n.param_name = name;
  const int id = push(std::move(n));
  param_nodes_.emplace(name, id);
  return {id};
}

Var Tape::matmul(Var a, Var b) {
  check_var(a, "matmul");
  check_var(b, "matmul");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  if (ta.cols() != tb.rows())
    throw ShapeError("matmul: shapes " + ta.shape_str() + " and " +
                     tb.shape_str() + " are incompatible");
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  n.value = Tensor(ta.rows(), tb.cols());
  matmul_acc(ta, tb, n.value);
  return {push(std::move(n))};
}

Var Tape::transpose(Var a) {
  check_var(a, "transpose");
  const Tensor& ta = cnode(a).value;
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = Tensor(ta.cols(), ta.rows());
  for (int i = 0; i < ta.rows(); ++i)
    for (int j = 0; j < ta.cols(); ++j) n.value.at(j, i) = ta.at(i, j);
  return {push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
  check_var(a, "add");
  check_var(b, "add");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  require_same_shape(ta, tb, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value.raw()[i] += tb.data()[i];
  return {push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  check_var(a, "sub");
  check_var(b, "sub");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  require_same_shape(ta, tb, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value.raw()[i] -= tb.data()[i];
  return {push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
  check_var(a, "mul");
  check_var(b, "mul");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  require_same_shape(ta, tb, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value.raw()[i] *= tb.data()[i];
  return {push(std::move(n))};
}

Var Tape::scale(Var a, double c) {
  check_var(a, "scale");
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.c0 = c;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x *= c;
  return {push(std::move(n))};
}

Var Tape::add_scalar(Var a, double c) {
  check_var(a, "add_scalar");
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.id;
  n.c0 = c;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x += c;
  return {push(std::move(n))};
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidInputError("concat_rows: no inputs");
  int rows = 0;
  const int cols = cnode(parts[0]).value.cols();
  bool needs = false;
  for (Var p : parts) {
    check_var(p, "concat_rows");
    const Tensor& t = cnode(p).value;
    if (t.cols() != cols)
      throw ShapeError("concat_rows: column mismatch " + t.shape_str() +
                       " vs expected cols " + std::to_string(cols));
    rows += t.rows();
    needs = needs || cnode(p).needs_grad;
  }
  Node n;
  n.op = Op::kConcatRows;
  n.needs_grad = needs;
  n.value = Tensor(rows, cols);
  int r = 0;
  for (Var p : parts) {
    const Tensor& t = cnode(p).value;
    std::copy(t.data(), t.data() + t.size(),
              n.value.data() + static_cast<std::size_t>(r) * cols);
    r += t.rows();
    n.inputs.push_back(p.id);
  }
  return {push(std::move(n))};
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  check_var(a, "slice_rows");
  const Tensor& ta = cnode(a).value;
  if (r0 < 0 || r1 > ta.rows() || r0 >= r1)
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + "," +
                     std::to_string(r1) + ") out of " + ta.shape_str());
  Node n;
  n.op = Op::kSliceRows;
  n.a = a.id;
  n.i0 = r0;
  n.i1 = r1;
  n.needs_grad = cnode(a).needs_grad;
  n.value = Tensor(r1 - r0, ta.cols());
  std::copy(ta.data() + static_cast<std::size_t>(r0) * ta.cols(),
            ta.data() + static_cast<std::size_t>(r1) * ta.cols(),
            n.value.data());
  return {push(std::move(n))};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  check_var(a, "slice_cols");
  const Tensor& ta = cnode(a).value;
  if (c0 < 0 || c1 > ta.cols() || c0 >= c1)
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") out of " + ta.shape_str());
  Node n;
  n.op = Op::kSliceCols;
  n.a = a.id;
  n.i0 = c0;
  n.i1 = c1;
  n.needs_grad = cnode(a).needs_grad;
  n.value = Tensor(ta.rows(), c1 - c0);
  for (int i = 0; i < ta.rows(); ++i)
    for (int j = c0; j < c1; ++j) n.value.at(i, j - c0) = ta.at(i, j);
  return {push(std::move(n))};
}

Var Tape::softmax_rows(Var a) {
  check_var(a, "softmax_rows");
  const Tensor& ta = cnode(a).value;
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = Tensor(ta.rows(), ta.cols());
  for (int i = 0; i < ta.rows(); ++i) {
    double mx = ta.at(i, 0);
    for (int j = 1; j < ta.cols(); ++j) mx = std::max(mx, ta.at(i, j));
    double z = 0.0;
    for (int j = 0; j < ta.cols(); ++j) {
      const double e = std::exp(ta.at(i, j) - mx);
      n.value.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < ta.cols(); ++j) n.value.at(i, j) /= z;
  }
  return {push(std::move(n))};
}

Var Tape::sigmoid(Var a) {
  check_var(a, "sigmoid");
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x = 1.0 / (1.0 + std::exp(-x));
  return {push(std::move(n))};
}

Var Tape::tanh_op(Var a) {
  check_var(a, "tanh");
  Node n;
  n.op = Op::kTanh;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x = std::tanh(x);
  return {push(std::move(n))};
}

Var Tape::relu(Var a) {
  check_var(a, "relu");
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x = std::max(x, 0.0);
  return {push(std::move(n))};
}

Var Tape::log_op(Var a) {
  check_var(a, "log");
  Node n;
  n.op = Op::kLog;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) x = std::log(x);
  return {push(std::move(n))};
}

Var Tape::clamp(Var a, double lo, double hi) {
  check_var(a, "clamp");
  Node n;
  n.op = Op::kClamp;
  n.a = a.id;
  n.c0 = lo;
  n.c1 = hi;
  n.needs_grad = cnode(a).needs_grad;
  n.value = cnode(a).value;
  for (double& x : n.value.raw()) {
    if (x < lo) {
      x = lo;
      ++clamp_clips_;
    } else if (x > hi) {
      x = hi;
      ++clamp_clips_;
    }
  }
  return {push(std::move(n))};
}

Var Tape::embedding(Var table, std::vector<int> ids) {
  check_var(table, "embedding");
  const Tensor& tt = cnode(table).value;
  if (ids.empty()) throw InvalidInputError("embedding: empty id list");
  Node n;
  n.op = Op::kEmbedding;
  n.a = table.id;
  n.needs_grad = cnode(table).needs_grad;
  n.value = Tensor(static_cast<int>(ids.size()), tt.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int id = ids[r];
    if (id < 0 || id >= tt.rows())
      throw IndexError("embedding: id " + std::to_string(id) +
                       " out of table rows " + std::to_string(tt.rows()));
    std::copy(tt.data() + static_cast<std::size_t>(id) * tt.cols(),
              tt.data() + static_cast<std::size_t>(id + 1) * tt.cols(),
              n.value.data() + r * tt.cols());
  }
  n.ids = std::move(ids);
  return {push(std::move(n))};
}

Var Tape::sum(Var a) {
  check_var(a, "sum");
  const Tensor& ta = cnode(a).value;
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  double s = 0.0;
  for (double v : ta.raw()) s += v;
  n.value = Tensor(1, 1, s);
  return {push(std::move(n))};
}

Var Tape::mean(Var a) {
  check_var(a, "mean");
  const Tensor& ta = cnode(a).value;
  if (ta.size() == 0) throw InvalidInputError("mean: empty tensor");
  Node n;
  n.op = Op::kMean;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  double s = 0.0;
  for (double v : ta.raw()) s += v;
  n.value = Tensor(1, 1, s / static_cast<double>(ta.size()));
  return {push(std::move(n))};
}

Var Tape::mean_rows(Var a) {
  check_var(a, "mean_rows");
  const Tensor& ta = cnode(a).value;
  if (ta.rows() == 0) throw InvalidInputError("mean_rows: empty tensor");
  Node n;
  n.op = Op::kMeanRows;
  n.a = a.id;
  n.needs_grad = cnode(a).needs_grad;
  n.value = Tensor(1, ta.cols());
  for (int i = 0; i < ta.rows(); ++i)
    for (int j = 0; j < ta.cols(); ++j) n.value.at(0, j) += ta.at(i, j);
  for (int j = 0; j < ta.cols(); ++j)
    n.value.at(0, j) /= static_cast<double>(ta.rows());
  return {push(std::move(n))};
}

Var Tape::sqdist(Var a, Var b) {
  check_var(a, "sqdist");
  check_var(b, "sqdist");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  require_same_shape(ta, tb, "sqdist");
  Node n;
  n.op = Op::kSqDist;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double d = ta.data()[i] - tb.data()[i];
    s += d * d;
  }
  n.value = Tensor(1, 1, s);
  return {push(std::move(n))};
}

Var Tape::pairwise_distance(Var a, Var b) {
  check_var(a, "pairwise_distance");
  check_var(b, "pairwise_distance");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  if (ta.cols() != tb.cols())
    throw ShapeError("pairwise_distance: shapes " + ta.shape_str() + " and " +
                     tb.shape_str() + " have different widths");
  Node n;
  n.op = Op::kPairDist;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = cnode(a).needs_grad || cnode(b).needs_grad;
  double s = 0.0;
  for (int j = 0; j < ta.cols(); ++j) {
    double pa = 0.0, pb = 0.0;
    for (int i = 0; i < ta.rows(); ++i) pa += ta.at(i, j);
    for (int i = 0; i < tb.rows(); ++i) pb += tb.at(i, j);
    pa /= ta.rows();
    pb /= tb.rows();
    const double d = pa - pb;
    s += d * d;
  }
  n.value = Tensor(1, 1, std::sqrt(s));
  return {push(std::move(n))};
}

Var Tape::row_scale(Var x, Var m) {
  check_var(x, "row_scale");
  check_var(m, "row_scale");
  const Tensor& tx = cnode(x).value;
  const Tensor& tm = cnode(m).value;
  if (tm.cols() != 1 || tm.rows() != tx.rows())
    throw ShapeError("row_scale: mask " + tm.shape_str() +
                     " incompatible with " + tx.shape_str());
  Node n;
  n.op = Op::kRowScale;
  n.a = x.id;
  n.b = m.id;
  n.needs_grad = cnode(x).needs_grad || cnode(m).needs_grad;
  n.value = tx;
  for (int i = 0; i < tx.rows(); ++i) {
    const double s = tm.at(i, 0);
    for (int j = 0; j < tx.cols(); ++j) n.value.at(i, j) *= s;
  }
  return {push(std::move(n))};
}

Var Tape::pick(Var a, int r, int c) {
  Var row = slice_rows(a, r, r + 1);
  return slice_cols(row, c, c + 1);
}

void Tape::backward(Var loss) {
  check_var(loss, "backward");
  const Tensor& lv = cnode(loss).value;
  if (lv.size() != 1)
    throw ShapeError("backward: loss has shape " + lv.shape_str());
  grad_of(loss.id).data()[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.grad_ready || !n.needs_grad) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam: {
        Tensor& pg = store_->grad(n.param_name);
        for (std::size_t i = 0; i < g.size(); ++i)
          pg.raw()[i] += g.data()[i];
        break;
      }
      case Op::kMatMul: {
        if (nodes_[n.a].needs_grad)
          matmul_nt_acc(g, nodes_[n.b].value, grad_of(n.a));
        if (nodes_[n.b].needs_grad)
          matmul_tn_acc(nodes_[n.a].value, g, grad_of(n.b));
        break;
      }
      case Op::kTranspose: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
        }
        break;
      }
      case Op::kAdd: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga.raw()[i] += g.data()[i];
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb.raw()[i] += g.data()[i];
        }
        break;
      }
      case Op::kSub: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga.raw()[i] += g.data()[i];
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb.raw()[i] -= g.data()[i];
        }
        break;
      }
      case Op::kMul: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& tb = nodes_[n.b].value;
          for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.data()[i] * tb.data()[i];
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = grad_of(n.b);
          const Tensor& ta = nodes_[n.a].value;
          for (std::size_t i = 0; i < g.size(); ++i)
            gb.raw()[i] += g.data()[i] * ta.data()[i];
        }
        break;
      }
      case Op::kScale: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.data()[i] * n.c0;
        }
        break;
      }
      case Op::kAddScalar: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga.raw()[i] += g.data()[i];
        }
        break;
      }
      case Op::kConcatRows: {
        int r = 0;
        for (int input : n.inputs) {
          const Tensor& tv = nodes_[input].value;
          if (nodes_[input].needs_grad) {
            Tensor& gi = grad_of(input);
            for (int i = 0; i < tv.rows(); ++i)
              for (int j = 0; j < tv.cols(); ++j)
                gi.at(i, j) += g.at(r + i, j);
          }
          r += tv.rows();
        }
        break;
      }
      case Op::kSliceRows: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j)
              ga.at(n.i0 + i, j) += g.at(i, j);
        }
        break;
      }
      case Op::kSliceCols: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j)
              ga.at(i, n.i0 + j) += g.at(i, j);
        }
        break;
      }
      case Op::kSoftmaxRows: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (int i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols(); ++j)
              ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
          }
        }
        break;
      }
      case Op::kSigmoid: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
        }
        break;
      }
      case Op::kTanh: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
        }
        break;
      }
      case Op::kRelu: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = nodes_[n.a].value;
          for (std::size_t i = 0; i < g.size(); ++i)
            if (x.data()[i] > 0.0) ga.raw()[i] += g.data()[i];
        }
        break;
      }
      case Op::kLog: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = nodes_[n.a].value;
          for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.data()[i] / x.data()[i];
        }
        break;
      }
      case Op::kClamp: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = nodes_[n.a].value;
          for (std::size_t i = 0; i < g.size(); ++i)
            if (x.data()[i] > n.c0 && x.data()[i] < n.c1)
              ga.raw()[i] += g.data()[i];
        }
        break;
      }
      case Op::kEmbedding: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const int cols = g.cols();
          for (std::size_t r = 0; r < n.ids.size(); ++r)
            for (int j = 0; j < cols; ++j)
              ga.at(n.ids[r], j) += g.at(static_cast<int>(r), j);
        }
        break;
      }
      case Op::kSum: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const double gv = g.data()[0];
          for (double& x : ga.raw()) x += gv;
        }
        break;
      }
      case Op::kMean: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const double gv = g.data()[0] / static_cast<double>(ga.size());
          for (double& x : ga.raw()) x += gv;
        }
        break;
      }
      case Op::kMeanRows: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          const double inv = 1.0 / ga.rows();
          for (int i = 0; i < ga.rows(); ++i)
            for (int j = 0; j < ga.cols(); ++j)
              ga.at(i, j) += g.at(0, j) * inv;
        }
        break;
      }
      case Op::kSqDist: {
        const double gv = g.data()[0];
        const Tensor& ta = nodes_[n.a].value;
        const Tensor& tb = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < ta.size(); ++i)
            ga.raw()[i] += 2.0 * gv * (ta.data()[i] - tb.data()[i]);
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < ta.size(); ++i)
            gb.raw()[i] -= 2.0 * gv * (ta.data()[i] - tb.data()[i]);
        }
        break;
      }
      case Op::kPairDist: {
        const double dist = n.value.data()[0];
        // Subgradient 0 at coincident pooled points.
        if (dist > 1e-12) {
          const double gv = g.data()[0];
          const Tensor& ta = nodes_[n.a].value;
          const Tensor& tb = nodes_[n.b].value;
          const int cols = ta.cols();
          std::vector<double> diff(cols, 0.0);
          for (int j = 0; j < cols; ++j) {
            double pa = 0.0, pb = 0.0;
            for (int i = 0; i < ta.rows(); ++i) pa += ta.at(i, j);
            for (int i = 0; i < tb.rows(); ++i) pb += tb.at(i, j);
            diff[j] = pa / ta.rows() - pb / tb.rows();
          }
          if (nodes_[n.a].needs_grad) {
            Tensor& ga = grad_of(n.a);
            const double f = gv / (dist * ta.rows());
            for (int i = 0; i < ta.rows(); ++i)
              for (int j = 0; j < cols; ++j) ga.at(i, j) += f * diff[j];
          }
          if (nodes_[n.b].needs_grad) {
            Tensor& gb = grad_of(n.b);
            const double f = gv / (dist * tb.rows());
            for (int i = 0; i < tb.rows(); ++i)
              for (int j = 0; j < cols; ++j) gb.at(i, j) -= f * diff[j];
          }
        }
        break;
      }
      case Op::kRowScale: {
        const Tensor& tx = nodes_[n.a].value;
        const Tensor& tm = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) {
          Tensor& gx = grad_of(n.a);
          for (int i = 0; i < tx.rows(); ++i) {
            const double s = tm.at(i, 0);
            for (int j = 0; j < tx.cols(); ++j) gx.at(i, j) += g.at(i, j) * s;
          }
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gm = grad_of(n.b);
          for (int i = 0; i < tx.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < tx.cols(); ++j) dot += g.at(i, j) * tx.at(i, j);
            gm.at(i, 0) += dot;
          }
        }
        break;
      }
    }
  }
}

double evaluate_and_grad(ParameterStore& store,
                         const std::function<Var(Tape&)>& build) {
  Tape tape(&store);
  Var loss = build(tape);
  const double value = tape.scalar_of(loss);
  tape.backward(loss);
  return value;
}

}  // namespace vlnlab::num
