#include "d2t/nn/graph.hpp"

#include <cmath>

namespace d2t::nn {

Tensor& ParamStore::create(const std::string& name, int rows, int cols) {
  if (tensors_.count(name) > 0) throw NnError("duplicate parameter " + name);
  auto t = std::make_unique<Tensor>();
  t->name = name;
  t->value = Mat::Zero(rows, cols);
  Tensor& ref = *t;
  tensors_[name] = std::move(t);
  return ref;
}

Tensor& ParamStore::glorot(const std::string& name, int rows, int cols, Rng& rng) {
  Tensor& t = create(name, rows, cols);
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) t.value(i, j) = rng.uniform(-bound, bound);
  return t;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NnError("unknown parameter " + name);
  return *it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NnError("unknown parameter " + name);
  return *it->second;
}

Tensor* ParamStore::find(const std::string& name) {
  auto it = tensors_.find(name);
  return it == tensors_.end() ? nullptr : it->second.get();
}

long ParamStore::total_values() const {
  long n = 0;
  for (const auto& [name, t] : tensors_) n += static_cast<long>(t->value.size());
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : tensors_) t->zero_grad();
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, t] : tensors_) t->value = other.at(name).value;
}

// --- Graph ---------------------------------------------------------------------

Graph::Node* Graph::make(Mat v, bool needs_grad, std::function<void()> back) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  n->value = std::move(v);
  n->needs_grad = needs_grad;
  n->backward = std::move(back);
  order_.push_back(n);
  return n;
}

Mat& Graph::g(Node* n) {
  if (n->grad.size() == 0) n->grad = Mat::Zero(n->value.rows(), n->value.cols());
  return n->grad;
}

Graph::Node* Graph::input(Mat v) { return make(std::move(v), false, {}); }

Graph::Node* Graph::param(Tensor& t) {
  if (auto it = param_nodes_.find(&t); it != param_nodes_.end()) return it->second;
  Node* n = make(t.value, true, {});
  Tensor* tp = &t;
  n->backward = [n, tp]() {
    if (tp->grad.size() == 0) tp->grad = Mat::Zero(n->value.rows(), n->value.cols());
    tp->grad += n->grad;
  };
  param_nodes_[&t] = n;
  return n;
}

Graph::Node* Graph::matmul(Node* a, Node* b) {
  if (a->value.cols() != b->value.rows()) throw NnError("matmul shape mismatch");
  Node* n = make(a->value * b->value, a->needs_grad || b->needs_grad, {});
  n->backward = [n, a, b]() {
    if (a->needs_grad) g(a).noalias() += n->grad * b->value.transpose();
    if (b->needs_grad) g(b).noalias() += a->value.transpose() * n->grad;
  };
  return n;
}

Graph::Node* Graph::add(Node* a, Node* b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw NnError("add shape mismatch");
  Node* n = make(a->value + b->value, a->needs_grad || b->needs_grad, {});
  n->backward = [n, a, b]() {
    if (a->needs_grad) g(a) += n->grad;
    if (b->needs_grad) g(b) += n->grad;
  };
  return n;
}

Graph::Node* Graph::sub(Node* a, Node* b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw NnError("sub shape mismatch");
  Node* n = make(a->value - b->value, a->needs_grad || b->needs_grad, {});
  n->backward = [n, a, b]() {
    if (a->needs_grad) g(a) += n->grad;
    if (b->needs_grad) g(b) -= n->grad;
  };
  return n;
}

Graph::Node* Graph::add_colb(Node* a, Node* bias) {
  if (bias->value.cols() != 1 || bias->value.rows() != a->value.rows())
    throw NnError("add_colb: bias must be rows(a) x 1");
  Mat v = a->value.colwise() + Eigen::VectorXd(bias->value.col(0));
  Node* n = make(std::move(v), a->needs_grad || bias->needs_grad, {});
  n->backward = [n, a, bias]() {
    if (a->needs_grad) g(a) += n->grad;
    if (bias->needs_grad) g(bias) += n->grad.rowwise().sum();
  };
  return n;
}

Graph::Node* Graph::mul(Node* a, Node* b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw NnError("mul shape mismatch");
  Node* n = make(a->value.cwiseProduct(b->value), a->needs_grad || b->needs_grad, {});
  n->backward = [n, a, b]() {
    if (a->needs_grad) g(a) += n->grad.cwiseProduct(b->value);
    if (b->needs_grad) g(b) += n->grad.cwiseProduct(a->value);
  };
  return n;
}

Graph::Node* Graph::mul_rowb(Node* a, Node* row) {
  if (row->value.rows() != 1 || row->value.cols() != a->value.cols())
    throw NnError("mul_rowb: row must be 1 x cols(a)");
  Mat v = a->value.array().rowwise() * row->value.row(0).array();
  Node* n = make(std::move(v), a->needs_grad || row->needs_grad, {});
  n->backward = [n, a, row]() {
    if (a->needs_grad)
      g(a).array() += n->grad.array().rowwise() * row->value.row(0).array();
    if (row->needs_grad)
      g(row) += n->grad.cwiseProduct(a->value).colwise().sum();
  };
  return n;
}

Graph::Node* Graph::scale(Node* a, double s) {
  Node* n = make(a->value * s, a->needs_grad, {});
  n->backward = [n, a, s]() {
    if (a->needs_grad) g(a) += n->grad * s;
  };
  return n;
}

Graph::Node* Graph::sigmoid(Node* a) {
  Mat v = (1.0 / (1.0 + (-a->value.array()).exp())).matrix();
  Node* n = make(std::move(v), a->needs_grad, {});
  n->backward = [n, a]() {
    if (a->needs_grad)
      g(a).array() += n->grad.array() * n->value.array() * (1.0 - n->value.array());
  };
  return n;
}

Graph::Node* Graph::tanh_(Node* a) {
  Node* n = make(a->value.array().tanh().matrix(), a->needs_grad, {});
  n->backward = [n, a]() {
    if (a->needs_grad)
      g(a).array() += n->grad.array() * (1.0 - n->value.array().square());
  };
  return n;
}

Graph::Node* Graph::relu(Node* a) {
  Node* n = make(a->value.cwiseMax(0.0), a->needs_grad, {});
  n->backward = [n, a]() {
    if (a->needs_grad)
      g(a).array() += n->grad.array() * (a->value.array() > 0.0).cast<double>();
  };
  return n;
}

Graph::Node* Graph::softmax_cols(Node* a) {
  Mat v = a->value;
  for (int j = 0; j < v.cols(); ++j) {
    Eigen::VectorXd col = v.col(j);
    double mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    v.col(j) = col / col.sum();
  }
  Node* n = make(std::move(v), a->needs_grad, {});
  n->backward = [n, a]() {
    if (!a->needs_grad) return;
    for (int j = 0; j < n->value.cols(); ++j) {
      Eigen::VectorXd y = n->value.col(j);
      Eigen::VectorXd gy = n->grad.col(j);
      double dot = y.dot(gy);
      g(a).col(j) += y.cwiseProduct(gy) - y * dot;
    }
  };
  return n;
}

Graph::Node* Graph::concat_rows(const std::vector<Node*>& parts) {
  if (parts.empty()) throw NnError("concat_rows: no parts");
  long rows = 0;
  long cols = parts[0]->value.cols();
  bool needs = false;
  for (Node* p : parts) {
    if (p->value.cols() != cols) throw NnError("concat_rows: column mismatch");
    rows += p->value.rows();
    needs = needs || p->needs_grad;
  }
  Mat v(rows, cols);
  long r = 0;
  for (Node* p : parts) {
    v.block(r, 0, p->value.rows(), cols) = p->value;
    r += p->value.rows();
  }
  std::vector<Node*> ps = parts;
  Node* n = make(std::move(v), needs, {});
  n->backward = [n, ps]() {
    long r = 0;
    for (Node* p : ps) {
      if (p->needs_grad)
        g(p) += n->grad.block(r, 0, p->value.rows(), n->grad.cols());
      r += p->value.rows();
    }
  };
  return n;
}

Graph::Node* Graph::concat_cols(const std::vector<Node*>& parts) {
  if (parts.empty()) throw NnError("concat_cols: no parts");
  long cols = 0;
  long rows = parts[0]->value.rows();
  bool needs = false;
  for (Node* p : parts) {
    if (p->value.rows() != rows) throw NnError("concat_cols: row mismatch");
    cols += p->value.cols();
    needs = needs || p->needs_grad;
  }
  Mat v(rows, cols);
  long c = 0;
  for (Node* p : parts) {
    v.block(0, c, rows, p->value.cols()) = p->value;
    c += p->value.cols();
  }
  std::vector<Node*> ps = parts;
  Node* n = make(std::move(v), needs, {});
  n->backward = [n, ps]() {
    long c = 0;
    for (Node* p : ps) {
      if (p->needs_grad)
        g(p) += n->grad.block(0, c, n->grad.rows(), p->value.cols());
      c += p->value.cols();
    }
  };
  return n;
}

Graph::Node* Graph::slice_rows(Node* a, int row0, int rows) {
  if (row0 < 0 || row0 + rows > a->value.rows()) throw NnError("slice_rows: out of range");
  Node* n = make(a->value.block(row0, 0, rows, a->value.cols()), a->needs_grad, {});
  n->backward = [n, a, row0, rows]() {
    if (a->needs_grad) g(a).block(row0, 0, rows, a->value.cols()) += n->grad;
  };
  return n;
}

Graph::Node* Graph::select_cols(Node* a, std::vector<int> idx) {
  Mat v(a->value.rows(), static_cast<long>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= a->value.cols()) throw NnError("select_cols: out of range");
    v.col(static_cast<long>(k)) = a->value.col(idx[k]);
  }
  Node* n = make(std::move(v), a->needs_grad, {});
  n->backward = [n, a, idx = std::move(idx)]() {
    if (!a->needs_grad) return;
    for (size_t k = 0; k < idx.size(); ++k)
      g(a).col(idx[k]) += n->grad.col(static_cast<long>(k));
  };
  return n;
}

Graph::Node* Graph::transpose(Node* a) {
  Node* n = make(a->value.transpose(), a->needs_grad, {});
  n->backward = [n, a]() {
    if (a->needs_grad) g(a) += n->grad.transpose();
  };
  return n;
}

Graph::Node* Graph::layer_norm(Node* x, Node* gain, Node* bias, double eps) {
  long d = x->value.rows();
  if (gain->value.rows() != d || bias->value.rows() != d ||
      gain->value.cols() != 1 || bias->value.cols() != 1)
    throw NnError("layer_norm: gain/bias must be rows(x) x 1");
  Mat xhat(d, x->value.cols());
  Eigen::VectorXd inv_std(x->value.cols());
  for (int j = 0; j < x->value.cols(); ++j) {
    double mean = x->value.col(j).mean();
    Eigen::VectorXd centered = x->value.col(j).array() - mean;
    double var = centered.squaredNorm() / static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + eps);
    xhat.col(j) = centered * is;
    inv_std(j) = is;
  }
  Mat v = (xhat.array().colwise() * Eigen::ArrayXd(gain->value.col(0).array())).matrix();
  v = v.colwise() + Eigen::VectorXd(bias->value.col(0));
  Node* n = make(std::move(v), x->needs_grad || gain->needs_grad || bias->needs_grad, {});
  n->backward = [n, x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std),
                 d]() {
    if (gain->needs_grad)
      g(gain) += n->grad.cwiseProduct(xhat).rowwise().sum();
    if (bias->needs_grad) g(bias) += n->grad.rowwise().sum();
    if (!x->needs_grad) return;
    for (int j = 0; j < n->grad.cols(); ++j) {
      Eigen::VectorXd dy = n->grad.col(j).cwiseProduct(gain->value.col(0));
      double m1 = dy.mean();
      double m2 = dy.cwiseProduct(xhat.col(j)).mean();
      g(x).col(j) +=
          inv_std(j) * (dy.array() - m1 - xhat.col(j).array() * m2).matrix();
    }
    (void)d;
  };
  return n;
}

Graph::Node* Graph::dropout(Node* a, double rate, Rng& rng) {
  if (!train_ || rate <= 0.0) return a;
  Mat mask(a->value.rows(), a->value.cols());
  double keep = 1.0 - rate;
  for (int j = 0; j < mask.cols(); ++j)
    for (int i = 0; i < mask.rows(); ++i)
      mask(i, j) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  Node* n = make(a->value.cwiseProduct(mask), a->needs_grad, {});
  n->backward = [n, a, mask = std::move(mask)]() {
    if (a->needs_grad) g(a) += n->grad.cwiseProduct(mask);
  };
  return n;
}

Graph::Node* Graph::ce_loss(Node* logits, std::vector<int> targets,
                            std::vector<double> weights, double label_smoothing) {
  long V = logits->value.rows();
  long B = logits->value.cols();
  if (static_cast<long>(targets.size()) != B ||
      static_cast<long>(weights.size()) != B)
    throw NnError("ce_loss: target/weight length mismatch");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (wsum <= 0.0) throw NnError("ce_loss: all weights zero");

  Mat probs(V, B);
  double loss = 0.0;
  double eps = label_smoothing;
  for (long j = 0; j < B; ++j) {
    Eigen::VectorXd col = logits->value.col(j);
    double mx = col.maxCoeff();
    Eigen::ArrayXd ex = (col.array() - mx).exp();
    double z = ex.sum();
    Eigen::VectorXd p = (ex / z).matrix();
    probs.col(j) = p;
    if (weights[static_cast<size_t>(j)] == 0.0) continue;
    int t = targets[static_cast<size_t>(j)];
    if (t < 0 || t >= V) throw NnError("ce_loss: target id out of range");
    double log_z = std::log(z) + mx;
    // loss_b = -sum_v q_v log p_v with q = smoothed one-hot
    double sum_logp = (col.array() - log_z).sum();
    double logp_t = col(t) - log_z;
    double l = -((1.0 - eps) * logp_t + (eps / static_cast<double>(V)) * sum_logp);
    loss += weights[static_cast<size_t>(j)] * l;
  }
  Mat v(1, 1);
  v(0, 0) = loss / wsum;
  Node* n = make(std::move(v), logits->needs_grad, {});
  n->backward = [n, logits, targets = std::move(targets), weights = std::move(weights),
                 probs = std::move(probs), eps, V, wsum]() {
    if (!logits->needs_grad) return;
    double scale = n->grad(0, 0) / wsum;
    for (long j = 0; j < probs.cols(); ++j) {
      double w = weights[static_cast<size_t>(j)];
      if (w == 0.0) continue;
      Eigen::VectorXd q =
          Eigen::VectorXd::Constant(V, eps / static_cast<double>(V));
      q(targets[static_cast<size_t>(j)]) += 1.0 - eps;
      g(logits).col(j) += (probs.col(j) - q) * (w * scale);
    }
  };
  return n;
}

void Graph::backward(Node* loss) {
  if (loss->value.rows() != 1 || loss->value.cols() != 1)
    throw NnError("backward: loss must be scalar");
  loss->grad = Mat::Ones(1, 1);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    Node* n = *it;
    if (n->needs_grad && n->backward && n->grad.size() > 0) n->backward();
  }
}

void Adam::update(ParamStore& params, double lr, double clip) {
  if (clip > 0.0) {
    double total = 0.0;
    params.for_each([&](Tensor& t) {
      if (t.grad.size() > 0) total += t.grad.squaredNorm();
    });
    total = std::sqrt(total);
    if (total > clip) {
      double f = clip / total;
      params.for_each([&](Tensor& t) {
        if (t.grad.size() > 0) t.grad *= f;
      });
    }
  }
  ++step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.for_each([&](Tensor& t) {
    if (t.grad.size() == 0) return;
    if (t.adam_m.size() == 0) {
      t.adam_m = Mat::Zero(t.value.rows(), t.value.cols());
      t.adam_v = Mat::Zero(t.value.rows(), t.value.cols());
    }
    t.adam_m = beta1 * t.adam_m + (1.0 - beta1) * t.grad;
    t.adam_v = beta2 * t.adam_v.array() + (1.0 - beta2) * t.grad.array().square();
    Eigen::ArrayXXd mhat = t.adam_m.array() / bc1;
    Eigen::ArrayXXd vhat = t.adam_v.array() / bc2;
    t.value.array() -= lr * mhat / (vhat.sqrt() + eps);
    t.grad.setZero();
  });
}

}  // namespace d2t::nn
