#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "d2t/rng.hpp"

namespace d2t::nn {

using Mat = Eigen::MatrixXd;

class NnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named parameter with gradient and Adam state. Shared storage is the tying
// mechanism: every graph node built from the same Tensor reads and
// accumulates into the same matrices.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m, adam_v;

  void zero_grad() {
    if (grad.size() > 0) grad.setZero();
  }
};

class ParamStore {
 public:
  Tensor& create(const std::string& name, int rows, int cols);
  Tensor& glorot(const std::string& name, int rows, int cols, Rng& rng);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Tensor* find(const std::string& name);
  bool has(const std::string& name) const { return tensors_.count(name) > 0; }

  template <typename F>
  void for_each(F f) {
    for (auto& [name, t] : tensors_) f(*t);
  }
  template <typename F>
  void for_each(F f) const {
    for (const auto& [name, t] : tensors_) f(*t);
  }

  size_t size() const { return tensors_.size(); }
  long total_values() const;
  void zero_grads();
  void copy_values_from(const ParamStore& other);

 private:
  std::map<std::string, std::unique_ptr<Tensor>> tensors_;
};

// Reverse-mode tape over dense matrices. Convention throughout the models:
// feature dimension in rows, batch / positions in columns.
class Graph {
 public:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  explicit Graph(bool train_mode = true) : train_(train_mode) {}

  bool training() const { return train_; }

  Node* input(Mat v);
  Node* param(Tensor& t);

  Node* matmul(Node* a, Node* b);
  Node* add(Node* a, Node* b);
  Node* sub(Node* a, Node* b);
  Node* add_colb(Node* a, Node* bias);   // bias d×1 added to every column
  Node* mul(Node* a, Node* b);           // elementwise
  Node* mul_rowb(Node* a, Node* row);    // row 1×B scales each row of a
  Node* scale(Node* a, double s);
  Node* sigmoid(Node* a);
  Node* tanh_(Node* a);
  Node* relu(Node* a);
  Node* softmax_cols(Node* a);
  Node* concat_rows(const std::vector<Node*>& parts);
  Node* concat_cols(const std::vector<Node*>& parts);
  Node* slice_rows(Node* a, int row0, int rows);
  Node* select_cols(Node* a, std::vector<int> idx);
  Node* transpose(Node* a);
  Node* layer_norm(Node* x, Node* gain, Node* bias, double eps = 1e-6);
  Node* dropout(Node* a, double rate, Rng& rng);

  // Weighted token-level cross entropy with label smoothing, fused with the
  // softmax. logits V×B; targets/weights length B. Value is 1×1.
  Node* ce_loss(Node* logits, std::vector<int> targets, std::vector<double> weights,
                double label_smoothing);

  void backward(Node* loss);
  size_t size() const { return order_.size(); }

 private:
  Node* make(Mat v, bool needs_grad, std::function<void()> back);
  static Mat& g(Node* n);

  bool train_;
  std::deque<Node> nodes_;
  std::vector<Node*> order_;
  std::map<const Tensor*, Node*> param_nodes_;
};

// Adam with optional global-norm clipping; lr supplied per step so schedules
// live in the training loop.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  long step = 0;

  void update(ParamStore& params, double lr, double clip);
};

}  // namespace d2t::nn
