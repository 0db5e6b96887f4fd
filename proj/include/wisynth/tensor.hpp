#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wisynth/errors.hpp"

namespace wisynth {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// N-dimensional real array participating in a reverse-mode graph. Copying
// a Tensor copies a handle; the underlying node is shared.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false)
      : node_(std::make_shared<detail::Node>()) {
    node_->shape = std::move(shape);
    node_->data.assign(shape_size(node_->shape), fill);
    node_->requires_grad = requires_grad;
  }

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false) {
    if (shape_size(shape) != data.size())
      throw ShapeError("data length does not match shape");
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = std::move(shape);
    t.node_->data = std::move(data);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from_data({1}, {v}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }

  void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

  double item() const {
    if (size() != 1) throw NotScalar();
    return node_->data[0];
  }

  // Leaf copy sharing no graph history.
  Tensor detach() const {
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = node_->shape;
    t.node_->data = node_->data;
    t.node_->requires_grad = false;
    return t;
  }

  // Reverse-mode accumulation from this scalar into every reachable leaf.
  void backward() const {
    if (size() != 1) throw NotScalar();
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        detail::Node* p = n->parents[idx++].get();
        if (p->requires_grad && seen.insert(p).second)
          stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    for (detail::Node* n : order) n->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backprop) (*it)->backprop();
  }

  std::shared_ptr<detail::Node> node() const { return node_; }

  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

inline Tensor make_op(Shape shape, std::vector<Tensor> parents,
                      std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data.assign(shape_size(node->shape), 0.0);
  for (const Tensor& p : parents) {
    node->parents.push_back(p.node());
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  if (node->requires_grad && backprop) {
    Node* raw = node.get();
    node->backprop = [raw, fn = std::move(backprop)]() { fn(*raw); };
  }
  return Tensor::wrap(node);
}

inline void check_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("tensor shapes differ");
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b);
  Tensor out = detail::make_op(a.shape(), {a, b}, [](detail::Node& n) {
    for (int k = 0; k < 2; ++k) {
      auto& p = *n.parents[k];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b);
  Tensor out = detail::make_op(a.shape(), {a, b}, [](detail::Node& n) {
    for (int k = 0; k < 2; ++k) {
      auto& p = *n.parents[k];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      const double sign = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        p.grad[i] += sign * n.grad[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b);
  Tensor out = detail::make_op(a.shape(), {a, b}, [](detail::Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        pa.grad[i] += n.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        pb.grad[i] += n.grad[i] * pa.data[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

// Elementwise a + b*x.
inline Tensor affine(const Tensor& x, double a, double b) {
  Tensor out = detail::make_op(x.shape(), {x}, [b](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p.grad[i] += b * n.grad[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a + b * x.data()[i];
  return out;
}

inline Tensor scale(const Tensor& x, double s) { return affine(x, 0.0, s); }
inline Tensor neg(const Tensor& x) { return affine(x, 0.0, -1.0); }

inline Tensor log_t(const Tensor& x) {
  Tensor out = detail::make_op(x.shape(), {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p.grad[i] += n.grad[i] / p.data[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x.data()[i] <= 0.0)
      throw DomainError("log argument must be positive");
    out.data()[i] = std::log(x.data()[i]);
  }
  return out;
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = detail::make_op(x.shape(), {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p.grad[i] += n.grad[i] * n.data[i] * (1.0 - n.data[i]);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
  return out;
}

inline Tensor tanh_t(const Tensor& x) {
  Tensor out = detail::make_op(x.shape(), {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p.grad[i] += n.grad[i] * (1.0 - n.data[i] * n.data[i]);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::tanh(x.data()[i]);
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor out = detail::make_op(x.shape(), {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (p.data[i] > 0.0) p.grad[i] += n.grad[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  return out;
}

inline Tensor leaky_relu(const Tensor& x, double slope = 0.2) {
  Tensor out = detail::make_op(x.shape(), {x}, [slope](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p.grad[i] += n.grad[i] * (p.data[i] > 0.0 ? 1.0 : slope);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : slope * x.data()[i];
  return out;
}

inline Tensor sum(const Tensor& x) {
  Tensor out = detail::make_op({1}, {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (double& g : p.grad) g += n.grad[0];
  });
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc;
  return out;
}

inline Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor out = detail::make_op({1}, {x}, [inv](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (double& g : p.grad) g += inv * n.grad[0];
  });
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc * inv;
  return out;
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw ShapeError("reshape changes element count");
  Tensor out = detail::make_op(std::move(shape), {x}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
  });
  out.data() = x.data();
  return out;
}

// Stacks same-shape tensors along a new leading axis.
inline Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack of nothing");
  const std::size_t block = parts[0].size();
  for (const Tensor& p : parts) detail::check_same_shape(parts[0], p);
  Shape shape;
  shape.push_back(parts.size());
  shape.insert(shape.end(), parts[0].shape().begin(), parts[0].shape().end());
  Tensor out = detail::make_op(std::move(shape), parts,
                               [block](detail::Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      auto& p = *n.parents[k];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < block; ++i)
        p.grad[i] += n.grad[k * block + i];
    }
  });
  for (std::size_t k = 0; k < parts.size(); ++k)
    std::copy(parts[k].data().begin(), parts[k].data().end(),
              out.data().begin() + k * block);
  return out;
}

// W (m, n) times x (n) -> (m).
inline Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2 || x.shape().size() != 1 ||
      w.shape()[1] != x.shape()[0])
    throw ShapeError("matvec shape mismatch");
  const std::size_t m = w.shape()[0];
  const std::size_t n = w.shape()[1];
  Tensor out = detail::make_op({m}, {w, x}, [m, n](detail::Node& node) {
    auto& pw = *node.parents[0];
    auto& px = *node.parents[1];
    if (pw.requires_grad) {
      pw.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          pw.grad[i * n + j] += node.grad[i] * px.data[j];
    }
    if (px.requires_grad) {
      px.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          px.grad[j] += node.grad[i] * pw.data[i * n + j];
    }
  });
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += w.data()[i * n + j] * x.data()[j];
    out.data()[i] = acc;
  }
  return out;
}

// Mean of squared differences; the workhorse reconstruction loss.
inline Tensor mse(const Tensor& a, const Tensor& b) {
  const Tensor d = sub(a, b);
  return mean(mul(d, d));
}

}  // namespace wisynth
