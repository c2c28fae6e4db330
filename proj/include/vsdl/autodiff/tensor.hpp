#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vsdl::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One vertex of the computation graph. `backward` reads `grad` and
// accumulates into the grads of `parents`.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T{});
  }
};

}  // namespace detail

/// Dense row-major tensor with optional gradient and graph lineage.
///
/// Copies are shallow handles onto the same node; use `detach()` for an
/// independent value copy. Values never change after construction except
/// through `mutable_data()`, which is reserved for optimizer updates and
/// test fixtures.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const T> data() const;
  std::span<T> mutable_data();
  T item() const;
  T at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  bool has_lineage() const;
  BasicTensor detach() const;

  const NodePtr& node() const { return node_; }
  static BasicTensor from_node(NodePtr node) {
    BasicTensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  NodePtr node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Populates grad buffers of every ancestor of `loss` with d(loss)/d(node).
/// Leaf gradients accumulate across calls; call zero_grad() between steps.
template <typename T>
void backward(const BasicTensor<T>& loss);

/// While alive on the current thread, new op results carry no lineage.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds an op result. Lineage is attached only when gradients are enabled
// and at least one parent requires them.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::vector<BasicTensor<T>> parents,
                           std::function<void(Node<T>&)> backward_fn);

}  // namespace detail

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace vsdl::autodiff
