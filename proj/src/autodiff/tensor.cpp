#include "vsdl/autodiff/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "vsdl/error.hpp"

namespace vsdl::autodiff {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T{}, requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = element_count(shape);
  return from_data(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
  if (values.size() != element_count(shape)) {
    throw ShapeError("tensor of shape " + to_string(shape) + " needs " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return from_node(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  if (!node_) throw ShapeError("access to an undefined tensor");
  return node_->shape;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(s));
  }
  return s[axis];
}

template <typename T>
std::size_t BasicTensor<T>::size() const {
  return node_ ? node_->data.size() : 0;
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
  if (!node_) throw ShapeError("access to an undefined tensor");
  return node_->data;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() {
  if (!node_) throw ShapeError("access to an undefined tensor");
  return node_->data;
}

template <typename T>
T BasicTensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
  return node_ && !node_->grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
  if (!node_) throw ShapeError("access to an undefined tensor");
  return node_->grad;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() {
  if (!node_) throw ShapeError("access to an undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), T{});
}

template <typename T>
bool BasicTensor<T>::has_lineage() const {
  return node_ && static_cast<bool>(node_->backward);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from_data(shape(), node_->data, false);
}

template <typename T>
void backward(const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ShapeError("backward() on a loss without gradient lineage");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT* node : order) {
    if (node->backward) node->ensure_grad();
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (!node->backward) continue;
    for (auto& parent : node->parents) {
      if (parent->requires_grad) parent->ensure_grad();
    }
    node->backward(*node);
  }
}

namespace detail {

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, std::vector<BasicTensor<T>> parents,
                           std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  const bool track = grad_enabled() && std::any_of(parents.begin(), parents.end(), [](const auto& p) {
                       return p.requires_grad();
                     });
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward_fn);
  }
  return BasicTensor<T>::from_node(std::move(node));
}

template BasicTensor<float> make_result(Shape, std::vector<float>, std::vector<BasicTensor<float>>,
                                        std::function<void(Node<float>&)>);
template BasicTensor<double> make_result(Shape, std::vector<double>, std::vector<BasicTensor<double>>,
                                         std::function<void(Node<double>&)>);

}  // namespace detail

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward(const BasicTensor<float>&);
template void backward(const BasicTensor<double>&);

}  // namespace vsdl::autodiff
