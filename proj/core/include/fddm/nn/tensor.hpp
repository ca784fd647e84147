#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace fddm::nn {

/// NCHW extent. Vectors and scalars use the trailing dims of 1.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Cache-line aligned storage. Vectorised kernels peel according to the
/// address, so a fixed base alignment keeps results independent of where
/// the allocator happened to place a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

struct Tensor {
  Shape shape;
  FloatBuffer data;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape(s), data(s.numel(), fill) {}

  std::size_t numel() const noexcept { return data.size(); }
  float* sample(int n) { return data.data() + static_cast<std::size_t>(n) * shape.c * shape.plane(); }
  const float* sample(int n) const {
    return data.data() + static_cast<std::size_t>(n) * shape.c * shape.plane();
  }
  float* channel(int n, int c) { return sample(n) + static_cast<std::size_t>(c) * shape.plane(); }
  const float* channel(int n, int c) const {
    return sample(n) + static_cast<std::size_t>(c) * shape.plane();
  }
};

struct Node;
using Var = std::shared_ptr<Node>;

/// One vertex of the dynamic autograd tape.
struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();
  const Shape& shape() const noexcept { return value.shape; }
};

Var constant(Tensor t);
/// Leaf whose gradient is accumulated by backward().
Var parameter(Tensor t);

/// Seeds d(root)/d(root) = 1 on a scalar root and accumulates gradients into
/// every reachable node that requires them.
void backward(const Var& root);

/// While alive, newly created nodes record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// Creates a node from parents; the backward closure is only kept when some
/// parent requires a gradient and grad mode is on.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

float scalar_value(const Var& v);

}  // namespace fddm::nn
