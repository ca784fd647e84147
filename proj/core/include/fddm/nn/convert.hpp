#pragma once

#include <span>
#include <vector>

#include "fddm/image.hpp"
#include "fddm/nn/tensor.hpp"

namespace fddm::nn {

/// Writes img into channel c of sample n.
void store_image(Tensor& t, int n, int c, const Image2D& img);
Image2D load_image(const Tensor& t, int n, int c);

/// [N, 1, H, W] from N equally sized images.
Tensor stack_images(std::span<const Image2D> images);

}  // namespace fddm::nn
