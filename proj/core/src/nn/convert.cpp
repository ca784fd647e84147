#include "fddm/nn/convert.hpp"

#include "fddm/error.hpp"

namespace fddm::nn {

void store_image(Tensor& t, int n, int c, const Image2D& img) {
  if (img.width() != t.shape.w || img.height() != t.shape.h) {
    throw Error(ErrorKind::DimensionMismatch, "store_image: image does not match tensor plane");
  }
  float* dst = t.channel(n, c);
  for (std::size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(img[i]);
}

Image2D load_image(const Tensor& t, int n, int c) {
  Image2D img(t.shape.w, t.shape.h);
  const float* src = t.channel(n, c);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = src[i];
  return img;
}

Tensor stack_images(std::span<const Image2D> images) {
  if (images.empty()) throw Error(ErrorKind::EmptyDataset, "stack_images: no images");
  const Image2D& first = images.front();
  Tensor t(Shape{static_cast<int>(images.size()), 1, first.height(), first.width()});
  for (std::size_t i = 0; i < images.size(); ++i) {
    require_same_shape(first, images[i], "stack_images");
    store_image(t, static_cast<int>(i), 0, images[i]);
  }
  return t;
}

}  // namespace fddm::nn
