#include "sgdn/image.hpp"

#include "sgdn/errors.hpp"

#include <sstream>

namespace sgdn {

std::string_view to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::kRgb:
      return "RGB";
    case ColorSpace::kYCbCr:
      return "YCbCr";
  }
  return "unknown";
}

void check_finite(const torch::Tensor& t, std::string_view what) {
  if (!t.defined()) {
    throw ValidationError(std::string(what) + ": tensor is undefined");
  }
  if (t.is_floating_point() && !torch::isfinite(t).all().item<bool>()) {
    throw ValidationError(std::string(what) + ": contains NaN or Inf values");
  }
}

void check_image_tensor(const torch::Tensor& t, std::string_view what) {
  if (!t.defined() || t.dim() != 3 || t.size(0) != 3) {
    std::ostringstream msg;
    msg << what << ": expected a 3xHxW tensor";
    if (t.defined()) msg << ", got " << t.sizes();
    throw ValidationError(msg.str());
  }
  if (!t.is_floating_point()) {
    throw ValidationError(std::string(what) + ": expected floating-point pixels");
  }
  if (t.size(1) < kMinImageSide || t.size(2) < kMinImageSide) {
    std::ostringstream msg;
    msg << what << ": image " << t.size(1) << "x" << t.size(2) << " is smaller than "
        << kMinImageSide << "x" << kMinImageSide;
    throw ValidationError(msg.str());
  }
  check_finite(t, what);
}

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, std::string_view what) {
  if (a.sizes() != b.sizes()) {
    std::ostringstream msg;
    msg << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw ValidationError(msg.str());
  }
}

}  // namespace sgdn
