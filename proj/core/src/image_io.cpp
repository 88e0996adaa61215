#include "sgdn/image_io.hpp"

#include "sgdn/errors.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <system_error>

namespace sgdn::io {

LoadedImage read_png(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw ValidationError("cannot read image '" + path.string() + "'");

  int depth = 8;
  double peak = 255.0;
  if (raw.depth() == CV_16U) {
    depth = 16;
    peak = 65535.0;
  } else if (raw.depth() != CV_8U) {
    throw ValidationError("unsupported bit depth in '" + path.string() + "'");
  }

  cv::Mat rgb;
  switch (raw.channels()) {
    case 1:
      cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB);
      break;
    case 3:
      cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw ValidationError("unsupported channel count in '" + path.string() + "'");
  }
  cv::Mat as_float;
  rgb.convertTo(as_float, CV_32FC3, 1.0 / peak);

  auto hwc = torch::from_blob(as_float.data, {as_float.rows, as_float.cols, 3}, torch::kFloat32);
  LoadedImage out;
  out.image = Image{hwc.permute({2, 0, 1}).contiguous().clone(), ColorSpace::kRgb};
  out.bit_depth = depth;
  return out;
}

void write_png(const std::filesystem::path& path, const torch::Tensor& rgb, int bit_depth) {
  if (rgb.dim() != 3 || rgb.size(0) != 3) {
    throw ValidationError("write_png: expected a 3×H×W tensor");
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw ValidationError("write_png: bit depth must be 8 or 16");
  }
  const double peak = bit_depth == 16 ? 65535.0 : 255.0;
  auto hwc = rgb.detach()
                 .to(torch::kFloat64)
                 .clamp(0.0, 1.0)
                 .mul(peak)
                 .round()
                 .permute({1, 2, 0})
                 .contiguous();
  const int rows = static_cast<int>(hwc.size(0));
  const int cols = static_cast<int>(hwc.size(1));
  cv::Mat as_double(rows, cols, CV_64FC3, hwc.data_ptr<double>());
  cv::Mat encoded;
  as_double.convertTo(encoded, bit_depth == 16 ? CV_16UC3 : CV_8UC3);
  cv::cvtColor(encoded, encoded, cv::COLOR_RGB2BGR);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp.png";
  if (!cv::imwrite(tmp.string(), encoded)) {
    throw RuntimeAbort("cannot write image '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeAbort("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

torch::Tensor side_by_side(const std::vector<torch::Tensor>& images, int64_t gap) {
  if (images.empty()) throw ValidationError("side_by_side: no images");
  const int64_t h = images.front().size(1);
  std::vector<torch::Tensor> parts;
  for (size_t i = 0; i < images.size(); ++i) {
    if (images[i].dim() != 3 || images[i].size(1) != h) {
      throw ValidationError("side_by_side: images must be 3×H×W with equal heights");
    }
    if (i > 0 && gap > 0) parts.push_back(torch::ones({3, h, gap}, images[i].options()));
    parts.push_back(images[i].detach().contiguous());
  }
  return torch::cat(parts, 2);
}

}  // namespace sgdn::io
