#include "rbi/eval/visualize.hpp"

#include <fmt/format.h>

#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/tensor_bridge.hpp"

namespace rbi::eval {

namespace fs = std::filesystem;

cv::Mat heat_overlay(const cv::Mat& rgb, const cv::Mat& field, double alpha) {
  require_color(rgb, "heat_overlay");
  require_field(field, "heat_overlay");
  cv::Mat up;
  cv::resize(field, up, rgb.size(), 0, 0, cv::INTER_LINEAR);
  cv::Mat u8;
  clamp01(up).convertTo(u8, CV_8U, 255.0);
  cv::Mat bgr;
  cv::applyColorMap(u8, bgr, cv::COLORMAP_JET);
  cv::Mat heat;
  cv::cvtColor(bgr, heat, cv::COLOR_BGR2RGB);
  heat.convertTo(heat, CV_32F, 1.0 / 255.0);
  cv::Mat out;
  cv::addWeighted(rgb, 1.0 - alpha, heat, alpha, 0.0, out);
  return out;
}

cv::Mat make_panel(const cv::Mat& rgb, const cv::Mat& edge, const cv::Mat& map, double p_fake,
                   const std::string& caption) {
  require_color(rgb, "make_panel");
  const int w = rgb.cols, h = rgb.rows, m = kPanelMargin;
  cv::Mat panel(h + 2 * m + kCaptionHeight, 3 * w + 4 * m, CV_32FC3, cv::Scalar(1, 1, 1));
  rgb.copyTo(panel(cv::Rect(m, m, w, h)));
  heat_overlay(rgb, edge).copyTo(panel(cv::Rect(2 * m + w, m, w, h)));
  heat_overlay(rgb, map).copyTo(panel(cv::Rect(3 * m + 2 * w, m, w, h)));
  const auto text = fmt::format("{}  P_cls={:.3f}", caption, p_fake);
  cv::putText(panel, text, {m, h + m + kCaptionHeight - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0.1, 0.1, 0.1), 1,
              cv::LINE_AA);
  return panel;
}

std::string panel_name(const std::string& sample_id) {
  std::string out = sample_id;
  for (auto& c : out) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return out;
}

std::vector<fs::path> visualize(model::Mfrn& model, const std::vector<FaceRecord>& faces,
                                const std::vector<std::string>& ids, const fs::path& out_dir) {
  if (faces.size() != ids.size()) throw ShapeError("visualize: one id per face required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw DataError(fmt::format("cannot write visualizations to '{}'", out_dir.string()));
  }
  model->eval();
  torch::NoGradGuard guard;
  std::vector<fs::path> paths;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto out = model->forward(to_tensor(faces[i].image).unsqueeze(0));
    const auto panel = make_panel(faces[i].image, to_mat(out.edge[0]), to_mat(out.map[0]),
                                  out.p_fake[0].item<double>(), ids[i]);
    const auto path = out_dir / (panel_name(ids[i]) + ".png");
    try {
      write_image(path, panel);
    } catch (const Error& e) {
      throw DataError(fmt::format("cannot write '{}': {}", path.string(), e.what()));
    }
    paths.push_back(path);
  }
  return paths;
}

}  // namespace rbi::eval
