#include "rbi/eval/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/eval/auc.hpp"

namespace rbi::eval {

namespace fs = std::filesystem;

namespace {

AucCell make_cell(const std::string& dataset, const std::string& manipulation, const std::vector<const ScoreRow*>& rows) {
  AucCell cell{dataset, manipulation, 0, 0, std::nullopt, {}};
  std::vector<double> s;
  std::vector<int> l;
  for (const auto* r : rows) {
    s.push_back(r->score);
    l.push_back(r->label);
    (r->label == 1 ? cell.positives : cell.negatives)++;
  }
  try {
    cell.auc = auc(s, l);
  } catch (const NumericError& e) {
    cell.error = e.what();
  }
  return cell;
}

}  // namespace

EvalReport build_report(const ScoreTable& table, const std::string& protocol, const std::string& fingerprint,
                        std::uint64_t seed, bool pooled) {
  table.validate();
  EvalReport report{protocol, fingerprint, seed, {}, std::nullopt};
  std::map<std::string, std::vector<const ScoreRow*>> genuine;
  std::map<std::pair<std::string, std::string>, std::vector<const ScoreRow*>> fakes;
  for (const auto& r : table.rows) {
    if (r.label == 0) {
      genuine[r.dataset].push_back(&r);
    } else {
      fakes[{r.dataset, r.manipulation}].push_back(&r);
    }
  }
  for (const auto& [key, rows] : fakes) {
    auto all = genuine[key.first];
    all.insert(all.end(), rows.begin(), rows.end());
    report.cells.push_back(make_cell(key.first, key.second, all));
  }
  if (fakes.empty()) {
    for (const auto& [dataset, rows] : genuine) report.cells.push_back(make_cell(dataset, "*", rows));
  }
  if (pooled) {
    std::vector<const ScoreRow*> all;
    for (const auto& r : table.rows) all.push_back(&r);
    report.pooled = make_cell("*", "*", all);
  }
  return report;
}

void to_json(nlohmann::json& j, const AucCell& c) {
  j = {{"dataset", c.dataset}, {"manipulation", c.manipulation}, {"positives", c.positives},
       {"negatives", c.negatives}};
  j["auc"] = c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr);
  if (!c.error.empty()) j["error"] = c.error;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"protocol", r.protocol}, {"fingerprint", r.fingerprint}, {"seed", r.seed}, {"cells", r.cells}};
  j["pooled"] = r.pooled ? nlohmann::json(*r.pooled) : nlohmann::json(nullptr);
}

std::string format_table(const EvalReport& report) {
  std::vector<AucCell> rows = report.cells;
  if (report.pooled) rows.push_back(*report.pooled);
  std::size_t wd = 7, wm = 12;
  for (const auto& c : rows) {
    wd = std::max(wd, c.dataset.size());
    wm = std::max(wm, c.manipulation.size());
  }
  std::string out = fmt::format("protocol: {}  fingerprint: {}  seed: {}\n", report.protocol, report.fingerprint,
                                report.seed);
  out += fmt::format("{:<{}}  {:<{}}  {:>6}  {:>6}  {:>8}\n", "dataset", wd, "manipulation", wm, "pos", "neg", "AUC");
  for (const auto& c : rows) {
    out += fmt::format("{:<{}}  {:<{}}  {:>6}  {:>6}  {:>8}\n", c.dataset, wd, c.manipulation, wm, c.positives,
                       c.negatives, c.auc ? fmt::format("{:.4f}", *c.auc) : std::string("n/a"));
  }
  return out;
}

void write_report_csv(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "protocol,dataset,manipulation,positives,negatives,auc,error\n";
  auto row = [&](const AucCell& c) {
    out << fmt::format("{},{},{},{},{},{},{}\n", report.protocol, c.dataset, c.manipulation, c.positives, c.negatives,
                       c.auc ? fmt::format("{}", *c.auc) : std::string(), c.error);
  };
  for (const auto& c : report.cells) row(c);
  if (report.pooled) row(*report.pooled);
}

namespace {

const cv::Scalar kInk(0.1, 0.1, 0.1);

void draw_axes(cv::Mat& canvas, cv::Rect plot, const std::string& xlabel, const std::string& ylabel) {
  cv::rectangle(canvas, plot, kInk, 1);
  cv::putText(canvas, xlabel, {plot.x + plot.width / 2 - 20, plot.y + plot.height + 28}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
              kInk, 1, cv::LINE_AA);
  cv::putText(canvas, ylabel, {4, plot.y + 12}, cv::FONT_HERSHEY_SIMPLEX, 0.4, kInk, 1, cv::LINE_AA);
}

}  // namespace

cv::Mat plot_roc(const ScoreTable& table, int size) {
  cv::Mat canvas(size, size, CV_32FC3, cv::Scalar(1, 1, 1));
  const int pad = 40;
  const cv::Rect plot(pad, pad / 2, size - pad - pad / 2, size - pad - pad / 2);
  draw_axes(canvas, plot, "FPR", "TPR");
  auto to_px = [&](double fx, double fy) {
    return cv::Point(plot.x + static_cast<int>(fx * plot.width), plot.y + plot.height - static_cast<int>(fy * plot.height));
  };
  cv::line(canvas, to_px(0, 0), to_px(1, 1), cv::Scalar(0.7, 0.7, 0.7), 1, cv::LINE_AA);
  try {
    const auto s = table.scores();
    const auto l = table.labels();
    std::vector<cv::Point> pts;
    for (const auto& p : roc_curve(s, l)) pts.push_back(to_px(p.fpr, p.tpr));
    cv::polylines(canvas, pts, false, cv::Scalar(0.8, 0.1, 0.1), 2, cv::LINE_AA);
    cv::putText(canvas, fmt::format("AUC {:.4f}", auc(s, l)), to_px(0.45, 0.1), cv::FONT_HERSHEY_SIMPLEX, 0.45, kInk, 1,
                cv::LINE_AA);
  } catch (const NumericError&) {
    cv::putText(canvas, "AUC undefined", to_px(0.3, 0.5), cv::FONT_HERSHEY_SIMPLEX, 0.45, kInk, 1, cv::LINE_AA);
  }
  return canvas;
}

cv::Mat plot_histogram(const ScoreTable& table, int bins, int width, int height) {
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  cv::Mat canvas(height, width, CV_32FC3, cv::Scalar(1, 1, 1));
  const cv::Rect plot(40, 10, width - 50, height - 50);
  draw_axes(canvas, plot, "score", "count");
  std::vector<int> genuine(static_cast<std::size_t>(bins)), fake(static_cast<std::size_t>(bins));
  for (const auto& r : table.rows) {
    const int b = std::clamp(static_cast<int>(r.score * bins), 0, bins - 1);
    (r.label == 1 ? fake : genuine)[static_cast<std::size_t>(b)]++;
  }
  const int peak = std::max(1, std::max(*std::max_element(genuine.begin(), genuine.end()),
                                        *std::max_element(fake.begin(), fake.end())));
  const double bw = static_cast<double>(plot.width) / bins;
  for (int b = 0; b < bins; ++b) {
    auto bar = [&](int count, int half, cv::Scalar colour) {
      const int h = count * plot.height / peak;
      const int x = plot.x + static_cast<int>(b * bw + half * bw / 2);
      cv::rectangle(canvas, cv::Rect(x, plot.y + plot.height - h, std::max(1, static_cast<int>(bw / 2)), h), colour,
                    cv::FILLED);
    };
    bar(genuine[static_cast<std::size_t>(b)], 0, cv::Scalar(0.2, 0.4, 0.8));
    bar(fake[static_cast<std::size_t>(b)], 1, cv::Scalar(0.85, 0.2, 0.2));
  }
  cv::putText(canvas, "genuine", {plot.x + 8, plot.y + 16}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0.2, 0.4, 0.8), 1,
              cv::LINE_AA);
  cv::putText(canvas, "fake", {plot.x + 8, plot.y + 32}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0.85, 0.2, 0.2), 1,
              cv::LINE_AA);
  return canvas;
}

void write_report(const fs::path& dir, const EvalReport& report, const ScoreTable& table) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create report directory '{}': {}", dir.string(), ec.message()));
  nlohmann::json j = report;
  std::ofstream(dir / "report.json") << j.dump(2) << '\n';
  write_report_csv(dir / "report.csv", report);
  table.write_csv(dir / "scores.csv");
  std::ofstream(dir / "report.txt") << format_table(report);
  write_image(dir / "roc.png", plot_roc(table));
  write_image(dir / "histogram.png", plot_histogram(table));
}

}  // namespace rbi::eval
