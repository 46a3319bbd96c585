#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <opencv2/core.hpp>

#include "rbi/eval/scores.hpp"

namespace rbi::eval {

struct AucCell {
  std::string dataset;
  std::string manipulation;  // "*" for the pooled cell
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> auc;  // empty when undefined
  std::string error;
};

struct EvalReport {
  std::string protocol;  // "frame" or "video"
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::vector<AucCell> cells;
  std::optional<AucCell> pooled;
};

// One cell per (dataset, manipulation), each against the genuine units of the
// same dataset. Undefined AUCs are recorded rather than thrown.
EvalReport build_report(const ScoreTable& table, const std::string& protocol, const std::string& fingerprint,
                        std::uint64_t seed, bool pooled = true);

void to_json(nlohmann::json& j, const AucCell& cell);
void to_json(nlohmann::json& j, const EvalReport& report);

// Aligned plain-text table.
std::string format_table(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

// RGB plots for the pooled scores.
cv::Mat plot_roc(const ScoreTable& table, int size = 360);
cv::Mat plot_histogram(const ScoreTable& table, int bins = 20, int width = 480, int height = 320);

// report.json, report.csv, scores.csv, report.txt, roc.png, histogram.png.
void write_report(const std::filesystem::path& dir, const EvalReport& report, const ScoreTable& table);

}  // namespace rbi::eval
