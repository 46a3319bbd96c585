#include "rbi/eval/sweep.hpp"

#include <fmt/format.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"

namespace rbi::eval {

std::vector<losses::LossWeights> reference_lambda_grid() {
  return {{25, 25}, {25, 50}, {50, 50}, {50, 100}, {100, 50}, {150, 300}, {500, 1000}};
}

SweepReport lambda_sweep(const std::vector<losses::LossWeights>& grid, const CellRunner& runner) {
  if (grid.empty()) throw ConfigError("lambda sweep needs at least one cell");
  SweepReport report;
  for (const auto& w : grid) {
    SweepCell cell{w, std::nullopt, {}, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      w.validate();
      cell.auc = runner(w);
    } catch (const std::exception& e) {
      cell.error = e.what();
      log::warn("sweep cell ({}, {}) failed: {}", w.lambda_map, w.lambda_edge, e.what());
    }
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cell.auc && (!report.best || *cell.auc > *report.cells[*report.best].auc)) report.best = report.cells.size();
    report.cells.push_back(cell);
  }
  return report;
}

void to_json(nlohmann::json& j, const SweepReport& report) {
  j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cj{{"lambda_1", c.weights.lambda_map}, {"lambda_2", c.weights.lambda_edge}, {"seconds", c.seconds}};
    cj["auc"] = c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr);
    if (!c.error.empty()) cj["error"] = c.error;
    j["cells"].push_back(cj);
  }
  j["best"] = report.best ? nlohmann::json(*report.best) : nlohmann::json(nullptr);
}

std::string format_sweep(const SweepReport& report) {
  std::string out = fmt::format("{:>8}  {:>8}  {:>8}  {:>8}\n", "lambda_1", "lambda_2", "AUC", "seconds");
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& c = report.cells[i];
    out += fmt::format("{:>8}  {:>8}  {:>8}  {:>8.1f}{}\n", c.weights.lambda_map, c.weights.lambda_edge,
                       c.auc ? fmt::format("{:.4f}", *c.auc) : std::string("failed"), c.seconds,
                       report.best && *report.best == i ? "  <- best" : "");
  }
  return out;
}

}  // namespace rbi::eval
