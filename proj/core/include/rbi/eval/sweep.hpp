#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rbi/losses/losses.hpp"

namespace rbi::eval {

// The seven (lambda_1, lambda_2) rows of the loss-weight study.
std::vector<losses::LossWeights> reference_lambda_grid();

struct SweepCell {
  losses::LossWeights weights;
  std::optional<double> auc;
  std::string error;
  double seconds = 0.0;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::optional<std::size_t> best;  // arg-max AUC, first on ties
};

// Trains and scores one cell; returns its AUC.
using CellRunner = std::function<double(const losses::LossWeights&)>;

// A failing cell is recorded and the sweep continues.
SweepReport lambda_sweep(const std::vector<losses::LossWeights>& grid, const CellRunner& runner);

void to_json(nlohmann::json& j, const SweepReport& report);
std::string format_sweep(const SweepReport& report);

}  // namespace rbi::eval
