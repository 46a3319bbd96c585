#pragma once

#include <span>
#include <vector>

namespace rbi::eval {

// Mann-Whitney statistic with midranks: P(score_pos > score_neg) + 0.5 P(tie).
// Throws NumericError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// One point per distinct threshold, from (0, 0) to (1, 1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

}  // namespace rbi::eval
