#include "rbi/eval/auc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rbi/core/error.hpp"

namespace rbi::eval {

namespace {

void check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("auc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw ParameterError("auc: labels must be 0 or 1");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks doubled so midranks stay integral.
  long long pos = 0;
  long long twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const long long twice_mid = static_cast<long long>(i + 1 + j);  // 2 * mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        ++pos;
        twice_rank_sum += twice_mid;
      }
    }
    i = j;
  }
  const long long neg = static_cast<long long>(n) - pos;
  if (pos == 0 || neg == 0) throw NumericError("auc is undefined: scores cover a single class");
  // U = R_pos - P(P+1)/2, computed in doubled integers then divided once.
  const long long twice_u = twice_rank_sum - pos * (pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  const auto neg = static_cast<long long>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw NumericError("roc curve is undefined: scores cover a single class");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  long long tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    out.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, t});
  }
  return out;
}

}  // namespace rbi::eval
