#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loadcast/bounds/bound_terms.hpp"
#include "loadcast/bounds/independence.hpp"
#include "loadcast/bounds/rademacher.hpp"
#include "loadcast/preprocess/csv.hpp"

namespace loadcast::harness {

struct BoundsOptions {
  std::uint64_t seed = 1;
  std::size_t mc_draws = 100000;
  std::size_t samples = 10;      // n for the Rademacher classes
  std::size_t hypotheses = 8;    // |H| of the random class
  std::size_t independence_n = 2000;
  std::size_t independence_seeds = 5;
  std::vector<double> mixing = {0.0, 0.25, 0.5, 0.75, 1.0};
  double delta = 0.05;
};

struct BoundsRow {
  std::string section;
  std::string item;
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<double> exact;
  std::optional<double> reference;
};

namespace detail {

inline bounds::LossMatrix uniform_losses(std::size_t h, std::size_t n, Rng& rng) {
  bounds::LossMatrix l(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < l.rows(); ++r) {
    for (Eigen::Index c = 0; c < l.cols(); ++c) l(r, c) = rng.uniform();
  }
  return l;
}

}  // namespace detail

/// Rademacher estimates on toy classes, the bound terms for equal against
/// loss-aware weights, and the mutual-information trend over the mixing grid.
inline std::vector<BoundsRow> bounds_report(const BoundsOptions& opt) {
  std::vector<BoundsRow> rows;
  Rng rng(opt.seed);
  auto rademacher = [&](const std::string& item, const bounds::LossMatrix& l) {
    const auto est = bounds::empirical_rademacher(l, opt.mc_draws, rng.next());
    rows.push_back({"rademacher", item, est.value, est.std_error, est.exact, std::nullopt});
    return est;
  };
  rademacher("singleton", detail::uniform_losses(1, opt.samples, rng));
  rademacher("random_h" + std::to_string(opt.hypotheses), detail::uniform_losses(opt.hypotheses, opt.samples, rng));
  rademacher("sign_patterns_n4", bounds::all_sign_patterns(4));
  std::vector<double> x(opt.samples), thresholds;
  std::vector<int> labels(opt.samples);
  for (std::size_t i = 0; i < opt.samples; ++i) {
    x[i] = rng.uniform();
    labels[i] = x[i] + 0.2 * rng.normal() > 0.5 ? 1 : -1;
  }
  for (std::size_t k = 0; k <= 10; ++k) thresholds.push_back(static_cast<double>(k) / 10.0);
  const auto thr = rademacher("threshold_n" + std::to_string(opt.samples),
                              bounds::threshold_class_losses(x, labels, thresholds));

  // Two learners, each bad on half of the samples; the adaptive weights
  // lean away from whichever one is wrong.
  const Eigen::Index n = 200;
  Eigen::MatrixXd l(2, n), w(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool odd = j % 2;
    l(0, j) = odd ? 0.9 : 0.1;
    l(1, j) = odd ? 0.1 : 0.9;
    w(0, j) = odd ? 0.2 : 0.8;
    w(1, j) = 1.0 - w(0, j);
  }
  const std::vector<double> complexity = {thr.value, thr.value}, equal = {0.5, 0.5};
  for (const auto& [label, b] : {std::pair<std::string, bounds::BoundTerms>{"equal", bounds::bound_terms(l, equal, complexity, opt.delta)},
                                 {"adaptive", bounds::bound_terms(l, w, complexity, opt.delta)}}) {
    rows.push_back({"bound_terms_" + label, "term_L", b.term_L, {}, {}, {}});
    rows.push_back({"bound_terms_" + label, "term_C", b.term_C, {}, {}, {}});
    rows.push_back({"bound_terms_" + label, "term_Cov", b.term_Cov, {}, {}, {}});
    rows.push_back({"bound_terms_" + label, "confidence", b.confidence_term, {}, {}, {}});
    rows.push_back({"bound_terms_" + label, "total", b.total(), {}, {}, {}});
  }

  for (const auto& r : bounds::independence_grid(opt.independence_n, opt.mixing, opt.independence_seeds, opt.seed)) {
    rows.push_back({"independence", "mixing=" + preprocess::format_number(r.mixing), r.mi_median, {}, {}, r.mi_reference});
  }
  return rows;
}

/// Header: section,item,value,std_error,exact,reference (empty when absent).
inline void write_bounds_report(const std::string& path, const std::vector<BoundsRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? preprocess::format_number(*v) : std::string(); };
  preprocess::CsvWriter w(path, {"section", "item", "value", "std_error", "exact", "reference"});
  for (const auto& r : rows) {
    w.row({r.section, r.item, preprocess::format_number(r.value), opt(r.std_error), opt(r.exact), opt(r.reference)});
  }
}

}  // namespace loadcast::harness
