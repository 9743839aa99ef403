// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "betapool/score.hpp"

namespace betapool {

std::size_t one_se_select(const std::map<std::size_t, CVKStats>& per_K) {
  double best_mean = -std::numeric_limits<double>::infinity();
  double best_se = 0.0;
  bool any = false;
  for (const auto& [k, stats] : per_K) {
    if (!stats.valid) continue;
    any = true;
    if (stats.mean_validation_logscore > best_mean) {
      best_mean = stats.mean_validation_logscore;
      best_se = stats.se;
    }
  }
  if (!any) {
    throw SelectionError("no beta-component count survived cross-validation");
  }
  const double cutoff = best_mean - best_se;
  for (const auto& [k, stats] : per_K) {  // map iterates smallest K first
    if (stats.valid && stats.mean_validation_logscore >= cutoff) {
      return k;
    }
  }
  throw SelectionError("one-SE selection found no candidate");  // unreachable
}

CVResult loso_cv(Method method, int target, const Dataset& data,
                 const std::string& test_season,
                 std::span<const std::size_t> k_grid, const FitConfig& config) {
  if (!is_mixture(method)) {
    throw DomainError("cross-validation over K applies to mixture methods");
  }
  if (k_grid.empty()) {
    throw DomainError("empty K grid");
  }
  const TrainingSet full = data.training_for(target, test_season);
  if (full.seasons.size() < 2) {
    throw EmptyDatasetError("leave-one-season-out needs >= 2 training seasons, have " +
                            std::to_string(full.seasons.size()));
  }

  CVResult result;
  result.method = method;
  result.target = target;
  result.test_season = test_season;
  result.n_seasons = full.seasons.size();

  // One fitter per fold is shared across the K grid so the nested LP/BLP
  // warm-start fits happen once per fold.
  struct Fold {
    std::string held_out;
    std::vector<std::string> trained;
    TrainingSet train;
    std::vector<const TrainingRecord*> validate;
  };
  std::vector<Fold> folds;
  folds.reserve(full.seasons.size());
  for (const auto& held : full.seasons) {
    Fold fold;
    fold.held_out = held;
    for (const auto& s : full.seasons) {
      if (s != held) fold.trained.push_back(s);
    }
    fold.train = data.subset(target, fold.trained);
    fold.validate = data.records_for(target, held);
    folds.push_back(std::move(fold));
  }

  std::vector<std::unique_ptr<Fitter>> fitters;
  fitters.reserve(folds.size());
  for (const auto& fold : folds) {
    fitters.push_back(std::make_unique<Fitter>(
        fold.train, config.derived(target, test_season).derived(target, fold.held_out)));
  }

  for (const std::size_t k : k_grid) {
    CVKStats stats;
    stats.valid = true;
    double pooled_sum = 0.0;
    std::size_t pooled_n = 0;
    std::vector<double> fold_means;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      CVFold fold_out;
      fold_out.held_out_season = folds[f].held_out;
      fold_out.trained_seasons = folds[f].trained;
      try {
        if (folds[f].train.empty() || folds[f].validate.empty()) {
          throw EmptyDatasetError("fold has no data");
        }
        const FitResult& fitted = fitters[f]->fit(method, k);
        double sum = 0.0;
        for (const TrainingRecord* rec : folds[f].validate) {
          const BinnedDistribution ens =
              combine_bmc(rec->components, fitted.params);
          sum += log_score(ens, rec->obs);
        }
        fold_out.n_records = folds[f].validate.size();
        fold_out.mean_logscore =
            sum / static_cast<double>(fold_out.n_records);
        pooled_sum += sum;
        pooled_n += fold_out.n_records;
        fold_means.push_back(fold_out.mean_logscore);
      } catch (const Error& e) {
        fold_out.failed = true;
        fold_out.error = e.what();
        stats.valid = false;
      }
      stats.folds.push_back(std::move(fold_out));
    }
    if (stats.valid && pooled_n > 0) {
      stats.mean_validation_logscore =
          pooled_sum / static_cast<double>(pooled_n);
      double mean_of_means = 0.0;
      for (double m : fold_means) mean_of_means += m;
      mean_of_means /= static_cast<double>(fold_means.size());
      double ss = 0.0;
      for (double m : fold_means) {
        ss += (m - mean_of_means) * (m - mean_of_means);
      }
      const auto nf = static_cast<double>(fold_means.size());
      stats.se = nf > 1 ? std::sqrt(ss / (nf - 1.0)) / std::sqrt(nf) : 0.0;
    } else {
      stats.valid = false;
    }
    result.per_K.emplace(k, std::move(stats));
  }

  result.selected_K = one_se_select(result.per_K);
  return result;
}

}  // namespace betapool
