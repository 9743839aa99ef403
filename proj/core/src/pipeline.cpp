// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "betapool/calibration.hpp"
#include "betapool/score.hpp"
#include "betapool/select.hpp"
#include "betapool/text.hpp"
#include "betapool/version.hpp"

namespace betapool {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs tasks on up to `jobs` threads. Tasks must only touch their own slots;
// the first failing task (by index) is rethrown after all threads join, so
// the outcome does not depend on scheduling.
void parallel_run(int jobs, std::vector<std::function<void()>>& tasks) {
  const int n_threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= tasks.size()) return;
        try {
          tasks[idx]();
        } catch (...) {
          errors[idx] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::ofstream open_output(const fs::path& path, const Config& config) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  out << "# generator=betapool/" << BETAPOOL_VERSION << "\n";
  out << "# config_hash=" << config.hash() << " seed=" << config.seed << "\n";
  return out;
}

std::vector<std::string> metadata_lines(const Config& config) {
  return {std::string("generator=betapool/") + BETAPOOL_VERSION,
          "config_hash=" + config.hash() + " seed=" +
              std::to_string(config.seed)};
}

json params_to_json(const EnsembleParams& p) {
  json betas = json::array();
  for (const auto& b : p.betas) {
    betas.push_back({{"alpha", b.alpha}, {"beta", b.beta}});
  }
  return json{{"method", method_name(p.method)},
              {"K", p.K},
              {"theta", p.theta},
              {"betas", betas},
              {"omega", p.omega}};
}

EnsembleParams params_from_json(const json& j) {
  EnsembleParams p;
  p.method = method_from_name(j.at("method").get<std::string>());
  p.K = j.at("K").get<std::size_t>();
  p.theta = j.at("theta").get<std::vector<double>>();
  for (const auto& b : j.at("betas")) {
    p.betas.push_back(
        BetaParams{b.at("alpha").get<double>(), b.at("beta").get<double>()});
  }
  p.omega = j.at("omega").get<std::vector<std::vector<double>>>();
  p.validate();
  return p;
}

fs::path params_path(const Config& config, const std::string& label,
                     int target, const std::string& season) {
  return config.out / "params" /
         (label + "_" + std::to_string(target) + "wk_" +
          season_file_tag(season) + ".json");
}

void check_run_inputs(const Config& config) {
  if (config.test_seasons.empty()) {
    throw ConfigError("no test_seasons configured");
  }
  if (config.targets.empty()) {
    throw ConfigError("no targets configured");
  }
  if (config.methods.empty()) {
    throw ConfigError("no methods configured");
  }
  if (config.forecast_dirs.empty()) {
    throw ConfigError("no forecast_dirs configured");
  }
  if (config.truth.empty()) {
    throw ConfigError("no truth file configured");
  }
}

bool needs_cv_selection(const Config& config) {
  if (config.k_override > 0) return false;
  for (Method m : config.methods) {
    if (is_mixture(m)) return true;
  }
  return false;
}

using SelectionKey = std::tuple<std::string, int, std::string>;

std::map<SelectionKey, std::size_t> load_selected_k(const Config& config) {
  const fs::path path = config.out / "cv" / "selected_k.csv";
  std::ifstream in(path);
  if (!in) {
    throw FitError("mixture methods need either k_override or CV results; '" +
                   path.string() + "' not found (run the cv subcommand first)");
  }
  std::map<SelectionKey, std::size_t> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // method,target,test_season,selected_K
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c != '\r') {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    if (fields.size() != 4) {
      throw DataError("malformed line in '" + path.string() + "': " + line);
    }
    out[{fields[0], std::stoi(fields[1]), fields[2]}] =
        static_cast<std::size_t>(std::stoul(fields[3]));
  }
  return out;
}

std::size_t resolve_k(const Config& config, Method method, int target,
                      const std::string& season,
                      const std::map<SelectionKey, std::size_t>& selected) {
  if (!is_mixture(method)) return 1;
  if (config.k_override > 0) return config.k_override;
  const auto it = selected.find({method_name(method), target, season});
  if (it == selected.end()) {
    throw FitError("no CV selection for " + method_name(method) + " target " +
                   std::to_string(target) + " season " + season);
  }
  return it->second;
}

}  // namespace

Experiment load_experiment(const Config& config) {
  check_run_inputs(config);
  const auto paths = discover_submissions(config.forecast_dirs, config.models);
  if (paths.empty()) {
    throw EmptyDatasetError("no submission files found under the forecast dirs");
  }
  StructurePool pool;
  std::vector<SubmissionFile> files(paths.size());
  std::vector<std::function<void()>> tasks;
  tasks.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    tasks.push_back([&, i] { files[i] = parse_submission(paths[i], &pool); });
  }
  parallel_run(config.jobs, tasks);

  const TruthSeries truth = parse_truth(config.truth);
  Experiment exp;
  auto built = build_dataset(files, truth, config.targets, config.locations);
  exp.dataset = std::move(built.data);
  exp.excluded = std::move(built.excluded);
  return exp;
}

void run_cv(const Config& config) {
  check_run_inputs(config);
  if (config.k_grid.empty()) {
    throw ConfigError("empty k_grid");
  }
  std::vector<Method> methods;
  for (Method m : config.methods) {
    if (is_mixture(m)) methods.push_back(m);
  }
  if (methods.empty()) {
    // CV is defined for the mixture methods; default to both.
    methods = {Method::BMC, Method::EW_BMC};
  }

  const Experiment exp = load_experiment(config);

  struct Cell {
    std::vector<CVResult> results;  // one per method
    std::string error;
  };
  std::vector<std::pair<int, std::string>> cells;
  for (const auto& season : config.test_seasons) {
    for (int target : config.targets) {
      cells.emplace_back(target, season);
    }
  }
  std::vector<Cell> outputs(cells.size());
  std::vector<std::function<void()>> tasks;
  tasks.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    tasks.push_back([&, i] {
      const auto& [target, season] = cells[i];
      try {
        for (Method m : methods) {
          outputs[i].results.push_back(loso_cv(m, target, exp.dataset, season,
                                               config.k_grid,
                                               config.optimizer));
        }
      } catch (const Error& e) {
        outputs[i].error = e.what();
      }
    });
  }
  parallel_run(config.jobs, tasks);

  auto table = open_output(config.out / "cv" / "cv_table.csv", config);
  table << "method,target,test_season";
  for (std::size_t k : config.k_grid) table << ",K" << k;
  table << ",selected_K,n_seasons,se_of_best\n";
  auto folds = open_output(config.out / "cv" / "cv_folds.csv", config);
  folds << "method,target,test_season,K,held_out_season,n_records,"
           "mean_logscore,failed,error\n";
  auto selected = open_output(config.out / "cv" / "selected_k.csv", config);
  selected << "method,target,test_season,selected_K\n";

  std::vector<std::string> failures;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& [target, season] = cells[i];
    if (!outputs[i].error.empty()) {
      failures.push_back("target " + std::to_string(target) + " season " +
                         season + ": " + outputs[i].error);
      continue;
    }
    for (const CVResult& r : outputs[i].results) {
      const std::string name = method_name(r.method);
      table << name << "," << r.target << "," << r.test_season;
      double se_best = 0.0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k : config.k_grid) {
        const auto it = r.per_K.find(k);
        if (it == r.per_K.end() || !it->second.valid) {
          table << ",";
          continue;
        }
        table << "," << double_to_string(it->second.mean_validation_logscore);
        if (it->second.mean_validation_logscore > best) {
          best = it->second.mean_validation_logscore;
          se_best = it->second.se;
        }
      }
      table << "," << r.selected_K << "," << r.n_seasons << ","
            << double_to_string(se_best) << "\n";
      selected << name << "," << r.target << "," << r.test_season << ","
               << r.selected_K << "\n";
      for (const auto& [k, stats] : r.per_K) {
        for (const CVFold& f : stats.folds) {
          folds << name << "," << r.target << "," << r.test_season << "," << k
                << "," << f.held_out_season << "," << f.n_records << ","
                << double_to_string(f.mean_logscore) << ","
                << (f.failed ? 1 : 0) << "," << f.error << "\n";
        }
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = "cross-validation failed for " +
                      std::to_string(failures.size()) + " task(s):";
    for (const auto& f : failures) msg += "\n  " + f;
    throw FitError(msg);
  }
}

void run_fit_forecast_score(const Config& config) {
  check_run_inputs(config);
  const Experiment exp = load_experiment(config);
  const auto selected = needs_cv_selection(config)
                            ? load_selected_k(config)
                            : std::map<SelectionKey, std::size_t>{};

  struct MethodOutput {
    Method method = Method::EW_LP;
    std::size_t K = 1;
    std::string label;
    FitResult fit;
    std::vector<ScoreRecord> scores;
    // (record, ensemble) pairs for forecast export
    std::vector<std::pair<const TrainingRecord*, BinnedDistribution>> ensembles;
    bool ok = false;
    std::string error;
  };
  struct CellOutput {
    int target = 0;
    std::string season;
    std::vector<MethodOutput> methods;
  };

  std::vector<CellOutput> cells;
  for (const auto& season : config.test_seasons) {
    for (int target : config.targets) {
      CellOutput cell;
      cell.target = target;
      cell.season = season;
      cells.push_back(std::move(cell));
    }
  }

  std::vector<std::function<void()>> tasks;
  tasks.reserve(cells.size());
  for (auto& cell : cells) {
    tasks.push_back([&config, &exp, &selected, &cell] {
      const TrainingSet training =
          exp.dataset.training_for(cell.target, cell.season);
      const auto test_records =
          exp.dataset.records_for(cell.target, cell.season);
      std::optional<Fitter> fitter;
      if (!training.empty()) {
        fitter.emplace(training,
                       config.optimizer.derived(cell.target, cell.season));
      }
      for (Method method : config.methods) {
        MethodOutput out;
        out.method = method;
        try {
          out.K = resolve_k(config, method, cell.target, cell.season, selected);
          out.label = method_name(method, out.K);
          if (!fitter) {
            throw EmptyDatasetError("no training data before " + cell.season);
          }
          if (test_records.empty()) {
            throw EmptyDatasetError("no test records in " + cell.season);
          }
          out.fit = fitter->fit(method, out.K);
          out.ensembles.reserve(test_records.size());
          out.scores.reserve(test_records.size());
          for (const TrainingRecord* rec : test_records) {
            BinnedDistribution ens = combine_bmc(rec->components, out.fit.params);
            ScoreRecord s;
            s.method = out.label;
            s.location = rec->obs.location;
            s.season = rec->obs.season;
            s.epiweek = rec->obs.epiweek;
            s.target = rec->obs.target;
            s.raw = raw_log_score(ens, rec->obs);
            s.log_score = std::max(s.raw, kLogScoreFloor);
            out.scores.push_back(std::move(s));
            out.ensembles.emplace_back(rec, std::move(ens));
          }
          out.ok = true;
        } catch (const Error& e) {
          out.error = e.what();
          if (out.label.empty()) out.label = method_name(method);
        }
        cell.methods.push_back(std::move(out));
      }
    });
  }
  parallel_run(config.jobs, tasks);

  // Parameter files, one per successful (method, target, season).
  for (const auto& cell : cells) {
    for (const auto& m : cell.methods) {
      if (!m.ok) continue;
      json j;
      j["meta"] = {{"generator", std::string("betapool/") + BETAPOOL_VERSION},
                   {"config_hash", config.hash()},
                   {"seed", config.seed},
                   {"target", cell.target},
                   {"test_season", cell.season}};
      j["params"] = params_to_json(m.fit.params);
      j["train_mean_logscore"] = m.fit.train_mean_logscore;
      j["converged"] = m.fit.converged;
      j["restarts_used"] = m.fit.restarts_used;
      j["objective_trace"] = m.fit.objective_trace;
      const fs::path path = params_path(config, m.label, cell.target, cell.season);
      fs::create_directories(path.parent_path());
      std::ofstream out(path);
      if (!out) throw DataError("cannot write '" + path.string() + "'");
      out << j.dump(2) << "\n";
    }
  }

  // FluSight-format forecast files per (method, epiweek).
  {
    struct FileKey {
      std::string label;
      int epiweek;
      auto operator<=>(const FileKey&) const = default;
    };
    std::map<FileKey, SubmissionFile> files;
    for (const auto& cell : cells) {
      for (const auto& m : cell.methods) {
        if (!m.ok) continue;
        for (const auto& [rec, ens] : m.ensembles) {
          FileKey key{m.label, rec->obs.epiweek};
          auto& file = files[key];
          if (file.model_id.empty()) {
            file.model_id = m.label;
            file.epiweek = EpiWeek::from_yyyyww(rec->obs.epiweek);
            file.season = rec->obs.season;
          }
          file.blocks.push_back({rec->obs.location, rec->obs.target, ens});
        }
      }
    }
    const auto meta = metadata_lines(config);
    for (const auto& [key, file] : files) {
      const fs::path dir = config.out / "forecasts" / key.label;
      fs::create_directories(dir);
      write_submission(
          file, dir / (file.epiweek.str() + "-" + key.label + ".csv"), meta);
    }
  }

  // Per-record test scores and the aggregation tables.
  std::vector<ScoreRecord> all_scores;
  std::map<std::string, std::vector<const ScoreRecord*>> per_method;
  for (const auto& cell : cells) {
    for (const auto& m : cell.methods) {
      for (const auto& s : m.scores) {
        all_scores.push_back(s);
      }
    }
  }
  for (const auto& s : all_scores) {
    per_method[s.method].push_back(&s);
  }
  for (const auto& [label, records] : per_method) {
    auto out = open_output(config.out / "scores" / ("scores_" + label + ".csv"),
                           config);
    out << "method,location,season,epiweek,target,raw_log_score,log_score\n";
    for (const ScoreRecord* s : records) {
      out << s->method << "," << s->location << "," << s->season << ","
          << s->epiweek << "," << s->target << "," << double_to_string(s->raw)
          << "," << double_to_string(s->log_score) << "\n";
    }
  }

  const auto write_summary = [&](const std::string& name,
                                 const std::vector<GroupField>& by) {
    auto rows = aggregate(all_scores, by);
    auto out = open_output(config.out / "scores" / name, config);
    out << "method,target,season,location,n,mean_log_score,truncated\n";
    for (const auto& r : rows) {
      out << r.method << "," << r.target << "," << r.season << ","
          << r.location << "," << r.n << ","
          << double_to_string(r.mean_log_score) << "," << r.truncated << "\n";
    }
  };
  if (!all_scores.empty()) {
    write_summary("summary_overall.csv", {});
    write_summary("summary_by_target.csv", {GroupField::Target});
    write_summary("summary_by_season.csv", {GroupField::Season});
    write_summary("summary_by_target_season.csv",
                  {GroupField::Target, GroupField::Season});
    write_summary("summary_by_target_season_location.csv",
                  {GroupField::Target, GroupField::Season,
                   GroupField::Location});
  }

  // Training-side means per fit (the within-sample halves of the usual
  // train/test comparison plots).
  {
    auto out = open_output(config.out / "scores" / "summary_train.csv", config);
    out << "method,target,test_season,train_mean_logscore,converged,"
           "restarts_used\n";
    for (const auto& cell : cells) {
      for (const auto& m : cell.methods) {
        if (!m.ok) continue;
        out << m.label << "," << cell.target << "," << cell.season << ","
            << double_to_string(m.fit.train_mean_logscore) << ","
            << (m.fit.converged ? 1 : 0) << "," << m.fit.restarts_used << "\n";
      }
    }
  }

  // Run summary with per-task status; failures flag partial output.
  std::size_t failures = 0;
  {
    auto out = open_output(config.out / "run_summary.csv", config);
    out << "method,target,test_season,status,error\n";
    for (const auto& cell : cells) {
      for (const auto& m : cell.methods) {
        out << m.label << "," << cell.target << "," << cell.season << ","
            << (m.ok ? "ok" : "failed") << "," << m.error << "\n";
        if (!m.ok) ++failures;
      }
    }
  }
  if (failures > 0) {
    throw FitError(std::to_string(failures) +
                   " method task(s) failed; see run_summary.csv");
  }
}

void run_calibrate(const Config& config) {
  check_run_inputs(config);
  const Experiment exp = load_experiment(config);
  const auto selected = needs_cv_selection(config)
                            ? load_selected_k(config)
                            : std::map<SelectionKey, std::size_t>{};
  const PitRng rng(config.seed);

  struct CellOutput {
    int target = 0;
    std::string season;
    std::vector<PITValue> pits;
    std::vector<std::string> errors;
  };
  std::vector<CellOutput> cells;
  for (const auto& season : config.test_seasons) {
    for (int target : config.targets) {
      CellOutput cell;
      cell.target = target;
      cell.season = season;
      cells.push_back(std::move(cell));
    }
  }

  std::vector<std::function<void()>> tasks;
  tasks.reserve(cells.size());
  for (auto& cell : cells) {
    tasks.push_back([&config, &exp, &selected, &rng, &cell] {
      const TrainingSet training =
          exp.dataset.training_for(cell.target, cell.season);
      const auto test_records =
          exp.dataset.records_for(cell.target, cell.season);
      for (Method method : config.methods) {
        std::string label = method_name(method);
        try {
          const std::size_t K =
              resolve_k(config, method, cell.target, cell.season, selected);
          label = method_name(method, K);
          const fs::path path =
              params_path(config, label, cell.target, cell.season);
          std::ifstream in(path);
          if (!in) {
            throw DataError("params file '" + path.string() +
                            "' not found (run the score subcommand first)");
          }
          json j;
          in >> j;
          const EnsembleParams params = params_from_json(j.at("params"));
          for (const TrainingRecord* rec : training.records) {
            const BinnedDistribution ens =
                combine_bmc(rec->components, params);
            cell.pits.push_back(pit(ens, rec->obs, rng, label, "train"));
          }
          for (const TrainingRecord* rec : test_records) {
            const BinnedDistribution ens =
                combine_bmc(rec->components, params);
            cell.pits.push_back(pit(ens, rec->obs, rng, label, "test"));
          }
        } catch (const Error& e) {
          cell.errors.push_back(label + ": " + e.what());
        } catch (const json::exception& e) {
          cell.errors.push_back(label + ": bad params file: " + e.what());
        }
      }
    });
  }
  parallel_run(config.jobs, tasks);

  std::vector<PITValue> all_pits;
  std::vector<std::string> failures;
  for (const auto& cell : cells) {
    for (const auto& e : cell.errors) {
      failures.push_back("target " + std::to_string(cell.target) + " season " +
                         cell.season + " " + e);
    }
    all_pits.insert(all_pits.end(), cell.pits.begin(), cell.pits.end());
  }
  if (all_pits.empty()) {
    std::string msg = "calibration produced no PIT values";
    for (const auto& f : failures) msg += "\n  " + f;
    throw DataError(msg);
  }

  // PIT files per method.
  std::map<std::string, std::vector<const PITValue*>> per_method;
  for (const auto& p : all_pits) per_method[p.method].push_back(&p);
  for (const auto& [label, pits] : per_method) {
    auto out = open_output(
        config.out / "calibration" / ("pit_" + label + ".csv"), config);
    out << "method,location,season,epiweek,target,period,pit,u_draw\n";
    for (const PITValue* p : pits) {
      out << p->method << "," << p->location << "," << p->season << ","
          << p->epiweek << "," << p->target << "," << p->period << ","
          << double_to_string(p->value) << "," << double_to_string(p->u_draw)
          << "\n";
    }
  }

  // Curves + Cramer distances per (method, target[, season], period).
  const auto rows = calibration_report(all_pits);
  auto cramer = open_output(config.out / "calibration" / "cramer.csv", config);
  cramer << "method,target,season,period,n,cramer_distance,curve_file\n";
  for (const auto& row : rows) {
    const std::string curve_name =
        "curve_" + row.method + "_" + std::to_string(row.target) + "wk_" +
        season_file_tag(row.season) + "_" + row.period + ".csv";
    auto curve = open_output(config.out / "calibration" / curve_name, config);
    curve << "x,empirical_cdf\n";
    for (const auto& [x, f] : row.curve) {
      curve << double_to_string(x) << "," << double_to_string(f) << "\n";
    }
    cramer << row.method << "," << row.target << "," << row.season << ","
           << row.period << "," << row.n << "," << double_to_string(row.cramer)
           << "," << curve_name << "\n";
  }

  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) +
                      " calibration task(s) failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw DataError(msg);
  }
}

namespace {
int wrap(void (*f)(const Config&), const Config& config) {
  try {
    f(config);
    return 0;
  } catch (const Error& e) {
    std::cerr << "betapool: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "betapool: unexpected error: " << e.what() << "\n";
    return 1;
  }
}
}  // namespace

int cmd_cv(const Config& config) { return wrap(run_cv, config); }
int cmd_fit_forecast_score(const Config& config) {
  return wrap(run_fit_forecast_score, config);
}
int cmd_calibrate(const Config& config) { return wrap(run_calibrate, config); }

}  // namespace betapool
