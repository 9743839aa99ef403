// Apache License, Version 2.0, refer to LICENSE.txt
//
// Writes a small synthetic FluSight-style experiment to disk: per-model
// weekly submission CSVs plus a truth series, with a smooth seasonal curve
// and per-model bias so the combination methods have signal to find.
#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "betapool/epiweek.hpp"
#include "betapool/text.hpp"
#include "support/synth.hpp"

namespace betapool::testing {

struct FixtureOptions {
  std::vector<std::string> seasons = {"2012/2013", "2013/2014", "2014/2015",
                                      "2015/2016"};
  std::vector<std::string> models = {"modelA", "modelB"};
  std::vector<std::string> locations = {"US National", "HHS Region 1"};
  std::vector<int> targets = {1, 2, 3, 4};
  std::vector<int> weeks = {43, 44, 45, 46, 47};  // submission weeks
  std::uint64_t seed = 99;
};

inline double fixture_truth_curve(int week_offset, std::size_t location_idx) {
  const double t = static_cast<double>(week_offset);
  return 1.2 + 0.4 * static_cast<double>(location_idx) +
         3.0 * std::exp(-(t - 10.0) * (t - 10.0) / 24.0);
}

// Grid used by the fixture: 0.0..10.0 in 0.5 steps plus a terminal wide bin.
inline BinStructurePtr fixture_grid() {
  std::vector<double> edges;
  for (int i = 0; i <= 20; ++i) edges.push_back(0.5 * i);
  edges.push_back(100.0);
  return make_structure(std::move(edges));
}

struct FixturePaths {
  std::filesystem::path forecasts;
  std::filesystem::path truth;
};

inline FixturePaths write_experiment(const std::filesystem::path& dir,
                                     const FixtureOptions& opts = {}) {
  namespace fs = std::filesystem;
  const auto grid = fixture_grid();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 0.25);
  std::normal_distribution<double> obs_noise(0.0, 0.35);

  FixturePaths paths{dir / "forecasts", dir / "truth.csv"};
  fs::create_directories(paths.forecasts);

  // Truth: weeks 40..(40+32) of each season.
  std::ofstream truth(paths.truth);
  truth << "location,season,epiweek,wili\n";
  std::mt19937_64 truth_rng(opts.seed + 1);
  // truth values cached for the forecast generator
  std::map<std::pair<std::string, int>, double> truth_vals;
  for (const auto& season : opts.seasons) {
    const int start_year = season_start_year(season);
    EpiWeek week{start_year, 40};
    for (int off = 0; off <= 32; ++off) {
      for (std::size_t li = 0; li < opts.locations.size(); ++li) {
        double v = fixture_truth_curve(off, li) + obs_noise(truth_rng);
        v = std::max(v, 0.05);
        truth_vals[{opts.locations[li], week.yyyyww()}] = v;
        truth << opts.locations[li] << "," << season_of(week) << ","
              << week.yyyyww() << "," << double_to_string(v) << "\n";
      }
      week = epiweek_add(week, 1);
    }
  }
  truth.close();

  // Submissions: biased, mis-scaled discretized normals around the truth.
  for (std::size_t mi = 0; mi < opts.models.size(); ++mi) {
    const double bias = mi % 2 == 0 ? -0.35 : 0.45;
    const double sd = mi % 2 == 0 ? 0.8 : 1.15;
    const fs::path model_dir = paths.forecasts / opts.models[mi];
    fs::create_directories(model_dir);
    for (const auto& season : opts.seasons) {
      const int start_year = season_start_year(season);
      for (int w : opts.weeks) {
        const EpiWeek ew{start_year, w};
        std::ofstream out(model_dir /
                          (ew.str() + "-" + opts.models[mi] + ".csv"));
        out << "Location,Target,Type,Unit,Bin_start_incl,Bin_end_notincl,"
               "Value\n";
        for (std::size_t li = 0; li < opts.locations.size(); ++li) {
          for (int target : opts.targets) {
            const EpiWeek tw = epiweek_add(ew, target);
            const auto it = truth_vals.find({opts.locations[li], tw.yyyyww()});
            const double center =
                (it != truth_vals.end() ? it->second
                                        : fixture_truth_curve(10, li)) +
                bias + noise(rng);
            const auto dist = discretized_normal(grid, center, sd);
            // a point row, retained by the parser but ignored downstream
            out << opts.locations[li] << "," << target
                << " wk ahead,Point,percent,," << ","
                << double_to_string(center) << "\n";
            for (std::size_t b = 0; b < dist.bin_count(); ++b) {
              out << opts.locations[li] << "," << target
                  << " wk ahead,Bin,percent,"
                  << double_to_string(grid->lower(b)) << ","
                  << double_to_string(grid->upper(b)) << ","
                  << double_to_string(dist.probs()[b]) << "\n";
            }
          }
        }
      }
    }
  }
  return paths;
}

}  // namespace betapool::testing
