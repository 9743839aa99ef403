// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betapool/dataset.hpp"
#include "betapool/epiweek.hpp"

namespace betapool {

/// Dedupes identical edge grids so distributions share one BinStructure.
class StructurePool {
 public:
  BinStructurePtr get(std::vector<double> edges);

 private:
  std::mutex mutex_;
  std::map<std::vector<double>, BinStructurePtr> pool_;
};

/// One CSV row of a FluSight-format submission, typed but otherwise verbatim.
/// "Point" rows and non-week-ahead targets are retained here and ignored
/// downstream.
struct SubmissionRow {
  std::string location;
  std::string target;  // e.g. "1 wk ahead", "Season onset"
  std::string type;    // "Bin" or "Point"
  std::string unit;
  std::optional<double> bin_start;  // absent when the field is none/empty
  std::optional<double> bin_end;
  double value = 0.0;
};

/// A parsed submission file: identity inferred from the EWww-yyyy-model_id
/// filename, raw rows, plus the validated week-ahead bin blocks and any
/// per-(location,target) rejections.
struct SubmissionFile {
  std::string model_id;
  std::string season;
  EpiWeek epiweek;
  std::vector<SubmissionRow> rows;

  struct Block {
    std::string location;
    int target = 0;  // 1..4 weeks ahead
    BinnedDistribution dist;
  };
  std::vector<Block> blocks;

  struct Rejection {
    std::string location;
    int target = 0;
    std::string reason;
  };
  std::vector<Rejection> rejected;
};

// Header must be Location,Target,Type,Unit,Bin_start_incl,Bin_end_notincl,
// Value (case-insensitive); malformed rows raise ParseError with the line
// number. Invalid distributions reject only their (location, target) block.
// Lines starting with '#' are skipped so round-tripped outputs stay readable.
SubmissionFile parse_submission(const std::filesystem::path& path,
                                StructurePool* pool = nullptr);

// FluSight-format CSV of the file's bin blocks (Point rows are not
// reproduced; this writer serves round-trips and ensemble forecast export).
// `header_lines` are emitted first, prefixed with '#'.
void write_submission(const SubmissionFile& file,
                      const std::filesystem::path& path,
                      std::span<const std::string> header_lines = {});

/// Weekly observed wILI keyed by (location, epiweek).
struct TruthSeries {
  struct Row {
    std::string location;
    std::string season;
    EpiWeek epiweek;
    double wili = 0.0;
  };
  std::vector<Row> rows;

  std::optional<double> value_at(const std::string& location,
                                 const EpiWeek& week) const;

 private:
  friend TruthSeries parse_truth(const std::filesystem::path&);
  std::map<std::pair<std::string, int>, double> index_;
};

// Header: location,season,epiweek,wili with epiweek as YYYYWW. One value per
// key; wILI must be >= 0; the season label must match the epiweek under the
// week-40 convention.
TruthSeries parse_truth(const std::filesystem::path& path);

struct BuildResult {
  Dataset data;
  // One line per dropped key (incomplete component set, missing truth,
  // structure mismatch) for the complete-case audit trail.
  std::vector<std::string> excluded;
};

// Aligns submissions to truth: a record is emitted for key (location, season,
// epiweek, target) only when all M models forecast it and the truth value at
// epiweek+target exists. Throws EmptyDatasetError when nothing aligns.
BuildResult build_dataset(std::span<const SubmissionFile> submissions,
                          const TruthSeries& truth,
                          std::span<const int> targets,
                          std::span<const std::string> locations);

// Forecast files under the given roots: regular files named
// EW<ww>-<yyyy>-<model_id>.csv, sorted for determinism. `models` filters by
// model_id when nonempty.
std::vector<std::filesystem::path> discover_submissions(
    std::span<const std::filesystem::path> roots,
    std::span<const std::string> models);

}  // namespace betapool
