// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace betapool {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("cannot parse number '" + s + "' " + context);
  }
  return v;
}

std::optional<double> parse_optional_double(const std::string& s) {
  const std::string t = lower(s);
  if (t.empty() || t == "none" || t == "na" || t == "nan") {
    return std::nullopt;
  }
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    return std::nullopt;
  }
  return v;
}

// Shortest decimal form that parses back to the same double.
std::string double_to_string(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<int> week_ahead_target(const std::string& target) {
  static const std::regex re(R"(^\s*([1-4])\s+wk\s+ahead\s*$)",
                             std::regex::icase);
  std::smatch m;
  if (std::regex_match(target, m, re)) {
    return std::stoi(m[1]);
  }
  return std::nullopt;
}

const std::array<std::string, 7> kSubmissionHeader = {
    "location", "target",         "type",
    "unit",     "bin_start_incl", "bin_end_notincl",
    "value"};

}  // namespace

BinStructurePtr StructurePool::get(std::vector<double> edges) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = pool_.find(edges);
  if (it != pool_.end()) {
    return it->second;
  }
  auto ptr = std::make_shared<const BinStructure>(edges);
  pool_.emplace(std::move(edges), ptr);
  return ptr;
}

SubmissionFile parse_submission(const std::filesystem::path& path,
                                StructurePool* pool) {
  static const std::regex name_re(R"(^EW(\d{1,2})-(\d{4})-(.+)\.csv$)");
  std::smatch name_match;
  const std::string filename = path.filename().string();
  if (!std::regex_match(filename, name_match, name_re)) {
    throw ParseError("submission filename '" + filename +
                     "' does not match EW<ww>-<yyyy>-<model_id>.csv");
  }

  SubmissionFile file;
  file.epiweek = EpiWeek{std::stoi(name_match[2]), std::stoi(name_match[1])};
  if (!epiweek_valid(file.epiweek)) {
    throw ParseError("filename '" + filename + "' encodes invalid epiweek");
  }
  file.model_id = name_match[3];
  file.season = season_of(file.epiweek);

  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields.size() != kSubmissionHeader.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": expected 7 header columns, got " +
                         std::to_string(fields.size()));
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (lower(fields[i]) != kSubmissionHeader[i]) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": header column '" + fields[i] + "' should be '" +
                           kSubmissionHeader[i] + "'");
        }
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kSubmissionHeader.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 7 columns, got " +
                       std::to_string(fields.size()));
    }
    SubmissionRow row;
    row.location = fields[0];
    row.target = fields[1];
    row.type = fields[2];
    row.unit = fields[3];
    row.bin_start = parse_optional_double(fields[4]);
    row.bin_end = parse_optional_double(fields[5]);
    row.value = parse_double(fields[6], "at " + path.string() + ":" +
                                            std::to_string(line_no));
    file.rows.push_back(std::move(row));
  }
  if (!header_seen) {
    throw ParseError(path.string() + ": empty file");
  }

  // Assemble week-ahead bin blocks per (location, target).
  struct BinRow {
    double start;
    double end;
    double value;
  };
  std::map<std::pair<std::string, int>, std::vector<BinRow>> groups;
  for (const auto& row : file.rows) {
    if (lower(row.type) != "bin") continue;
    const auto target = week_ahead_target(row.target);
    if (!target) continue;
    const std::pair<std::string, int> key{row.location, *target};
    if (!row.bin_start || !row.bin_end) {
      file.rejected.push_back(
          {row.location, *target, "bin row without numeric bounds"});
      groups.erase(key);
      continue;
    }
    groups[key].push_back({*row.bin_start, *row.bin_end, row.value});
  }

  StructurePool local_pool;
  StructurePool& structures = pool ? *pool : local_pool;
  for (auto& [key, bins] : groups) {
    std::stable_sort(bins.begin(), bins.end(),
                     [](const BinRow& a, const BinRow& b) {
                       return a.start < b.start;
                     });
    std::vector<double> edges;
    std::vector<double> probs;
    edges.reserve(bins.size() + 1);
    probs.reserve(bins.size());
    bool contiguous = true;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (i > 0 && bins[i].start != bins[i - 1].end) {
        contiguous = false;
        break;
      }
      edges.push_back(bins[i].start);
      probs.push_back(bins[i].value);
    }
    if (!contiguous) {
      file.rejected.push_back({key.first, key.second,
                               "bins are not contiguous"});
      continue;
    }
    edges.push_back(bins.back().end);
    try {
      auto structure = structures.get(std::move(edges));
      file.blocks.push_back({key.first, key.second,
                             BinnedDistribution::validated(structure,
                                                           std::move(probs))});
    } catch (const DataError& e) {
      file.rejected.push_back({key.first, key.second, e.what()});
    }
  }
  return file;
}

void write_submission(const SubmissionFile& file,
                      const std::filesystem::path& path,
                      std::span<const std::string> header_lines) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  for (const auto& line : header_lines) {
    out << "# " << line << "\n";
  }
  out << "Location,Target,Type,Unit,Bin_start_incl,Bin_end_notincl,Value\n";
  for (const auto& block : file.blocks) {
    const auto& s = block.dist.structure();
    const auto& p = block.dist.probs();
    for (std::size_t i = 0; i < p.size(); ++i) {
      out << block.location << "," << block.target << " wk ahead,Bin,percent,"
          << double_to_string(s.lower(i)) << "," << double_to_string(s.upper(i))
          << "," << double_to_string(p[i]) << "\n";
    }
  }
}

std::optional<double> TruthSeries::value_at(const std::string& location,
                                            const EpiWeek& week) const {
  const auto it = index_.find({location, week.yyyyww()});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TruthSeries parse_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  TruthSeries truth;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields.size() != 4 || lower(fields[0]) != "location" ||
          lower(fields[1]) != "season" || lower(fields[2]) != "epiweek" ||
          lower(fields[3]) != "wili") {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": header must be location,season,epiweek,wili");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 4 columns");
    }
    TruthSeries::Row row;
    row.location = fields[0];
    row.season = fields[1];
    const std::string at = " at " + path.string() + ":" + std::to_string(line_no);
    row.epiweek = EpiWeek::from_yyyyww(
        static_cast<int>(parse_double(fields[2], at)));
    row.wili = parse_double(fields[3], at);
    if (row.wili < 0.0) {
      throw ParseError("negative wILI" + at);
    }
    if (season_of(row.epiweek) != row.season) {
      throw ParseError("season label '" + row.season +
                       "' does not match epiweek " +
                       std::to_string(row.epiweek.yyyyww()) + at);
    }
    const auto key = std::make_pair(row.location, row.epiweek.yyyyww());
    if (!truth.index_.emplace(key, row.wili).second) {
      throw ParseError("duplicate truth value for " + row.location + " " +
                       std::to_string(row.epiweek.yyyyww()) + at);
    }
    truth.rows.push_back(std::move(row));
  }
  if (!header_seen) {
    throw ParseError(path.string() + ": empty file");
  }
  return truth;
}

BuildResult build_dataset(std::span<const SubmissionFile> submissions,
                          const TruthSeries& truth,
                          std::span<const int> targets,
                          std::span<const std::string> locations) {
  std::set<std::string> model_set;
  for (const auto& f : submissions) {
    model_set.insert(f.model_id);
  }
  if (model_set.empty()) {
    throw EmptyDatasetError("no submissions to align");
  }
  const std::set<int> target_set(targets.begin(), targets.end());
  const std::set<std::string> location_set(locations.begin(), locations.end());

  BuildResult result;
  result.data.models.assign(model_set.begin(), model_set.end());
  std::map<std::string, std::size_t> model_index;
  for (std::size_t i = 0; i < result.data.models.size(); ++i) {
    model_index[result.data.models[i]] = i;
  }
  const std::size_t M = result.data.models.size();

  // key -> per-model distribution
  struct Key {
    std::string location;
    std::string season;
    int epiweek;
    int target;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<std::optional<BinnedDistribution>>> grouped;
  for (const auto& f : submissions) {
    const std::size_t mi = model_index.at(f.model_id);
    for (const auto& block : f.blocks) {
      if (!target_set.contains(block.target)) continue;
      if (!location_set.empty() && !location_set.contains(block.location)) {
        continue;
      }
      Key key{block.location, f.season, f.epiweek.yyyyww(), block.target};
      auto& slot = grouped[key];
      slot.resize(M);
      if (slot[mi].has_value()) {
        throw DataError("duplicate forecast for model " + f.model_id + " at " +
                        key.location + " " + std::to_string(key.epiweek) +
                        " target " + std::to_string(key.target));
      }
      slot[mi] = block.dist;
    }
  }

  for (auto& [key, slots] : grouped) {
    const std::string tag = key.location + " " + key.season + " ew" +
                            std::to_string(key.epiweek) + " " +
                            std::to_string(key.target) + "wk";
    std::size_t have = 0;
    for (const auto& s : slots) have += s.has_value() ? 1 : 0;
    if (have != M) {
      result.excluded.push_back(tag + ": only " + std::to_string(have) + "/" +
                                std::to_string(M) + " component forecasts");
      continue;
    }
    bool shared = true;
    for (std::size_t m = 1; m < M; ++m) {
      if (slots[m]->structure() != slots[0]->structure()) {
        shared = false;
        break;
      }
    }
    if (!shared) {
      result.excluded.push_back(tag + ": components on different bin grids");
      continue;
    }
    const EpiWeek forecast_week = EpiWeek::from_yyyyww(key.epiweek);
    const EpiWeek target_week = epiweek_add(forecast_week, key.target);
    const auto observed = truth.value_at(key.location, target_week);
    if (!observed) {
      result.excluded.push_back(tag + ": no truth at " +
                                std::to_string(target_week.yyyyww()));
      continue;
    }

    TrainingRecord rec;
    rec.obs.location = key.location;
    rec.obs.season = key.season;
    rec.obs.epiweek = key.epiweek;
    rec.obs.target = key.target;
    rec.obs.value = *observed;
    try {
      rec.obs.bin_index = locate_bin(slots[0]->structure(), *observed);
    } catch (const OutOfSupportError& e) {
      result.excluded.push_back(tag + ": " + e.what());
      continue;
    }
    rec.components.reserve(M);
    for (auto& s : slots) {
      rec.components.push_back(std::move(*s));
    }
    result.data.records.push_back(std::move(rec));
  }

  if (result.data.records.empty()) {
    throw EmptyDatasetError("no aligned forecast/truth records");
  }
  return result;
}

std::vector<std::filesystem::path> discover_submissions(
    std::span<const std::filesystem::path> roots,
    std::span<const std::string> models) {
  static const std::regex name_re(R"(^EW(\d{1,2})-(\d{4})-(.+)\.csv$)");
  const std::set<std::string> wanted(models.begin(), models.end());
  std::vector<std::filesystem::path> out;
  for (const auto& root : roots) {
    if (!std::filesystem::exists(root)) {
      throw DataError("forecast directory '" + root.string() + "' not found");
    }
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (!std::regex_match(name, m, name_re)) continue;
      if (!wanted.empty() && !wanted.contains(m[3])) continue;
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace betapool
