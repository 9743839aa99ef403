// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "betapool/ingest.hpp"
#include "support/fixture.hpp"

using namespace betapool;
using namespace betapool::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("betapool_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

const char* kHeader =
    "Location,Target,Type,Unit,Bin_start_incl,Bin_end_notincl,Value\n";

}  // namespace

TEST_CASE("parse_submission infers identity from the filename") {
  const auto dir = temp_dir("parse_id");
  const fs::path path = dir / "EW43-2016-CU_EAKFC_SEIRS.csv";
  write_file(path, std::string(kHeader) +
                       "US National,1 wk ahead,Bin,percent,0,0.5,0.4\n"
                       "US National,1 wk ahead,Bin,percent,0.5,1,0.6\n");
  const auto file = parse_submission(path);
  CHECK(file.model_id == "CU_EAKFC_SEIRS");
  CHECK(file.epiweek == EpiWeek{2016, 43});
  CHECK(file.season == "2016/2017");
  REQUIRE(file.blocks.size() == 1);
  CHECK(file.blocks[0].location == "US National");
  CHECK(file.blocks[0].target == 1);
  CHECK(file.blocks[0].dist.probs()[0] == doctest::Approx(0.4));

  CHECK_THROWS_AS(parse_submission(dir / "whatever.csv"), ParseError);
}

TEST_CASE("near-1 totals are renormalized, bad totals reject the block only") {
  const auto dir = temp_dir("parse_tol");
  const fs::path path = dir / "EW43-2016-m.csv";
  std::string body(kHeader);
  // block A sums to 1.0000001 -> accepted
  body += "US National,1 wk ahead,Bin,percent,0,0.5,0.5\n";
  body += "US National,1 wk ahead,Bin,percent,0.5,1,0.5000001\n";
  // block B sums to 0.9 -> rejected
  body += "US National,2 wk ahead,Bin,percent,0,0.5,0.45\n";
  body += "US National,2 wk ahead,Bin,percent,0.5,1,0.45\n";
  write_file(path, body);
  const auto file = parse_submission(path);
  REQUIRE(file.blocks.size() == 1);
  CHECK(file.blocks[0].target == 1);
  double total = 0.0;
  for (double p : file.blocks[0].dist.probs()) total += p;
  CHECK(total == 1.0);
  REQUIRE(file.rejected.size() == 1);
  CHECK(file.rejected[0].target == 2);
}

TEST_CASE("point rows and seasonal targets are retained but produce no blocks") {
  const auto dir = temp_dir("parse_point");
  const fs::path path = dir / "EW50-2014-m.csv";
  write_file(path, std::string(kHeader) +
                       "US National,1 wk ahead,Point,percent,,,2.3\n"
                       "US National,Season onset,Bin,week,42,43,0.5\n"
                       "US National,Season onset,Bin,week,43,44,0.5\n"
                       "US National,1 wk ahead,Bin,percent,0,0.5,1\n");
  const auto file = parse_submission(path);
  CHECK(file.rows.size() == 4);
  REQUIRE(file.blocks.size() == 1);
  CHECK(file.blocks[0].dist.bin_count() == 1);
  CHECK(file.rejected.empty());
}

TEST_CASE("malformed header and rows raise parse errors with position") {
  const auto dir = temp_dir("parse_bad");
  write_file(dir / "EW43-2016-m.csv", "Location,Target\nUS,1 wk ahead\n");
  CHECK_THROWS_AS(parse_submission(dir / "EW43-2016-m.csv"), ParseError);

  write_file(dir / "EW44-2016-m.csv",
             std::string(kHeader) + "US,1 wk ahead,Bin,percent,0,0.5\n");
  CHECK_THROWS_AS(parse_submission(dir / "EW44-2016-m.csv"), ParseError);

  write_file(dir / "EW45-2016-m.csv",
             std::string(kHeader) + "US,1 wk ahead,Bin,percent,0,0.5,abc\n");
  try {
    parse_submission(dir / "EW45-2016-m.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("non-contiguous bins reject the block") {
  const auto dir = temp_dir("parse_gap");
  write_file(dir / "EW43-2016-m.csv",
             std::string(kHeader) +
                 "US National,1 wk ahead,Bin,percent,0,0.5,0.5\n"
                 "US National,1 wk ahead,Bin,percent,0.6,1,0.5\n");
  const auto file = parse_submission(dir / "EW43-2016-m.csv");
  CHECK(file.blocks.empty());
  REQUIRE(file.rejected.size() == 1);
  CHECK(file.rejected[0].reason.find("contiguous") != std::string::npos);
}

TEST_CASE("submission round-trips through write and parse") {
  const auto dir = temp_dir("roundtrip");
  const FixtureOptions opts;
  const auto paths = write_experiment(dir, opts);
  const std::vector<fs::path> roots{paths.forecasts};
  const auto files = discover_submissions(roots, {});
  REQUIRE(!files.empty());

  const auto original = parse_submission(files[0]);
  const fs::path copy = dir / files[0].filename();
  write_submission(original, copy);
  const auto reparsed = parse_submission(copy);

  CHECK(reparsed.model_id == original.model_id);
  CHECK(reparsed.epiweek == original.epiweek);
  REQUIRE(reparsed.blocks.size() == original.blocks.size());
  for (std::size_t i = 0; i < original.blocks.size(); ++i) {
    CHECK(reparsed.blocks[i].location == original.blocks[i].location);
    CHECK(reparsed.blocks[i].target == original.blocks[i].target);
    CHECK(reparsed.blocks[i].dist.probs() == original.blocks[i].dist.probs());
    CHECK(reparsed.blocks[i].dist.structure() ==
          original.blocks[i].dist.structure());
  }
}

TEST_CASE("truth parsing validates keys and labels") {
  const auto dir = temp_dir("truth");
  write_file(dir / "truth.csv",
             "location,season,epiweek,wili\n"
             "US National,2016/2017,201643,2.37\n"
             "US National,2016/2017,201644,2.5\n");
  const auto truth = parse_truth(dir / "truth.csv");
  CHECK(truth.rows.size() == 2);
  CHECK(truth.value_at("US National", EpiWeek{2016, 43}) == 2.37);
  CHECK(!truth.value_at("US National", EpiWeek{2016, 45}).has_value());
  CHECK(!truth.value_at("HHS Region 1", EpiWeek{2016, 43}).has_value());

  write_file(dir / "dup.csv",
             "location,season,epiweek,wili\n"
             "US,2016/2017,201643,2.0\nUS,2016/2017,201643,2.1\n");
  CHECK_THROWS_AS(parse_truth(dir / "dup.csv"), ParseError);

  write_file(dir / "mislabel.csv",
             "location,season,epiweek,wili\n"
             "US,2015/2016,201643,2.0\n");
  CHECK_THROWS_AS(parse_truth(dir / "mislabel.csv"), ParseError);

  write_file(dir / "neg.csv",
             "location,season,epiweek,wili\nUS,2016/2017,201643,-1\n");
  CHECK_THROWS_AS(parse_truth(dir / "neg.csv"), ParseError);
}

TEST_CASE("build_dataset aligns, locates bins and applies complete-case") {
  const auto dir = temp_dir("build");
  // two models, but modelB is missing week 44 -> those keys drop
  write_file(dir / "EW43-2016-modelA.csv",
             std::string(kHeader) +
                 "US National,1 wk ahead,Bin,percent,0,2.3,0.3\n"
                 "US National,1 wk ahead,Bin,percent,2.3,2.4,0.4\n"
                 "US National,1 wk ahead,Bin,percent,2.4,100,0.3\n");
  write_file(dir / "EW43-2016-modelB.csv",
             std::string(kHeader) +
                 "US National,1 wk ahead,Bin,percent,0,2.3,0.5\n"
                 "US National,1 wk ahead,Bin,percent,2.3,2.4,0.2\n"
                 "US National,1 wk ahead,Bin,percent,2.4,100,0.3\n");
  write_file(dir / "EW44-2016-modelA.csv",
             std::string(kHeader) +
                 "US National,1 wk ahead,Bin,percent,0,2.3,0.3\n"
                 "US National,1 wk ahead,Bin,percent,2.3,2.4,0.4\n"
                 "US National,1 wk ahead,Bin,percent,2.4,100,0.3\n");
  write_file(dir / "truth.csv",
             "location,season,epiweek,wili\n"
             "US National,2016/2017,201644,2.37\n"
             "US National,2016/2017,201645,3.1\n");

  const std::vector<fs::path> roots{dir};
  const auto files = discover_submissions(roots, {});
  std::vector<SubmissionFile> subs;
  for (const auto& f : files) subs.push_back(parse_submission(f));
  const std::vector<int> targets{1, 2, 3, 4};
  const auto built = build_dataset(subs, parse_truth(dir / "truth.csv"),
                                   targets, {});

  REQUIRE(built.data.records.size() == 1);  // EW43 complete, EW44 incomplete
  const auto& rec = built.data.records[0];
  CHECK(rec.components.size() == 2);
  CHECK(rec.obs.value == 2.37);
  CHECK(rec.obs.bin_index == 1);  // [2.3, 2.4)
  CHECK(rec.obs.epiweek == 201643);
  CHECK(built.excluded.size() == 1);
  CHECK(built.excluded[0].find("1/2") != std::string::npos);

  // no overlap at all -> empty-dataset error
  write_file(dir / "truth_empty.csv", "location,season,epiweek,wili\n");
  CHECK_THROWS_AS(build_dataset(subs, parse_truth(dir / "truth_empty.csv"),
                                targets, {}),
                  EmptyDatasetError);
}

TEST_CASE("fixture experiment aligns completely") {
  const auto dir = temp_dir("fixture_align");
  FixtureOptions opts;
  const auto paths = write_experiment(dir, opts);
  const std::vector<fs::path> roots{paths.forecasts};
  const auto files = discover_submissions(roots, opts.models);
  // 2 models x 4 seasons x 5 weeks
  CHECK(files.size() == 40);
  std::vector<SubmissionFile> subs;
  StructurePool pool;
  for (const auto& f : files) subs.push_back(parse_submission(f, &pool));
  const auto built = build_dataset(subs, parse_truth(paths.truth),
                                   opts.targets, opts.locations);
  CHECK(built.excluded.empty());
  // seasons x weeks x locations x targets
  CHECK(built.data.records.size() == 4 * 5 * 2 * 4);
  CHECK(built.data.seasons() == opts.seasons);

  // expanding-window views respect season boundaries
  const auto ts = built.data.training_for(1, "2014/2015");
  CHECK(ts.seasons == std::vector<std::string>{"2012/2013", "2013/2014"});
  for (const auto* rec : ts.records) {
    CHECK(rec->obs.season != "2014/2015");
    CHECK(rec->obs.season != "2015/2016");
  }
}

TEST_CASE("discover_submissions filters by roster") {
  const auto dir = temp_dir("discover");
  FixtureOptions opts;
  const auto paths = write_experiment(dir, opts);
  const std::vector<fs::path> roots{paths.forecasts};
  const std::vector<std::string> only_a{"modelA"};
  const auto files = discover_submissions(roots, only_a);
  CHECK(files.size() == 20);
  for (const auto& f : files) {
    CHECK(f.filename().string().find("modelA") != std::string::npos);
  }
  const std::vector<fs::path> missing{dir / "nope"};
  CHECK_THROWS_AS(discover_submissions(missing, {}), DataError);
}
