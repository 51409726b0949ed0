#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sys/wait.h>
#include <unistd.h>

#include "discern/error.hpp"
#include "discern/runner.hpp"
#include "discern/sessions.hpp"
#include "support.hpp"

using namespace discern;

namespace {

ExperimentGrid one_cell_grid() {
  ExperimentGrid g;
  g.profile_source = ProfileSource::CalvilloStyle;
  g.inventory_kind = InventoryKind::Bfi2S;
  g.scale_formats = {ScaleFormat::Likert};
  BackendConfig b;
  b.model_name = "gpt-4o";
  b.seed = 7;
  g.backends = {b};
  g.corpus_name = "fixture";
  return g;
}

BackendFactory synthetic_factory() {
  return [](const BackendConfig& cfg) { return make_backend(cfg, test::shared_inventory()); };
}

RunOptions options_in(const test::TempDir& dir, std::string run_id = "run-test") {
  RunOptions o;
  o.run_id = std::move(run_id);
  o.sessions_path = dir / "sessions.jsonl";
  o.neutral_path = dir / "neutral.jsonl";
  o.workers = 4;
  return o;
}

const std::vector<ParticipantProfile>& profiles_336() {
  static const auto p = synthesize_profiles(test::inventory().bank(InventoryKind::Bfi2S), 336, 2021);
  return p;
}

RunSummary run(const ExperimentGrid& g, const std::vector<ParticipantProfile>& profiles, const RunOptions& o) {
  return run_experiment(g, profiles, test::fixture_corpus(), test::inventory(), test::prompt_template(), o,
                        synthetic_factory());
}

}  // namespace

TEST_CASE("no profiles gives an empty persona log") {
  test::TempDir dir;
  const auto s = run(one_cell_grid(), {}, options_in(dir));
  CHECK(s.planned == 0);
  CHECK(s.written == 0);
  CHECK(s.neutral_written == 24);
  CHECK(load_session_log(dir / "sessions.jsonl").empty());
  CHECK(load_session_log(dir / "neutral.jsonl").size() == 24);
}

TEST_CASE("one cell over 336 agents writes every session once") {
  test::TempDir dir;
  const auto s = run(one_cell_grid(), profiles_336(), options_in(dir));
  CHECK(s.planned == 8064);
  CHECK(s.written == 8064);
  const auto records = load_session_log(dir / "sessions.jsonl");
  REQUIRE(records.size() == 8064);
  std::set<std::string> keys;
  for (const auto& r : records) {
    keys.insert(r.session_key());
    CHECK(r.condition == Condition::Persona);
  }
  CHECK(keys.size() == 8064);
  CHECK(records.front().participant_id == "P0001");
  CHECK(records.front().headline_id == "T01");
  for (const auto& r : load_session_log(dir / "neutral.jsonl")) {
    CHECK(r.participant_id == "neutral");
    CHECK_FALSE(r.scale_format);
  }
}

TEST_CASE("runs are reproducible regardless of worker count") {
  test::TempDir a, b;
  const std::vector<ParticipantProfile> few(profiles_336().begin(), profiles_336().begin() + 20);
  auto oa = options_in(a);
  oa.workers = 1;
  auto ob = options_in(b);
  ob.workers = 8;
  ob.batch_size = 7;
  run(one_cell_grid(), few, oa);
  run(one_cell_grid(), few, ob);
  CHECK(read_text_file(a / "sessions.jsonl") == read_text_file(b / "sessions.jsonl"));
  CHECK(read_text_file(a / "neutral.jsonl") == read_text_file(b / "neutral.jsonl"));
}

TEST_CASE("resume skips existing sessions and refuses a foreign run") {
  test::TempDir dir;
  const std::vector<ParticipantProfile> few(profiles_336().begin(), profiles_336().begin() + 10);
  const std::vector<ParticipantProfile> half(few.begin(), few.begin() + 5);
  run(one_cell_grid(), half, options_in(dir));
  const auto s = run(one_cell_grid(), few, options_in(dir));
  CHECK(s.skipped == 120);
  CHECK(s.written == 120);
  CHECK(s.neutral_written == 0);
  CHECK(load_session_log(dir / "sessions.jsonl").size() == 240);

  test::TempDir full;
  run(one_cell_grid(), few, options_in(full));
  CHECK(read_text_file(full / "sessions.jsonl") == read_text_file(dir / "sessions.jsonl"));

  CHECK_THROWS_AS(run(one_cell_grid(), few, options_in(dir, "run-other")), ConfigError);
}

TEST_CASE("a crash mid-write resumes without duplicates") {
  test::TempDir dir;
  const std::vector<ParticipantProfile> few(profiles_336().begin(), profiles_336().begin() + 30);
  const pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    auto o = options_in(dir);
    o.crash_after = 333;
    o.batch_size = 100;
    run(one_cell_grid(), few, o);
    std::_Exit(0);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 86);
  const auto torn = scan_session_log(dir / "sessions.jsonl");
  CHECK(torn.torn_tail);
  CHECK(torn.records.size() == 333);

  const auto s = run(one_cell_grid(), few, options_in(dir));
  CHECK(s.skipped == 333);
  const auto records = load_session_log(dir / "sessions.jsonl");
  CHECK(records.size() == 720);
  std::set<std::string> keys;
  for (const auto& r : records) keys.insert(r.session_key());
  CHECK(keys.size() == 720);

  test::TempDir clean;
  run(one_cell_grid(), few, options_in(clean));
  CHECK(read_text_file(clean / "sessions.jsonl") == read_text_file(dir / "sessions.jsonl"));
}

TEST_CASE("grid validation") {
  auto g = one_cell_grid();
  CHECK_NOTHROW(g.validate());
  CHECK(g.cells().size() == 1);

  auto bad = g;
  bad.scale_formats.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.backends.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.repeats = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.inventory_kind = InventoryKind::Bfi2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.backends.push_back(bad.backends.front());
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const auto preset = ExperimentGrid::load(test::data_dir() / "presets" / "paper_bfi2s.json");
  const auto cells = preset.cells();
  REQUIRE(cells.size() == 8);
  CHECK(cells[0].backend.model_name == "gpt-3.5-turbo");
  CHECK(cells[0].scale_format == ScaleFormat::Likert);
  CHECK(cells[1].scale_format == ScaleFormat::Expanded);
  CHECK(ExperimentGrid::from_json(preset.to_json()).to_json().dump() == preset.to_json().dump());
  CHECK(ExperimentGrid::load(test::data_dir() / "presets" / "paper_bfi2.json").inventory_kind == InventoryKind::Bfi2);
}

TEST_CASE("manifest hash ignores run id and tool version") {
  RunManifest m;
  m.grid = one_cell_grid();
  m.seed = 7;
  m.run_id = "a";
  const auto h = m.content_hash();
  m.run_id = "b";
  m.tool_version = "other";
  CHECK(m.content_hash() == h);
  m.seed = 8;
  CHECK(m.content_hash() != h);
  CHECK(RunManifest::from_json(m.to_json()).to_json().dump() == m.to_json().dump());
}

TEST_CASE("neutral baseline draws") {
  const auto b = build_neutral_baseline(3, 0.5, 4000, 42, "T01");
  REQUIRE(b.samples.size() == 4000);
  double sum = 0;
  for (double x : b.samples) sum += x;
  CHECK(std::abs(sum / 4000 - 3.0) < 4 * 0.5 / std::sqrt(4000.0));

  const auto tight = build_neutral_baseline(2, 1e-9, 10, 1);
  for (double x : tight.samples) CHECK(x == doctest::Approx(2.0).epsilon(1e-8));

  CHECK(build_neutral_baseline(3, 0.5, 10, 1).samples == build_neutral_baseline(3, 0.5, 10, 1).samples);
  CHECK(build_neutral_baseline(3, 0.5, 10, 1).samples != build_neutral_baseline(3, 0.5, 10, 2).samples);
  CHECK_THROWS_AS(build_neutral_baseline(0, 0.5, 10, 1), ValidationError);
  CHECK_THROWS_AS(build_neutral_baseline(3, 0, 10, 1), ValidationError);
  CHECK_THROWS_AS(build_neutral_baseline(3, 0.5, 1, 1), ValidationError);
}
