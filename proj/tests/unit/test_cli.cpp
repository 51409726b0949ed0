#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sys/wait.h>

#include "discern/common.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

Result cli(const test::TempDir& dir, const std::string& args, const std::string& env = {}) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = env + " '" + test::cli_path() + "' --data-dir '" + test::data_dir().string() + "' " + args +
                          " > /dev/null 2> '" + err_path.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = discern::read_text_file(err_path);
  return r;
}

std::string fixture(const std::string& name) { return "'" + (test::data_dir() / "fixtures" / name).string() + "'"; }

std::size_t line_count(const fs::path& p) {
  const auto text = discern::read_text_file(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string small_grid(const test::TempDir& dir) {
  const auto path = dir / "grid.json";
  std::ofstream(path) << R"({"schema": "discern.grid/1", "profile_source": "calvillo_style", "inventory_kind": "BFI2S",
  "scale_formats": ["Likert"], "corpus_name": "fixture", "repeats": 1,
  "backends": [{"backend_kind": "synthetic", "model_name": "gpt-4o", "temperature": 0.2}]})";
  return "'" + path.string() + "'";
}

}  // namespace

TEST_CASE("score writes one row per participant") {
  test::TempDir dir;
  auto r = cli(dir, "score --inventory BFI2S --responses " + fixture("profiles_bfi2s_336.csv") + " --out '" +
                        (dir / "s.csv").string() + "'");
  CHECK(r.code == 0);
  CHECK(line_count(dir / "s.csv") == 337);
  r = cli(dir, "score --inventory BFI2 --responses " + fixture("profiles_bfi2_438.csv") + " --out '" +
                   (dir / "l.csv").string() + "'");
  CHECK(r.code == 0);
  CHECK(line_count(dir / "l.csv") == 439);

  std::ofstream(dir / "empty.csv") << "";
  r = cli(dir, "score --inventory BFI2S --responses '" + (dir / "empty.csv").string() + "' --out '" +
                   (dir / "e.csv").string() + "'");
  CHECK(r.code != 0);
  CHECK(r.err.find("discern: error:") != std::string::npos);
  r = cli(dir, "score --inventory BFI2 --responses " + fixture("profiles_bfi2s_336.csv") + " --out '" +
                   (dir / "m.csv").string() + "'");
  CHECK(r.code != 0);
}

TEST_CASE("live run without a token fails before writing") {
  test::TempDir dir;
  const auto out = dir / "out";
  const auto r = cli(dir,
                     "run --grid " + small_grid(dir) + " --profiles " + fixture("profiles_bfi2s_336.csv") +
                         " --corpus " + fixture("headlines_fixture.json") + " --out-dir '" + out.string() +
                         "' --backend live --endpoint http://127.0.0.1:9/v1/chat/completions",
                     "env -u DISCERN_API_KEY");
  CHECK(r.code != 0);
  CHECK(r.err.find("DISCERN_API_KEY") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "sessions.jsonl"));
}

TEST_CASE("run, refuse rerun, resume and analyze") {
  test::TempDir dir;
  const auto out = dir / "out";
  const std::string run_args = "run --grid " + small_grid(dir) + " --profiles " + fixture("profiles_bfi2s_336.csv") +
                               " --corpus " + fixture("headlines_fixture.json") + " --out-dir '" + out.string() +
                               "' --seed 5";
  REQUIRE(cli(dir, run_args).code == 0);
  CHECK(line_count(out / "sessions.jsonl") == 336 * 24);
  CHECK(line_count(out / "neutral.jsonl") == 24);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(cli(dir, run_args).code != 0);
  CHECK(cli(dir, run_args + " --resume").code == 0);
  CHECK(line_count(out / "sessions.jsonl") == 336 * 24);

  const auto report = dir / "report";
  const auto r = cli(dir, "analyze --sessions '" + (out / "sessions.jsonl").string() + "' --corpus " +
                              fixture("headlines_fixture.json") + " --reference-fixtures " +
                              fixture("human_reference.json") + " --out-dir '" + report.string() + "'");
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(discern::read_text_file(report / "manifest.json"));
  for (const auto& f : manifest.at("files")) CHECK(fs::exists(report / f.get<std::string>()));
  CHECK(manifest.at("files").size() >= 10);

  auto text = discern::read_text_file(out / "sessions.jsonl");
  const auto pos = text.find("\"run_id\":\"") + 10;
  text.replace(pos, text.find('"', pos) - pos, "run-other");
  std::ofstream(out / "sessions.jsonl", std::ios::trunc) << text;
  const auto mixed = cli(dir, "analyze --sessions '" + (out / "sessions.jsonl").string() + "' --corpus " +
                                  fixture("headlines_fixture.json") + " --out-dir '" + (dir / "r2").string() + "'");
  CHECK(mixed.code != 0);
  CHECK(mixed.err.find("run") != std::string::npos);
}

TEST_CASE("baseline and corpus validation commands") {
  test::TempDir dir;
  CHECK(cli(dir, "baseline --rating 3 --n 5 --out '" + (dir / "b.csv").string() + "'").code == 0);
  CHECK(cli(dir, "baseline --rating 5").code != 0);
  CHECK(cli(dir, "validate-corpus --corpus " + fixture("headlines_fixture.json")).code == 0);
  CHECK(cli(dir, "validate-corpus --corpus " + fixture("headlines_fixture.json") + " --per-veracity 10").code == 1);
  CHECK(cli(dir, "validate-corpus --corpus " + fixture("headlines_fixture.json") + " --per-veracity 10 --no-balance")
            .code == 0);
}
