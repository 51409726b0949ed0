#include "discern/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "discern/backend.hpp"
#include "discern/common.hpp"
#include "discern/corpus.hpp"
#include "discern/error.hpp"
#include "discern/inventory.hpp"
#include "discern/metrics.hpp"
#include "discern/persona.hpp"
#include "discern/report.hpp"
#include "discern/runner.hpp"
#include "discern/sessions.hpp"

namespace fs = std::filesystem;

namespace discern::cli {

namespace {

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'", 0);
  f << body;
  if (!f.flush()) throw IoError("write to '" + path.string() + "' failed", 0);
}

struct ScoreArgs {
  std::string inventory;
  fs::path responses, out;
};

int cmd_score(const fs::path& data_dir, const ScoreArgs& a) {
  const Inventory inventory = Inventory::load(data_dir);
  const ItemBank& bank = inventory.bank(parse_inventory_kind(a.inventory));
  const auto profiles = load_profiles_csv(a.responses, bank);
  if (profiles.empty()) throw ValidationError(a.responses.string() + ": no participant rows");
  std::vector<ScoredParticipant> rows;
  rows.reserve(profiles.size());
  for (const auto& p : profiles) rows.push_back({p.participant_id, score_inventory(p.responses, bank)});
  write_text(a.out, trait_scores_to_csv(rows));
  std::cerr << fmt::format("scored {} participants -> {}\n", rows.size(), a.out.string());
  return 0;
}

struct RunArgs {
  fs::path grid, profiles, corpus, out_dir;
  std::string backend;
  std::optional<std::uint64_t> seed;
  std::string run_id;
  std::size_t workers = 1;
  bool resume = false;
  bool trace = false;
  std::string endpoint;
  std::optional<std::size_t> crash_after;
};

int cmd_run(const fs::path& data_dir, RunArgs a) {
  ExperimentGrid grid = ExperimentGrid::load(a.grid);
  for (auto& b : grid.backends) {
    if (!a.backend.empty()) b.backend_kind = parse_backend_kind(a.backend);
    if (a.seed) b.seed = *a.seed;
    if (!a.endpoint.empty()) b.endpoint_url = a.endpoint;
    b.trace = a.trace;
  }
  grid.validate();
  // Fail before touching the output directory when a live token is missing.
  for (const auto& b : grid.backends)
    if (b.backend_kind == BackendKind::Live) LiveBackend probe(b);

  auto inventory = std::make_shared<const Inventory>(Inventory::load(data_dir));
  const PromptTemplate tmpl = PromptTemplate::load(data_dir);
  const Corpus corpus = load_corpus(a.corpus);
  const ItemBank& bank = inventory->bank(grid.inventory_kind);
  const auto profiles = load_profiles_csv(a.profiles, bank);

  RunManifest manifest;
  manifest.grid = grid;
  manifest.seed = grid.backends.front().seed;
  manifest.template_hash = tmpl.hash();
  manifest.corpus_hash = sha256_hex(read_text_file(a.corpus));
  manifest.profiles_hash = sha256_hex(read_text_file(a.profiles));
  manifest.run_id = a.run_id.empty() ? "run-" + manifest.content_hash().substr(0, 12) : a.run_id;

  fs::create_directories(a.out_dir);
  const fs::path sessions = a.out_dir / "sessions.jsonl";
  const fs::path neutral = a.out_dir / "neutral.jsonl";
  const fs::path manifest_path = a.out_dir / "manifest.json";
  const bool has_log = (fs::exists(sessions) && fs::file_size(sessions) > 0) || (fs::exists(neutral) && fs::file_size(neutral) > 0);
  if (has_log && !a.resume)
    throw ConfigError("'" + a.out_dir.string() + "' already holds session logs; pass --resume to continue that run");
  if (a.resume && fs::exists(manifest_path)) {
    const auto previous = RunManifest::from_json(nlohmann::json::parse(read_text_file(manifest_path)));
    if (previous.run_id != manifest.run_id || previous.content_hash() != manifest.content_hash())
      throw ConfigError("cannot resume: '" + manifest_path.string() + "' describes a different run (" +
                        previous.run_id + ")");
  }
  write_text(manifest_path, manifest.to_json().dump(2) + "\n");

  RunOptions options;
  options.run_id = manifest.run_id;
  options.sessions_path = sessions;
  options.neutral_path = neutral;
  options.workers = a.workers;
  options.crash_after = a.crash_after;
  const auto summary = run_experiment(grid, profiles, corpus, *inventory, tmpl, options,
                                      [&](const BackendConfig& c) { return make_backend(c, inventory); });
  std::cerr << fmt::format("run {}: {} planned, {} written, {} already present, {} unparsed, {} neutral\n",
                           manifest.run_id, summary.planned, summary.written, summary.skipped, summary.failed,
                           summary.neutral_written);
  return 0;
}

struct AnalyzeArgs {
  fs::path sessions, neutral, trait_scores, reference, corpus, out_dir;
  std::string format = "both";
  double baseline_sigma = kDefaultBaselineSigma;
  std::optional<std::size_t> baseline_n;
  std::optional<std::uint64_t> baseline_seed;
};

int cmd_analyze(const fs::path& data_dir, const AnalyzeArgs& a) {
  const Inventory inventory = Inventory::load(data_dir);
  const Corpus corpus = load_corpus(a.corpus);
  const fs::path neutral_path = a.neutral.empty() ? a.sessions.parent_path() / "neutral.jsonl" : a.neutral;
  if (!fs::exists(a.sessions)) throw LoadError("sessions log '" + a.sessions.string() + "' not found");
  auto persona = load_session_log(a.sessions);
  std::vector<SessionRecord> neutral;
  if (fs::exists(neutral_path)) neutral = load_session_log(neutral_path);
  else std::cerr << "warning: no neutral log at " << neutral_path.string() << ", comparison rows will be empty\n";

  std::optional<report::TraitScoreMap> scores;
  if (!a.trait_scores.empty()) {
    scores.emplace();
    for (auto& row : load_trait_scores_csv(a.trait_scores)) (*scores)[row.participant_id] = row.scores;
  }
  std::optional<report::ReferenceFixture> reference;
  if (!a.reference.empty()) reference = report::ReferenceFixture::load(a.reference);

  report::AnalysisOptions options;
  options.baseline_sigma = a.baseline_sigma;
  options.baseline_n = a.baseline_n;
  options.baseline_seed = a.baseline_seed;
  const auto analysis =
      report::analyze(persona, neutral, corpus, inventory, scores, reference ? &*reference : nullptr, options);
  for (const auto& w : analysis.warnings) std::cerr << "warning: " << w << '\n';
  const auto files = report::write_report(analysis, a.out_dir, report::parse_output_format(a.format));
  std::cerr << fmt::format("wrote {} files to {}\n", files.size(), a.out_dir.string());
  return 0;
}

struct BaselineArgs {
  int rating = 0;
  double sigma = kDefaultBaselineSigma;
  std::size_t n = 336;
  std::uint64_t seed = 0;
  fs::path out;
};

int cmd_baseline(const BaselineArgs& a) {
  const auto b = build_neutral_baseline(a.rating, a.sigma, a.n, a.seed);
  std::string body = fmt::format("# rating={} sigma={} n={} seed={}\nsample\n", a.rating, a.sigma, a.n, a.seed);
  for (double v : b.samples) body += fmt::format("{}\n", v);
  if (a.out.empty()) std::cout << body;
  else write_text(a.out, body);
  return 0;
}

struct ValidateArgs {
  fs::path corpus;
  bool no_balance = false;
  std::size_t per_veracity = 12, per_lean = 12;
};

int cmd_validate_corpus(const ValidateArgs& a) {
  const Corpus corpus = load_corpus(a.corpus);
  const BalanceSpec spec = a.no_balance ? BalanceSpec::disabled() : BalanceSpec{true, a.per_veracity, a.per_lean};
  const auto report = validate_balance(corpus, spec);
  std::cerr << fmt::format("{}: {} headlines\n{}\n", a.corpus.string(), corpus.size(), report.describe());
  return report.pass ? 0 : 1;
}

struct SynthArgs {
  std::string inventory;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  fs::path out;
};

int cmd_synth_profiles(const fs::path& data_dir, const SynthArgs& a) {
  const Inventory inventory = Inventory::load(data_dir);
  const ItemBank& bank = inventory.bank(parse_inventory_kind(a.inventory));
  write_text(a.out, profiles_to_csv(synthesize_profiles(bank, a.count, a.seed), bank));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personality-conditioned headline rating experiments"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  std::string data_dir_opt;
  app.add_option("--data-dir", data_dir_opt, "Item banks, templates and fixtures (default: built-in data dir)");

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score inventory responses into domain means");
  s->add_option("--inventory", score.inventory, "BFI2 or BFI2S")->required();
  s->add_option("--responses", score.responses, "Responses CSV")->required();
  s->add_option("--out", score.out, "Trait scores CSV")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Rate every headline with every persona in the grid");
  r->add_option("--grid", run.grid, "Experiment grid JSON")->required();
  r->add_option("--profiles", run.profiles, "Participant responses CSV")->required();
  r->add_option("--corpus", run.corpus, "Headline corpus JSON")->required();
  r->add_option("--out-dir", run.out_dir, "Output directory")->required();
  r->add_option("--backend", run.backend, "Override the backend kind: synthetic or live");
  r->add_option("--seed", run.seed, "Override the synthetic seed of every backend");
  r->add_option("--run-id", run.run_id, "Run identifier (default: derived from the run content)");
  r->add_option("--workers", run.workers, "Concurrent rating workers")->check(CLI::PositiveNumber);
  r->add_option("--endpoint", run.endpoint, "Chat-completions URL for live backends");
  r->add_flag("--resume", run.resume, "Continue a partial run in --out-dir");
  r->add_flag("--trace", run.trace, "Log live requests and responses to stderr");
  r->add_option("--crash-after", run.crash_after, "Testing: abort after this many new records")->group("");

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "Build the comparison, correlation, regression and similarity reports");
  z->add_option("--sessions", an.sessions, "sessions.jsonl of one run")->required();
  z->add_option("--neutral", an.neutral, "neutral.jsonl (default: next to --sessions)");
  z->add_option("--corpus", an.corpus, "Headline corpus JSON")->required();
  z->add_option("--trait-scores", an.trait_scores, "Trait scores CSV (default: scored from the logged responses)");
  z->add_option("--reference-fixtures", an.reference, "Human reference statistics JSON");
  z->add_option("--out-dir", an.out_dir, "Report directory")->required();
  z->add_option("--format", an.format, "csv, md or both");
  z->add_option("--baseline-sigma", an.baseline_sigma, "Neutral baseline noise sd")->check(CLI::PositiveNumber);
  z->add_option("--baseline-n", an.baseline_n, "Neutral baseline size (default: persona sample size)");
  z->add_option("--baseline-seed", an.baseline_seed, "Neutral baseline seed (default: the run seed)");

  BaselineArgs bl;
  auto* b = app.add_subcommand("baseline", "Draw a neutral baseline sample");
  b->add_option("--rating", bl.rating, "Neutral rating 1..4")->required();
  b->add_option("--sigma", bl.sigma, "Noise sd");
  b->add_option("--n", bl.n, "Sample size");
  b->add_option("--seed", bl.seed, "Seed");
  b->add_option("--out", bl.out, "Output CSV (default: stdout)");

  ValidateArgs va;
  auto* v = app.add_subcommand("validate-corpus", "Check corpus schema and veracity/lean balance");
  v->add_option("--corpus", va.corpus, "Headline corpus JSON")->required();
  v->add_flag("--no-balance", va.no_balance, "Skip the balance requirement");
  v->add_option("--per-veracity", va.per_veracity, "Headlines expected per veracity class");
  v->add_option("--per-lean", va.per_lean, "Headlines expected per lean");

  SynthArgs sy;
  auto* g = app.add_subcommand("synth-profiles", "Generate seeded synthetic respondents");
  g->add_option("--inventory", sy.inventory, "BFI2 or BFI2S")->required();
  g->add_option("--count", sy.count, "Number of participants")->required();
  g->add_option("--seed", sy.seed, "Seed");
  g->add_option("--out", sy.out, "Responses CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const fs::path data_dir = data_dir_opt.empty() ? default_data_dir() : fs::path(data_dir_opt);
    if (s->parsed()) return cmd_score(data_dir, score);
    if (r->parsed()) return cmd_run(data_dir, run);
    if (z->parsed()) return cmd_analyze(data_dir, an);
    if (b->parsed()) return cmd_baseline(bl);
    if (v->parsed()) return cmd_validate_corpus(va);
    if (g->parsed()) return cmd_synth_profiles(data_dir, sy);
  } catch (const IoError& e) {
    std::cerr << "discern: error: " << e.what() << " (durable offset " << e.durable_offset() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "discern: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace discern::cli
