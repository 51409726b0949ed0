#include "discern/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <cstdlib>
#include <ctime>
#include <map>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>

#include "discern/error.hpp"
#include "discern/rng.hpp"

namespace discern {

std::string_view to_string(ProfileSource s) {
  return s == ProfileSource::CalvilloStyle ? "calvillo_style" : "huang_style";
}

ProfileSource parse_profile_source(std::string_view s) {
  if (s == "calvillo_style") return ProfileSource::CalvilloStyle;
  if (s == "huang_style") return ProfileSource::HuangStyle;
  throw ConfigError("unknown profile_source '" + std::string(s) + "' (expected calvillo_style or huang_style)");
}

std::vector<GridCell> ExperimentGrid::cells() const {
  std::vector<GridCell> out;
  for (const auto& backend : backends)
    for (auto format : scale_formats) out.push_back({backend, format, inventory_kind});
  return out;
}

void ExperimentGrid::validate() const {
  if (scale_formats.empty()) throw ConfigError("grid: scale_formats is empty");
  if (backends.empty()) throw ConfigError("grid: backends is empty");
  if (repeats < 1) throw ConfigError("grid: repeats must be >= 1");
  const auto expected = profile_source == ProfileSource::CalvilloStyle ? InventoryKind::Bfi2S : InventoryKind::Bfi2;
  if (inventory_kind != expected)
    throw ConfigError("grid: profile_source " + std::string(to_string(profile_source)) + " uses " +
                      std::string(to_string(expected)) + ", not " + std::string(to_string(inventory_kind)));
  std::unordered_set<std::string> seen;
  for (const auto& b : backends)
    if (!seen.insert(b.cell_label()).second) throw ConfigError("grid: duplicate backend " + b.cell_label());
  for (std::size_t i = 0; i < scale_formats.size(); ++i)
    for (std::size_t j = i + 1; j < scale_formats.size(); ++j)
      if (scale_formats[i] == scale_formats[j]) throw ConfigError("grid: duplicate scale format");
}

nlohmann::ordered_json ExperimentGrid::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "discern.grid/1";
  j["profile_source"] = to_string(profile_source);
  j["inventory_kind"] = to_string(inventory_kind);
  j["scale_formats"] = nlohmann::ordered_json::array();
  for (auto f : scale_formats) j["scale_formats"].push_back(to_string(f));
  j["corpus_name"] = corpus_name;
  j["repeats"] = repeats;
  j["backends"] = nlohmann::ordered_json::array();
  for (const auto& b : backends) j["backends"].push_back(b.to_json());
  return j;
}

ExperimentGrid ExperimentGrid::from_json(const nlohmann::json& j) {
  ExperimentGrid g;
  try {
    if (j.at("schema").get<std::string>() != "discern.grid/1")
      throw ConfigError("grid: unsupported schema " + j.at("schema").dump());
    g.profile_source = parse_profile_source(j.at("profile_source").get<std::string>());
    g.inventory_kind = j.contains("inventory_kind")
                           ? parse_inventory_kind(j.at("inventory_kind").get<std::string>())
                           : (g.profile_source == ProfileSource::CalvilloStyle ? InventoryKind::Bfi2S : InventoryKind::Bfi2);
    for (const auto& f : j.at("scale_formats")) g.scale_formats.push_back(parse_scale_format(f.get<std::string>()));
    g.corpus_name = j.value("corpus_name", std::string());
    g.repeats = j.value("repeats", 1);
    for (const auto& b : j.at("backends")) {
      nlohmann::json merged = b;
      if (!merged.contains("synthetic") && j.contains("synthetic")) merged["synthetic"] = j.at("synthetic");
      g.backends.push_back(BackendConfig::from_json(merged));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  g.validate();
  return g;
}

ExperimentGrid ExperimentGrid::load(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw LoadError(path.string() + ": not valid JSON");
  return from_json(j);
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "discern.run_manifest/1";
  j["run_id"] = run_id;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["prompt_template_hash"] = template_hash;
  j["corpus_hash"] = corpus_hash;
  j["profiles_hash"] = profiles_hash;
  j["session_schema"] = kSessionSchema;
  j["grid"] = grid.to_json();
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.template_hash = j.at("prompt_template_hash").get<std::string>();
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    m.profiles_hash = j.at("profiles_hash").get<std::string>();
    m.grid = ExperimentGrid::from_json(j.at("grid"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("run manifest: ") + e.what());
  }
  return m;
}

std::string RunManifest::content_hash() const {
  nlohmann::ordered_json j = to_json();
  j.erase("run_id");
  j.erase("tool_version");
  return sha256_hex(j.dump());
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Synthetic sessions carry a fixed logical timestamp so logs are reproducible.
constexpr std::string_view kLogicalTimestamp = "1970-01-01T00:00:00Z";

class AppendSink {
 public:
  AppendSink(const std::filesystem::path& path, std::uint64_t keep_bytes) : path_(path) {
    if (std::filesystem::exists(path)) {
      std::error_code ec;
      if (std::filesystem::file_size(path, ec) != keep_bytes) std::filesystem::resize_file(path, keep_bytes, ec);
      if (ec) throw IoError("cannot trim torn tail of '" + path.string() + "': " + ec.message(), keep_bytes);
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno), keep_bytes);
    offset_ = keep_bytes;
  }
  AppendSink(const AppendSink&) = delete;
  AppendSink& operator=(const AppendSink&) = delete;
  ~AppendSink() {
    if (fd_ >= 0) ::close(fd_);
  }

  void write(std::string_view bytes, bool sync) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("write to '" + path_.string() + "' failed: " + std::strerror(errno), offset_);
      }
      done += static_cast<std::size_t>(n);
    }
    if (sync && ::fsync(fd_) != 0)
      throw IoError("fsync of '" + path_.string() + "' failed: " + std::strerror(errno), offset_);
    offset_ += bytes.size();
  }

  void sync() {
    if (::fsync(fd_) != 0) throw IoError("fsync of '" + path_.string() + "' failed: " + std::strerror(errno), offset_);
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t offset_ = 0;
};

struct ExistingLog {
  std::unordered_set<std::string> keys;
  std::uint64_t valid_bytes = 0;
};

ExistingLog read_existing(const std::filesystem::path& path, const std::string& run_id) {
  ExistingLog out;
  auto scan = scan_session_log(path);
  out.valid_bytes = scan.valid_bytes;
  for (const auto& r : scan.records) {
    if (r.run_id != run_id)
      throw ConfigError("'" + path.string() + "' belongs to run '" + r.run_id + "', not '" + run_id + "'");
    out.keys.insert(r.session_key());
  }
  return out;
}

struct Task {
  std::size_t cell = 0;
  std::size_t profile = 0;
  std::size_t headline = 0;
  int repeat = 0;
};

SessionRecord rate_one(RatingBackend& backend, const std::string& prompt, const Headline& headline, int repeat,
                       SessionRecord base) {
  base.headline_id = headline.headline_id;
  base.headline_text = headline.text;
  base.veracity = headline.veracity;
  base.repeat = repeat;
  try {
    RatingResponse resp = backend.rate(RatingRequest{prompt, headline, repeat});
    base.rating = resp.rating;
    base.parse_status = resp.parse_status;
    base.raw_text = std::move(resp.raw_text);
  } catch (const BackendError& e) {
    base.parse_status = ParseStatus::Unparseable;
    base.raw_text = e.last_raw_text();
    base.error = e.what();
  } catch (const Error& e) {
    base.parse_status = ParseStatus::Unparseable;
    base.error = e.what();
  }
  base.timestamp = base.backend_kind == BackendKind::Synthetic ? std::string(kLogicalTimestamp) : utc_now();
  return base;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

RunSummary run_experiment(const ExperimentGrid& grid, const std::vector<ParticipantProfile>& profiles,
                          const Corpus& corpus, const Inventory& inventory, const PromptTemplate& tmpl,
                          const RunOptions& options, const BackendFactory& make) {
  grid.validate();
  if (options.run_id.empty()) throw ConfigError("run_id is empty");
  for (const auto& p : profiles) {
    if (p.inventory_kind != grid.inventory_kind)
      throw ConfigError("profile '" + p.participant_id + "' is " + std::string(to_string(p.inventory_kind)) +
                        " but the grid uses " + std::string(to_string(grid.inventory_kind)));
  }

  const auto cells = grid.cells();
  const ItemBank& bank = inventory.bank(grid.inventory_kind);
  RunSummary summary;
  summary.planned = profiles.size() * corpus.size() * cells.size() * static_cast<std::size_t>(grid.repeats);

  std::vector<std::unique_ptr<RatingBackend>> backends;
  for (const auto& b : grid.backends) backends.push_back(make(b));
  auto backend_for = [&](std::size_t cell) -> RatingBackend& {
    return *backends[cell / grid.scale_formats.size()];
  };
  std::size_t workers = std::max<std::size_t>(1, options.workers);
  for (const auto& b : grid.backends)
    if (b.backend_kind == BackendKind::Live) workers = std::min<std::size_t>(workers, b.max_in_flight);

  auto make_base = [&](const BackendConfig& cfg) {
    SessionRecord r;
    r.run_id = options.run_id;
    r.inventory_kind = grid.inventory_kind;
    r.backend_kind = cfg.backend_kind;
    r.model_name = cfg.model_name;
    r.temperature = cfg.temperature;
    r.seed = cfg.seed;
    r.prompt_template_hash = tmpl.hash();
    return r;
  };

  // Neutral agent: one rating per backend x headline.
  {
    const ExistingLog existing = read_existing(options.neutral_path, options.run_id);
    AppendSink sink(options.neutral_path, existing.valid_bytes);
    const std::string prompt = build_neutral_prompt(tmpl);
    std::string buffer;
    for (std::size_t b = 0; b < grid.backends.size(); ++b) {
      for (const auto& h : corpus.headlines()) {
        SessionRecord base = make_base(grid.backends[b]);
        base.condition = Condition::Neutral;
        base.participant_id = "neutral";
        base.headline_id = h.headline_id;
        if (existing.keys.contains(base.session_key())) continue;
        SessionRecord rec = rate_one(*backends[b], prompt, h, 0, std::move(base));
        buffer += rec.to_json_line();
        buffer.push_back('\n');
        ++summary.neutral_written;
      }
    }
    sink.write(buffer, true);
  }

  const ExistingLog existing = read_existing(options.sessions_path, options.run_id);
  AppendSink sink(options.sessions_path, existing.valid_bytes);

  std::map<ScaleFormat, std::vector<std::string>> prompts;
  for (auto format : grid.scale_formats) {
    auto& list = prompts[format];
    list.reserve(profiles.size());
    for (const auto& p : profiles)
      list.push_back(build_persona_prompt(p, AgentSpec{p.participant_id, format, grid.inventory_kind}, inventory, tmpl));
  }
  std::vector<std::string> encoded;
  encoded.reserve(profiles.size());
  for (const auto& p : profiles) encoded.push_back(encode_responses(p.responses, bank));

  auto base_for = [&](const Task& t) {
    const GridCell& cell = cells[t.cell];
    SessionRecord base = make_base(cell.backend);
    base.condition = Condition::Persona;
    base.participant_id = profiles[t.profile].participant_id;
    base.scale_format = cell.scale_format;
    base.responses = encoded[t.profile];
    base.headline_id = corpus.headlines()[t.headline].headline_id;
    base.repeat = t.repeat;
    return base;
  };

  std::vector<Task> pending;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t p = 0; p < profiles.size(); ++p)
      for (std::size_t h = 0; h < corpus.size(); ++h)
        for (int r = 0; r < grid.repeats; ++r) {
          Task t{c, p, h, r};
          if (existing.keys.contains(base_for(t).session_key())) {
            ++summary.skipped;
            continue;
          }
          pending.push_back(t);
        }

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  std::vector<SessionRecord> results;
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t count = std::min(batch, pending.size() - start);
    results.assign(count, SessionRecord{});
    parallel_for(count, workers, [&](std::size_t i) {
      const Task& t = pending[start + i];
      const GridCell& cell = cells[t.cell];
      results[i] = rate_one(backend_for(t.cell), prompts[cell.scale_format][t.profile], corpus.headlines()[t.headline],
                            t.repeat, base_for(t));
    });

    std::string buffer;
    for (std::size_t i = 0; i < count; ++i) {
      if (options.crash_after && summary.written == *options.crash_after) {
        sink.write(buffer, true);
        const std::string line = results[i].to_json_line();
        sink.write(std::string_view(line).substr(0, line.size() / 2), true);
        std::_Exit(86);
      }
      if (results[i].parse_status != ParseStatus::Ok) ++summary.failed;
      buffer += results[i].to_json_line();
      buffer.push_back('\n');
      ++summary.written;
    }
    sink.write(buffer, options.fsync_batches);
  }
  sink.sync();
  summary.durable_offset = sink.offset();
  return summary;
}

NeutralBaseline build_neutral_baseline(int rating, double sigma, std::size_t n, std::uint64_t seed,
                                       std::string headline_id) {
  if (rating < 1 || rating > 4) throw ValidationError("neutral baseline: rating must be in 1..4");
  if (!(sigma > 0)) throw ValidationError("neutral baseline: sigma must be > 0");
  if (n < 2) throw ValidationError("neutral baseline: n must be >= 2");
  NeutralBaseline out{std::move(headline_id), rating, sigma, n, {}};
  rng::Xoshiro256 gen(seed);
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.samples.push_back(gen.normal(rating, sigma));
  return out;
}

}  // namespace discern
