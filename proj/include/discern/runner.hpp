#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "discern/backend.hpp"
#include "discern/corpus.hpp"
#include "discern/inventory.hpp"
#include "discern/persona.hpp"
#include "discern/sessions.hpp"

namespace discern {

enum class ProfileSource { CalvilloStyle, HuangStyle };
std::string_view to_string(ProfileSource s);
ProfileSource parse_profile_source(std::string_view s);

struct GridCell {
  BackendConfig backend;
  ScaleFormat scale_format = ScaleFormat::Likert;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
};

struct ExperimentGrid {
  ProfileSource profile_source = ProfileSource::CalvilloStyle;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
  std::vector<ScaleFormat> scale_formats;
  std::vector<BackendConfig> backends;
  std::string corpus_name;
  int repeats = 1;

  // Backend-major, then scale format.
  std::vector<GridCell> cells() const;
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static ExperimentGrid from_json(const nlohmann::json& j);
  static ExperimentGrid load(const std::filesystem::path& path);
};

struct RunManifest {
  std::string run_id;
  ExperimentGrid grid;
  std::uint64_t seed = 0;
  std::string template_hash;
  std::string corpus_hash;
  std::string profiles_hash;
  std::string tool_version{kToolVersion};

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  // Hash over everything that determines the session stream.
  std::string content_hash() const;
};

using BackendFactory = std::function<std::unique_ptr<RatingBackend>(const BackendConfig&)>;

struct RunOptions {
  std::string run_id;
  std::filesystem::path sessions_path;
  std::filesystem::path neutral_path;
  std::size_t workers = 1;        // upper bound; live backends are also capped by max_in_flight
  std::size_t batch_size = 512;   // records flushed per write
  bool fsync_batches = false;
  // Test hook: after this many new persona records are durable, write half of
  // the next line and terminate the process.
  std::optional<std::size_t> crash_after;
};

struct RunSummary {
  std::size_t planned = 0;       // persona sessions in the grid
  std::size_t skipped = 0;       // already present in the log
  std::size_t written = 0;
  std::size_t failed = 0;        // recorded with an error / unparseable
  std::size_t neutral_written = 0;
  std::uint64_t durable_offset = 0;
};

// Rates every profile x headline x grid cell x repeat and the neutral agent
// once per backend x headline, appending to the logs in a fixed order.
// Sessions already present in the logs are skipped; a torn final line is cut.
RunSummary run_experiment(const ExperimentGrid& grid, const std::vector<ParticipantProfile>& profiles,
                          const Corpus& corpus, const Inventory& inventory, const PromptTemplate& tmpl,
                          const RunOptions& options, const BackendFactory& make);

struct NeutralBaseline {
  std::string headline_id;
  int base_rating = 0;
  double sigma = 0;
  std::size_t n = 0;
  std::vector<double> samples;
};

inline constexpr double kDefaultBaselineSigma = 0.5;

// n draws of base_rating + N(0, sigma^2) from a pinned generator.
NeutralBaseline build_neutral_baseline(int rating, double sigma, std::size_t n, std::uint64_t seed,
                                       std::string headline_id = {});

}  // namespace discern
