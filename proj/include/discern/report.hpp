#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "discern/corpus.hpp"
#include "discern/inventory.hpp"
#include "discern/metrics.hpp"
#include "discern/sessions.hpp"
#include "discern/stats/stats.hpp"

namespace discern::report {

inline constexpr double kAlpha = 0.05;

// Published human summary statistics shipped as a fixture.
struct ReferenceBeta {
  double beta = 0;
  std::string stars;
};

struct ReferenceFixture {
  std::string label;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
  std::size_t n = 0;
  stats::CorrelationVector nd_correlations;
  // [outcome ND, AR, AF][trait]
  std::array<std::array<ReferenceBeta, kTraitCount>, 3> regressions{};
  std::array<std::string, kTraitCount> af_directions;

  static ReferenceFixture from_json(const nlohmann::json& j, std::string_view source);
  static ReferenceFixture load(const std::filesystem::path& path);
};

// One grid cell as seen from the session log.
struct CellInfo {
  std::string cell_key;
  std::string model_name;
  double temperature = 0;
  ScaleFormat scale_format = ScaleFormat::Likert;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;

  // e.g. "gpt-4o / 0.2 / BFI2S (Likert)"
  std::string label() const;
  static CellInfo from_record(const SessionRecord& r);
};

struct HeadlineComparison {
  std::string headline_id;
  bool excluded = false;
  std::string reason;
  stats::TwoSampleTestResult ks;
  stats::TwoSampleTestResult mw;
  stats::EffectSize effect;
};

// KS, MW and Cohen's d for one headline. Samples that are all one value on
// both sides count as identical distributions (D = 0, p = 1, d = 0).
HeadlineComparison compare_headline(std::string headline_id, std::span<const double> persona,
                                    std::span<const double> baseline, double alpha = kAlpha);

struct ComparisonTableRow {
  CellInfo cell;
  std::size_t ks_sig_count = 0;
  std::size_t mw_sig_count = 0;
  std::array<std::size_t, stats::kEffectBinCount> bin_counts{};
  std::size_t n_compared = 0;
  std::vector<std::string> excluded;  // headlines without a usable baseline or persona sample
  std::vector<HeadlineComparison> headlines;
};

using SamplesByHeadline = std::map<std::string, std::vector<double>>;

// Headlines are visited in the given order; a headline missing from either
// map is listed as excluded and the row is still produced.
ComparisonTableRow build_comparison_row(const CellInfo& cell, const std::vector<std::string>& headline_ids,
                                        const SamplesByHeadline& persona, const SamplesByHeadline& baseline,
                                        double alpha = kAlpha);

struct TraitCell {
  bool defined = false;
  double value = 0;  // r or beta
  double p = 1;      // NaN when only the stars are known (reference betas)
  std::string stars;
  double standard_error = 0;  // regression only
  double t = 0;               // regression only
};

struct TraitTableRow {
  std::string setting;
  std::optional<CellInfo> cell;  // empty for the reference row
  stats::Outcome outcome = stats::Outcome::ND;
  std::size_t n = 0;
  std::array<TraitCell, kTraitCount> cells{};
  bool reference = false;
};

struct AgentData {
  DiscernmentSummary summary;
  TraitScores traits;
};

struct TableBuild {
  std::vector<TraitTableRow> rows;
  std::vector<std::string> warnings;
};

// Pearson r of each trait with ND, AR and AF per cell. Cells with fewer than
// three agents are left out with a warning; zero-variance columns print NA.
TableBuild build_correlation_table(const std::vector<std::pair<CellInfo, std::vector<AgentData>>>& cells,
                                   const ReferenceFixture* reference);

// Standardized OLS of ND, AR and AF on all five traits per cell.
TableBuild build_regression_table(const std::vector<std::pair<CellInfo, std::vector<AgentData>>>& cells,
                                  const ReferenceFixture* reference);

// AF correlation directions per (model, inventory, scale), pooled over
// temperatures: a trait is "pos"/"neg" when at least one temperature is
// significant, otherwise "ns".
struct DirectionRow {
  std::string model_name;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
  std::optional<ScaleFormat> scale_format;
  std::string label;
  std::array<std::string, kTraitCount> directions;
  bool reference = false;
};
std::vector<DirectionRow> build_af_directions(const std::vector<TraitTableRow>& correlation_rows,
                                              const ReferenceFixture* reference, double alpha = kAlpha);

struct SimilarityRow {
  std::string setting;
  std::optional<CellInfo> cell;
  double cos_all = 0;
  double cos_significant = 0;
  bool flagged = false;
  std::string flag;
};

// ND correlation vectors against the reference vector, over all traits and
// over the traits significant in the reference.
std::vector<SimilarityRow> build_similarity_data(
    const std::vector<std::pair<std::string, stats::CorrelationVector>>& configurations,
    const stats::CorrelationVector& reference, double alpha = kAlpha);

struct CellAnalysis {
  CellInfo cell;
  std::vector<AgentData> agents;  // sorted by participant_id
  std::size_t n_agents = 0;
  std::size_t n_excluded_agents = 0;  // empty veracity class
  std::size_t n_ineligible_agents = 0;  // rated fewer than half the headlines
};

struct AnalysisOptions {
  double baseline_sigma = 0.5;
  std::optional<std::size_t> baseline_n;  // default: persona sample size per headline
  std::optional<std::uint64_t> baseline_seed;  // default: the run seed
  double alpha = kAlpha;
};

struct Provenance {
  std::string tool_version;
  std::string run_id;
  std::uint64_t seed = 0;
  std::string template_hash;
  double baseline_sigma = 0;
  std::string baseline_n;
};

struct Analysis {
  Provenance provenance;
  std::vector<CellAnalysis> cells;
  std::vector<ComparisonTableRow> comparison;
  std::vector<TraitTableRow> correlations;
  std::vector<TraitTableRow> regressions;
  std::vector<DirectionRow> af_directions;
  std::vector<SimilarityRow> similarity;
  std::vector<std::string> warnings;
};

// Trait scores keyed by participant. When `supplied` is empty the scores are
// recomputed from the responses stored with the records.
using TraitScoreMap = std::map<std::string, TraitScores>;

// Throws ValidationError if the records come from more than one run.
Analysis analyze(const std::vector<SessionRecord>& persona, const std::vector<SessionRecord>& neutral,
                 const Corpus& corpus, const Inventory& inventory, const std::optional<TraitScoreMap>& supplied,
                 const ReferenceFixture* reference, const AnalysisOptions& options);

enum class OutputFormat { Csv, Markdown, Both };
OutputFormat parse_output_format(std::string_view s);

// Writes comparison, correlations, regressions and similarity (.csv/.md),
// per-cell summaries and manifest.json. Returns the written paths relative to
// out_dir, in write order.
std::vector<std::string> write_report(const Analysis& analysis, const std::filesystem::path& out_dir,
                                      OutputFormat format = OutputFormat::Both);

// Aligned Markdown table.
std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace discern::report
