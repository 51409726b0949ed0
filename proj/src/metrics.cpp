#include "discern/metrics.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "discern/csv.hpp"
#include "discern/error.hpp"

namespace discern {

DiscernmentSummary summarize_ratings(std::string participant_id, std::span<const RatedHeadline> rated) {
  DiscernmentSummary s;
  s.participant_id = std::move(participant_id);
  double sum_true = 0, sum_false = 0;
  for (const auto& r : rated) {
    if (r.veracity == Veracity::True) {
      sum_true += r.rating;
      ++s.n_true_rated;
    } else {
      sum_false += r.rating;
      ++s.n_false_rated;
    }
  }
  if (s.n_true_rated == 0 || s.n_false_rated == 0) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    s.ar = s.n_true_rated ? sum_true / static_cast<double>(s.n_true_rated) : nan;
    s.af = s.n_false_rated ? sum_false / static_cast<double>(s.n_false_rated) : nan;
    s.nd = nan;
    s.excluded = true;
    return s;
  }
  s.ar = sum_true / static_cast<double>(s.n_true_rated);
  s.af = sum_false / static_cast<double>(s.n_false_rated);
  s.nd = s.ar - s.af;
  return s;
}

namespace {

const std::string& single_participant(std::span<const SessionRecord> records) {
  static const std::string empty;
  if (records.empty()) return empty;
  const std::string& id = records.front().participant_id;
  for (const auto& r : records) {
    if (r.participant_id != id)
      throw ValidationError("records mix agents '" + id + "' and '" + r.participant_id + "'");
    if (r.cell_key() != records.front().cell_key())
      throw ValidationError("records for '" + id + "' mix grid cells");
  }
  return id;
}

}  // namespace

std::vector<std::optional<double>> headline_means(std::span<const SessionRecord> records, const Corpus& corpus) {
  const auto& headlines = corpus.headlines();
  // Integer sums keep the mean independent of record order.
  std::vector<long> sums(headlines.size(), 0);
  std::vector<long> counts(headlines.size(), 0);
  for (const auto& r : records) {
    const Headline* h = corpus.find(r.headline_id);
    if (!h) throw ValidationError("record refers to unknown headline '" + r.headline_id + "'");
    if (!r.rating || r.parse_status != ParseStatus::Ok) continue;
    const auto idx = static_cast<std::size_t>(h - headlines.data());
    sums[idx] += *r.rating;
    ++counts[idx];
  }
  std::vector<std::optional<double>> out(headlines.size());
  for (std::size_t i = 0; i < headlines.size(); ++i)
    if (counts[i]) out[i] = static_cast<double>(sums[i]) / static_cast<double>(counts[i]);
  return out;
}

DiscernmentSummary compute_summary(std::span<const SessionRecord> records, const Corpus& corpus) {
  const std::string& id = single_participant(records);
  const auto means = headline_means(records, corpus);
  std::vector<RatedHeadline> rated;
  rated.reserve(means.size());
  for (std::size_t i = 0; i < means.size(); ++i)
    if (means[i]) rated.push_back({corpus.headlines()[i].veracity, *means[i]});
  return summarize_ratings(id, rated);
}

std::optional<double> belief_in_misinformation(std::span<const SessionRecord> records, const Corpus& corpus) {
  const auto s = compute_summary(records, corpus);
  if (s.n_false_rated == 0) return std::nullopt;
  return s.af;
}

bool eligible_for_correlation(const DiscernmentSummary& s, std::size_t corpus_size) {
  return !s.excluded && 2 * (s.n_true_rated + s.n_false_rated) >= corpus_size;
}

std::map<std::string, AgentRecords> group_persona_records(std::span<const SessionRecord> records) {
  std::map<std::string, AgentRecords> out;
  for (const auto& r : records) {
    if (r.condition != Condition::Persona) continue;
    out[r.cell_key()][r.participant_id].push_back(r);
  }
  return out;
}

std::string summaries_to_csv(std::span<const DiscernmentSummary> rows) {
  std::string out = "participant_id,ar,af,nd,n_true_rated,n_false_rated\n";
  auto num = [](double v) { return std::isnan(v) ? std::string("NA") : fmt::format("{}", v); };
  for (const auto& s : rows)
    out += fmt::format("{},{},{},{},{},{}\n", csv::escape(s.participant_id), num(s.ar), num(s.af), num(s.nd), s.n_true_rated,
                       s.n_false_rated);
  return out;
}

}  // namespace discern
