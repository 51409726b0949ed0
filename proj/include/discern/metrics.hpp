#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discern/corpus.hpp"
#include "discern/sessions.hpp"

namespace discern {

// Per-agent perceived-accuracy aggregates on the 4-point scale.
struct DiscernmentSummary {
  std::string participant_id;
  double ar = 0;  // mean rating of true headlines
  double af = 0;  // mean rating of false headlines
  double nd = 0;  // ar - af
  std::size_t n_true_rated = 0;
  std::size_t n_false_rated = 0;
  // Set when a veracity class has no parsed rating; its mean and nd are NaN then.
  bool excluded = false;
};

struct RatedHeadline {
  Veracity veracity = Veracity::True;
  double rating = 0;
};

// AR, AF and ND over already-aggregated headline ratings, summed in input order.
DiscernmentSummary summarize_ratings(std::string participant_id, std::span<const RatedHeadline> rated);

// Records of one agent. Repeats of a headline are averaged first; unparsed
// ratings are dropped pairwise. The result does not depend on record order.
// Throws ValidationError for records of several agents or unknown headlines.
DiscernmentSummary compute_summary(std::span<const SessionRecord> records, const Corpus& corpus);

// The AF component alone; nullopt when no false headline was rated.
std::optional<double> belief_in_misinformation(std::span<const SessionRecord> records, const Corpus& corpus);

// Per-headline mean over parsed repeats for one agent, in corpus order;
// nullopt where nothing parsed.
std::vector<std::optional<double>> headline_means(std::span<const SessionRecord> records, const Corpus& corpus);

// Agents entering correlations and regressions: not excluded and at least
// half of the corpus rated.
bool eligible_for_correlation(const DiscernmentSummary& s, std::size_t corpus_size);

// Persona records grouped by cell key, then participant, both sorted.
using AgentRecords = std::map<std::string, std::vector<SessionRecord>>;
std::map<std::string, AgentRecords> group_persona_records(std::span<const SessionRecord> records);

// participant_id,ar,af,nd,n_true_rated,n_false_rated
std::string summaries_to_csv(std::span<const DiscernmentSummary> rows);

}  // namespace discern
