#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "discern/common.hpp"
#include "discern/inventory.hpp"

namespace discern {

struct ParticipantProfile {
  std::string participant_id;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
  std::vector<ItemResponse> responses;
  std::map<std::string, std::string> demographics;
};

struct AgentSpec {
  std::string participant_id;
  ScaleFormat scale_format = ScaleFormat::Likert;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
};

// Persona template with {persona_block} and {task_block} placeholders plus the
// task instructions. `hash` identifies the exact bytes of both and is recorded
// with every session.
class PromptTemplate {
 public:
  PromptTemplate(std::string persona_template, std::string task_block);
  static PromptTemplate load(const std::filesystem::path& data_dir);

  const std::string& persona_template() const { return persona_; }
  const std::string& task_block() const { return task_; }
  const std::string& hash() const { return hash_; }

 private:
  std::string persona_;
  std::string task_;
  std::string hash_;
};

std::string build_persona_prompt(const ParticipantProfile& profile, const AgentSpec& spec,
                                 const Inventory& inventory, const PromptTemplate& tmpl);

// Task-only prompt: no preamble, no inventory content.
std::string build_neutral_prompt(const PromptTemplate& tmpl);

// Reads the answer lines back out of a persona prompt. Returns nullopt when the
// prompt carries no complete response set (e.g. the neutral prompt).
struct RecoveredPersona {
  InventoryKind inventory_kind;
  ScaleFormat scale_format;
  std::vector<ItemResponse> responses;
};
std::optional<RecoveredPersona> recover_persona(std::string_view prompt, const Inventory& inventory);

// Participant responses CSV: participant_id column plus one column per item_id.
// Any other column is kept as demographics.
std::vector<ParticipantProfile> load_profiles_csv(const std::filesystem::path& path, const ItemBank& bank);
std::vector<ParticipantProfile> parse_profiles_csv(std::string_view text, std::string_view source,
                                                   const ItemBank& bank);
std::string profiles_to_csv(const std::vector<ParticipantProfile>& profiles, const ItemBank& bank);

struct ScoredParticipant {
  std::string participant_id;
  TraitScores scores;
};
std::string trait_scores_to_csv(const std::vector<ScoredParticipant>& rows);
std::vector<ScoredParticipant> load_trait_scores_csv(const std::filesystem::path& path);

// Seeded synthetic respondents: each participant gets a latent level per domain
// and item answers scatter around it. Used for offline fixtures only.
std::vector<ParticipantProfile> synthesize_profiles(const ItemBank& bank, std::size_t count, std::uint64_t seed);

}  // namespace discern
