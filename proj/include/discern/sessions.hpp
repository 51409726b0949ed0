#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discern/backend.hpp"
#include "discern/common.hpp"
#include "discern/corpus.hpp"
#include "discern/inventory.hpp"
#include "discern/persona.hpp"

namespace discern {

inline constexpr std::string_view kSessionSchema = "discern.session/1";

enum class Condition { Persona, Neutral };
std::string_view to_string(Condition c);

// One rating of one headline by one agent in one grid cell. Carries everything
// needed to rebuild the exact request (see regenerate_request).
struct SessionRecord {
  std::string run_id;
  Condition condition = Condition::Persona;
  std::string participant_id;           // "neutral" for the unconditioned agent
  std::string headline_id;
  std::string headline_text;
  Veracity veracity = Veracity::True;
  int repeat = 0;
  std::optional<int> rating;
  ParseStatus parse_status = ParseStatus::Unparseable;
  std::string raw_text;
  std::string error;                    // backend/transport error, empty when none
  std::optional<ScaleFormat> scale_format;  // empty for neutral records
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
  std::string responses;                // item values in bank order, comma separated
  BackendKind backend_kind = BackendKind::Synthetic;
  std::string model_name;
  double temperature = 0;
  std::uint64_t seed = 0;
  std::string prompt_template_hash;
  std::string timestamp;

  std::string to_json_line() const;  // no trailing newline
  static SessionRecord from_json_line(std::string_view line);

  // Identifies a session within a run: cell, agent, headline, repeat.
  std::string session_key() const;
  // "model|temperature|format|inventory", shared by every agent in a grid cell.
  std::string cell_key() const;
};

// Rebuilds the chat-completions request body the record was produced with.
std::string regenerate_request(const SessionRecord& record, const Inventory& inventory, const PromptTemplate& tmpl,
                               int retry_limit = 0);

std::string encode_responses(const std::vector<ItemResponse>& responses, const ItemBank& bank);
std::vector<ItemResponse> decode_responses(std::string_view encoded, const ItemBank& bank);

struct SessionLogScan {
  std::vector<SessionRecord> records;
  std::uint64_t valid_bytes = 0;   // length of the prefix made of complete, parseable lines
  bool torn_tail = false;          // trailing bytes after valid_bytes
};

// Reads a JSONL log. A damaged final line is reported as a torn tail; damage
// anywhere else is a LoadError.
SessionLogScan scan_session_log(const std::filesystem::path& path);
std::vector<SessionRecord> load_session_log(const std::filesystem::path& path);

}  // namespace discern
