#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "discern/common.hpp"

namespace discern {

struct InventoryItem {
  int item_id = 0;
  std::string text;
  Trait domain = Trait::E;
  std::string facet;
  bool reverse_keyed = false;
  InventoryKind inventory_kind = InventoryKind::Bfi2S;
};

struct ItemResponse {
  int item_id = 0;
  int value = 0;  // 1..5

  friend bool operator==(const ItemResponse&, const ItemResponse&) = default;
};

// Domain means on the 1..5 response scale.
struct TraitScores {
  double e = 0, a = 0, c = 0, n = 0, o = 0;

  double operator[](Trait t) const;
  double& operator[](Trait t);
  friend bool operator==(const TraitScores&, const TraitScores&) = default;
};

// One inventory (BFI-2 or BFI-2-S) with its scoring key. Immutable after load.
class ItemBank {
 public:
  static ItemBank from_json(const nlohmann::json& doc, std::string_view source);
  static ItemBank load(const std::filesystem::path& path);

  InventoryKind kind() const { return kind_; }
  std::span<const InventoryItem> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const InventoryItem* find(int item_id) const;
  std::size_t index_of(int item_id) const;

 private:
  InventoryKind kind_ = InventoryKind::Bfi2S;
  std::vector<InventoryItem> items_;
  std::unordered_map<int, std::size_t> by_id_;
};

// Option wording for both response formats, indexed by rank 1..5.
struct ScaleLabels {
  std::array<std::string, 5> likert;
  std::array<std::string, 5> expanded;

  static ScaleLabels from_json(const nlohmann::json& doc, std::string_view source);
  static ScaleLabels load(const std::filesystem::path& path);
  const std::string& label(ScaleFormat format, int rank) const;
};

// Both banks plus the label table, loaded from a data directory.
class Inventory {
 public:
  static Inventory load(const std::filesystem::path& data_dir);

  const ItemBank& bank(InventoryKind kind) const;
  const ScaleLabels& labels() const { return labels_; }

 private:
  Inventory(ItemBank bfi2, ItemBank bfi2s, ScaleLabels labels)
      : bfi2_(std::move(bfi2)), bfi2s_(std::move(bfi2s)), labels_(std::move(labels)) {}

  ItemBank bfi2_;
  ItemBank bfi2s_;
  ScaleLabels labels_;
};

int reverse_key(int value);

// Per-domain mean after reverse-keying. Throws ValidationError naming any
// missing, duplicated, unknown or out-of-range item ids.
TraitScores score_inventory(std::span<const ItemResponse> responses, const ItemBank& bank);

// Throws unless `responses` covers every item of `bank` exactly once.
void validate_responses(std::span<const ItemResponse> responses, const ItemBank& bank);

// Rendered answer lines look like
//   Tends to be quiet. -> 2 (disagree a little)
//   Tends to be quiet. -> moderately inaccurate description for me
inline constexpr std::string_view kAnswerSeparator = " -> ";

std::string render_likert(const InventoryItem& item, int value, const ScaleLabels& labels);
std::string render_expanded(const InventoryItem& item, int value, const ScaleLabels& labels);
std::string render_item(const InventoryItem& item, int value, ScaleFormat format, const ScaleLabels& labels);

// BFI-2-S responses rendered in the Expanded format, one statement per item
// in bank order. The Likert value maps to the Expanded label of equal rank.
std::vector<std::string> convert_s_to_expanded(std::span<const ItemResponse> responses, const ItemBank& bfi2s,
                                               const ScaleLabels& labels);

struct ParsedAnswer {
  std::string text;
  int rank = 0;
  ScaleFormat format = ScaleFormat::Likert;
};

// Inverse of render_item. Returns nullopt for lines that are not answers.
std::optional<ParsedAnswer> parse_answer_line(std::string_view line, const ScaleLabels& labels);

}  // namespace discern
