#include "discern/inventory.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "discern/error.hpp"

namespace discern {

namespace {

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < ids.size(); ++i) ss << (i ? ", " : "") << ids[i];
  return ss.str();
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key))
    throw LoadError(std::string(where) + ": missing field '" + key + "'");
  return obj.at(key);
}

void check_range(int value) {
  if (value < 1 || value > 5)
    throw ValidationError("response value " + std::to_string(value) + " outside 1..5");
}

}  // namespace

double TraitScores::operator[](Trait t) const {
  switch (t) {
    case Trait::E: return e;
    case Trait::A: return a;
    case Trait::C: return c;
    case Trait::N: return n;
    case Trait::O: return o;
  }
  return 0;
}

double& TraitScores::operator[](Trait t) {
  switch (t) {
    case Trait::E: return e;
    case Trait::A: return a;
    case Trait::C: return c;
    case Trait::N: return n;
    case Trait::O: break;
  }
  return o;
}

ItemBank ItemBank::from_json(const nlohmann::json& doc, std::string_view source) {
  const std::string where(source);
  if (!doc.is_object()) throw LoadError(where + ": inventory file must be a JSON object");
  if (require(doc, "schema", where) != "discern.inventory/1")
    throw LoadError(where + ": unsupported schema " + doc.at("schema").dump());

  ItemBank bank;
  try {
    bank.kind_ = parse_inventory_kind(require(doc, "inventory_kind", where).get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(where + ": " + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(where + ": " + e.what());
  }

  const auto& items = require(doc, "items", where);
  if (!items.is_array()) throw LoadError(where + ": 'items' must be an array");

  std::array<int, 5> per_domain{};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string at = where + ": items[" + std::to_string(i) + "]";
    const auto& row = items[i];
    InventoryItem item;
    try {
      item.item_id = require(row, "item_id", at).get<int>();
      item.text = require(row, "text", at).get<std::string>();
      item.domain = parse_trait(require(row, "domain", at).get<std::string>());
      item.facet = require(row, "facet", at).get<std::string>();
      item.reverse_keyed = require(row, "reverse_keyed", at).get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(at + ": " + e.what());
    } catch (const ValidationError& e) {
      throw LoadError(at + ": " + e.what());
    }
    item.inventory_kind = bank.kind_;
    if (item.item_id <= 0) throw LoadError(at + ": item_id must be positive");
    if (item.text.empty()) throw LoadError(at + ": empty item text");
    if (item.text.find(kAnswerSeparator) != std::string::npos)
      throw LoadError(at + ": item text may not contain '->'");
    if (!bank.by_id_.emplace(item.item_id, bank.items_.size()).second)
      throw LoadError(at + ": duplicate item_id " + std::to_string(item.item_id));
    ++per_domain[static_cast<std::size_t>(item.domain)];
    bank.items_.push_back(std::move(item));
  }

  const int expected = bank.kind_ == InventoryKind::Bfi2 ? 12 : 6;
  for (auto t : kTraits) {
    if (per_domain[static_cast<std::size_t>(t)] != expected)
      throw LoadError(where + ": domain " + std::string(to_string(t)) + " has " +
                      std::to_string(per_domain[static_cast<std::size_t>(t)]) + " items, expected " +
                      std::to_string(expected));
  }
  return bank;
}

ItemBank ItemBank::load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return from_json(doc, path.string());
}

const InventoryItem* ItemBank::find(int item_id) const {
  auto it = by_id_.find(item_id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

std::size_t ItemBank::index_of(int item_id) const {
  auto it = by_id_.find(item_id);
  if (it == by_id_.end()) throw ValidationError("unknown item_id " + std::to_string(item_id));
  return it->second;
}

ScaleLabels ScaleLabels::from_json(const nlohmann::json& doc, std::string_view source) {
  const std::string where(source);
  if (require(doc, "schema", where) != "discern.scale_labels/1")
    throw LoadError(where + ": unsupported schema " + doc.at("schema").dump());
  ScaleLabels labels;
  auto fill = [&](const char* key, std::array<std::string, 5>& out) {
    const auto& arr = require(doc, key, where);
    if (!arr.is_array() || arr.size() != 5)
      throw LoadError(where + ": '" + key + "' must list exactly five labels");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < 5; ++i) {
      if (!arr[i].is_string() || arr[i].get<std::string>().empty())
        throw LoadError(where + ": '" + key + "'[" + std::to_string(i) + "] must be a non-empty string");
      out[i] = arr[i].get<std::string>();
      if (!seen.insert(out[i]).second) throw LoadError(where + ": duplicate label '" + out[i] + "'");
    }
  };
  fill("likert", labels.likert);
  fill("expanded", labels.expanded);
  return labels;
}

ScaleLabels ScaleLabels::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_text_file(path)), path.string());
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

const std::string& ScaleLabels::label(ScaleFormat format, int rank) const {
  check_range(rank);
  const auto& table = format == ScaleFormat::Likert ? likert : expanded;
  return table[static_cast<std::size_t>(rank - 1)];
}

Inventory Inventory::load(const std::filesystem::path& data_dir) {
  auto bfi2 = ItemBank::load(data_dir / "inventory" / "bfi2.json");
  auto bfi2s = ItemBank::load(data_dir / "inventory" / "bfi2s.json");
  if (bfi2.kind() != InventoryKind::Bfi2 || bfi2s.kind() != InventoryKind::Bfi2S)
    throw LoadError("inventory files under " + data_dir.string() + " declare the wrong inventory_kind");
  auto labels = ScaleLabels::load(data_dir / "inventory" / "scale_labels.json");
  return Inventory(std::move(bfi2), std::move(bfi2s), std::move(labels));
}

const ItemBank& Inventory::bank(InventoryKind kind) const {
  return kind == InventoryKind::Bfi2 ? bfi2_ : bfi2s_;
}

int reverse_key(int value) {
  check_range(value);
  return 6 - value;
}

void validate_responses(std::span<const ItemResponse> responses, const ItemBank& bank) {
  std::vector<int> unknown, duplicate, bad_value;
  std::vector<bool> seen(bank.size(), false);
  for (const auto& r : responses) {
    const InventoryItem* item = bank.find(r.item_id);
    if (!item) {
      unknown.push_back(r.item_id);
      continue;
    }
    const std::size_t idx = bank.index_of(r.item_id);
    if (seen[idx]) duplicate.push_back(r.item_id);
    seen[idx] = true;
    if (r.value < 1 || r.value > 5) bad_value.push_back(r.item_id);
  }
  std::vector<int> missing;
  for (std::size_t i = 0; i < bank.size(); ++i)
    if (!seen[i]) missing.push_back(bank.items()[i].item_id);

  std::string msg;
  auto add = [&](const char* what, std::vector<int>& ids) {
    if (ids.empty()) return;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (!msg.empty()) msg += "; ";
    msg += std::string(what) + " item ids: " + join_ids(ids);
  };
  add("unknown", unknown);
  add("duplicate", duplicate);
  add("out-of-range value at", bad_value);
  add("missing", missing);
  if (!msg.empty())
    throw ValidationError(std::string(to_string(bank.kind())) + " response set invalid: " + msg);
}

TraitScores score_inventory(std::span<const ItemResponse> responses, const ItemBank& bank) {
  validate_responses(responses, bank);
  std::array<double, 5> sum{};
  std::array<int, 5> count{};
  for (const auto& r : responses) {
    const InventoryItem& item = *bank.find(r.item_id);
    const auto d = static_cast<std::size_t>(item.domain);
    sum[d] += item.reverse_keyed ? reverse_key(r.value) : r.value;
    ++count[d];
  }
  TraitScores scores;
  for (auto t : kTraits) {
    const auto d = static_cast<std::size_t>(t);
    scores[t] = sum[d] / count[d];
  }
  return scores;
}

std::string render_likert(const InventoryItem& item, int value, const ScaleLabels& labels) {
  return item.text + std::string(kAnswerSeparator) + std::to_string(value) + " (" +
         labels.label(ScaleFormat::Likert, value) + ")";
}

std::string render_expanded(const InventoryItem& item, int value, const ScaleLabels& labels) {
  return item.text + std::string(kAnswerSeparator) + labels.label(ScaleFormat::Expanded, value);
}

std::string render_item(const InventoryItem& item, int value, ScaleFormat format, const ScaleLabels& labels) {
  return format == ScaleFormat::Likert ? render_likert(item, value, labels) : render_expanded(item, value, labels);
}

std::vector<std::string> convert_s_to_expanded(std::span<const ItemResponse> responses, const ItemBank& bfi2s,
                                               const ScaleLabels& labels) {
  if (bfi2s.kind() != InventoryKind::Bfi2S)
    throw ValidationError("convert_s_to_expanded requires the BFI2S bank");
  validate_responses(responses, bfi2s);
  std::vector<int> value_by_index(bfi2s.size());
  for (const auto& r : responses) value_by_index[bfi2s.index_of(r.item_id)] = r.value;
  std::vector<std::string> out;
  out.reserve(bfi2s.size());
  for (std::size_t i = 0; i < bfi2s.size(); ++i)
    out.push_back(render_expanded(bfi2s.items()[i], value_by_index[i], labels));
  return out;
}

std::optional<ParsedAnswer> parse_answer_line(std::string_view line, const ScaleLabels& labels) {
  const auto sep = line.rfind(kAnswerSeparator);
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  ParsedAnswer out;
  out.text = std::string(line.substr(0, sep));
  const std::string_view answer = line.substr(sep + kAnswerSeparator.size());

  for (int rank = 1; rank <= 5; ++rank) {
    if (answer == labels.expanded[static_cast<std::size_t>(rank - 1)]) {
      out.rank = rank;
      out.format = ScaleFormat::Expanded;
      return out;
    }
    const std::string likert =
        std::to_string(rank) + " (" + labels.likert[static_cast<std::size_t>(rank - 1)] + ")";
    if (answer == likert) {
      out.rank = rank;
      out.format = ScaleFormat::Likert;
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace discern
