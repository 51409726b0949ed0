#include "discern/persona.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "discern/csv.hpp"
#include "discern/error.hpp"
#include "discern/rng.hpp"

namespace discern {

namespace {

constexpr std::string_view kPersonaPlaceholder = "{persona_block}";
constexpr std::string_view kTaskPlaceholder = "{task_block}";

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void replace_once(std::string& s, std::string_view token, std::string_view value) {
  const auto pos = s.find(token);
  s.replace(pos, token.size(), value);
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string persona_template, std::string task_block)
    : persona_(strip_trailing_newlines(std::move(persona_template))),
      task_(strip_trailing_newlines(std::move(task_block))) {
  for (auto token : {kPersonaPlaceholder, kTaskPlaceholder}) {
    const auto first = persona_.find(token);
    if (first == std::string::npos || persona_.find(token, first + 1) != std::string::npos)
      throw ConfigError("persona template must contain " + std::string(token) + " exactly once");
  }
  if (task_.empty()) throw ConfigError("task block is empty");
  std::string material = persona_;
  material.push_back('\0');
  material += task_;
  hash_ = sha256_hex(material);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& data_dir) {
  return PromptTemplate(read_text_file(data_dir / "templates" / "persona_v1.txt"),
                        read_text_file(data_dir / "templates" / "task_v1.txt"));
}

std::string build_persona_prompt(const ParticipantProfile& profile, const AgentSpec& spec,
                                 const Inventory& inventory, const PromptTemplate& tmpl) {
  if (profile.inventory_kind != spec.inventory_kind)
    throw ConfigError("profile '" + profile.participant_id + "' is " + std::string(to_string(profile.inventory_kind)) +
                      " but the agent spec asks for " + std::string(to_string(spec.inventory_kind)));
  const ItemBank& bank = inventory.bank(spec.inventory_kind);
  validate_responses(profile.responses, bank);

  std::vector<int> value_by_index(bank.size());
  for (const auto& r : profile.responses) value_by_index[bank.index_of(r.item_id)] = r.value;

  std::string block;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (i) block.push_back('\n');
    block += render_item(bank.items()[i], value_by_index[i], spec.scale_format, inventory.labels());
  }

  std::string prompt = tmpl.persona_template();
  replace_once(prompt, kPersonaPlaceholder, block);
  replace_once(prompt, kTaskPlaceholder, tmpl.task_block());
  return prompt;
}

std::string build_neutral_prompt(const PromptTemplate& tmpl) {
  return tmpl.task_block();
}

std::optional<RecoveredPersona> recover_persona(std::string_view prompt, const Inventory& inventory) {
  std::vector<ParsedAnswer> answers;
  std::size_t start = 0;
  while (start <= prompt.size()) {
    auto end = prompt.find('\n', start);
    if (end == std::string_view::npos) end = prompt.size();
    if (auto parsed = parse_answer_line(prompt.substr(start, end - start), inventory.labels()))
      answers.push_back(std::move(*parsed));
    start = end + 1;
  }
  if (answers.empty()) return std::nullopt;

  for (auto kind : {InventoryKind::Bfi2S, InventoryKind::Bfi2}) {
    const ItemBank& bank = inventory.bank(kind);
    if (answers.size() != bank.size()) continue;
    RecoveredPersona out{kind, answers.front().format, {}};
    bool ok = true;
    for (std::size_t i = 0; i < bank.size() && ok; ++i) {
      ok = answers[i].text == bank.items()[i].text && answers[i].format == out.scale_format;
      out.responses.push_back({bank.items()[i].item_id, answers[i].rank});
    }
    if (ok) return out;
  }
  return std::nullopt;
}

std::vector<ParticipantProfile> parse_profiles_csv(std::string_view text, std::string_view source,
                                                   const ItemBank& bank) {
  const csv::Table table = csv::parse(text, source);
  const std::string where(source);
  const std::size_t id_col = table.column("participant_id");
  if (id_col == std::string_view::npos) throw LoadError(where + ": missing 'participant_id' column");

  std::vector<std::pair<std::size_t, int>> item_cols;
  std::vector<std::size_t> extra_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == id_col) continue;
    if (auto id = parse_int(table.header[c])) {
      if (!bank.find(*id))
        throw LoadError(where + ": column " + std::to_string(c + 1) + " names unknown " +
                        std::string(to_string(bank.kind())) + " item_id " + table.header[c]);
      item_cols.emplace_back(c, *id);
    } else {
      extra_cols.push_back(c);
    }
  }
  if (table.rows.empty()) throw LoadError(where + ": no participant rows");

  std::vector<ParticipantProfile> out;
  out.reserve(table.rows.size());
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string at = where + ":" + std::to_string(table.line_numbers[r]);
    ParticipantProfile p;
    p.participant_id = row[id_col];
    p.inventory_kind = bank.kind();
    if (p.participant_id.empty()) throw LoadError(at + ": empty participant_id");
    if (!ids.insert(p.participant_id).second) throw LoadError(at + ": duplicate participant_id " + p.participant_id);
    for (auto [c, item_id] : item_cols) {
      auto v = parse_int(row[c]);
      if (!v || *v < 1 || *v > 5)
        throw LoadError(at + ": column " + table.header[c] + ": value '" + row[c] + "' is not an integer in 1..5");
      p.responses.push_back({item_id, *v});
    }
    for (auto c : extra_cols) p.demographics.emplace(table.header[c], row[c]);
    try {
      validate_responses(p.responses, bank);
    } catch (const ValidationError& e) {
      throw LoadError(at + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ParticipantProfile> load_profiles_csv(const std::filesystem::path& path, const ItemBank& bank) {
  return parse_profiles_csv(read_text_file(path), path.string(), bank);
}

std::string profiles_to_csv(const std::vector<ParticipantProfile>& profiles, const ItemBank& bank) {
  csv::Row header{"participant_id"};
  for (const auto& item : bank.items()) header.push_back(std::to_string(item.item_id));
  std::string out = csv::join(header) + "\n";
  for (const auto& p : profiles) {
    validate_responses(p.responses, bank);
    std::vector<int> values(bank.size());
    for (const auto& r : p.responses) values[bank.index_of(r.item_id)] = r.value;
    csv::Row row{p.participant_id};
    for (int v : values) row.push_back(std::to_string(v));
    out += csv::join(row) + "\n";
  }
  return out;
}

std::string trait_scores_to_csv(const std::vector<ScoredParticipant>& rows) {
  std::string out = "participant_id,e,a,c,n,o\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", csv::escape(r.participant_id), r.scores.e, r.scores.a, r.scores.c,
                       r.scores.n, r.scores.o);
  }
  return out;
}

std::vector<ScoredParticipant> load_trait_scores_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::string where = path.string();
  const std::size_t id_col = table.column("participant_id");
  if (id_col == std::string_view::npos) throw LoadError(where + ": missing 'participant_id' column");
  std::array<std::size_t, 5> cols{};
  for (auto t : kTraits) {
    std::string name(to_string(t));
    name[0] = static_cast<char>(name[0] - 'A' + 'a');
    cols[static_cast<std::size_t>(t)] = table.column(name);
    if (cols[static_cast<std::size_t>(t)] == std::string_view::npos)
      throw LoadError(where + ": missing '" + name + "' column");
  }
  std::vector<ScoredParticipant> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ScoredParticipant sp{row[id_col], {}};
    if (!ids.insert(sp.participant_id).second)
      throw LoadError(where + ":" + std::to_string(table.line_numbers[r]) + ": duplicate participant_id " +
                      sp.participant_id);
    for (auto t : kTraits) {
      const auto c = cols[static_cast<std::size_t>(t)];
      auto v = parse_double(row[c]);
      if (!v || *v < 1.0 || *v > 5.0)
        throw LoadError(where + ":" + std::to_string(table.line_numbers[r]) + ": column " + table.header[c] +
                        ": '" + row[c] + "' is not a score in [1, 5]");
      sp.scores[t] = *v;
    }
    out.push_back(std::move(sp));
  }
  if (out.empty()) throw LoadError(where + ": no trait rows");
  return out;
}

std::vector<ParticipantProfile> synthesize_profiles(const ItemBank& bank, std::size_t count, std::uint64_t seed) {
  constexpr double kLatentSpread = 0.9;
  constexpr double kItemNoise = 0.8;
  std::vector<ParticipantProfile> out;
  out.reserve(count);
  const std::string kind(to_string(bank.kind()));
  for (std::size_t i = 0; i < count; ++i) {
    ParticipantProfile p;
    p.participant_id = fmt::format("P{:04d}", i + 1);
    p.inventory_kind = bank.kind();
    rng::Xoshiro256 gen(rng::derive_key(seed, {"synthetic-profile", kind, p.participant_id}));
    std::array<double, 5> latent{};
    for (auto& l : latent) l = gen.normal();
    for (const auto& item : bank.items()) {
      const double level = latent[static_cast<std::size_t>(item.domain)] * (item.reverse_keyed ? -1.0 : 1.0);
      const double raw = 3.0 + kLatentSpread * level + kItemNoise * gen.normal();
      const int value = std::clamp(static_cast<int>(std::floor(raw + 0.5)), 1, 5);
      p.responses.push_back({item.item_id, value});
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace discern
