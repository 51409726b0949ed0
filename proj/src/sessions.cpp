#include "discern/sessions.hpp"

#include <charconv>

#include <fmt/format.h>
#include <json.hpp>

#include "discern/error.hpp"

namespace discern {

std::string_view to_string(Condition c) {
  return c == Condition::Persona ? "persona" : "neutral";
}

std::string SessionRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["schema"] = kSessionSchema;
  j["run_id"] = run_id;
  j["condition"] = to_string(condition);
  j["participant_id"] = participant_id;
  j["headline_id"] = headline_id;
  j["headline_text"] = headline_text;
  j["veracity"] = to_string(veracity);
  j["repeat"] = repeat;
  j["rating"] = rating ? nlohmann::ordered_json(*rating) : nlohmann::ordered_json(nullptr);
  j["parse_status"] = to_string(parse_status);
  j["raw_text"] = raw_text;
  if (!error.empty()) j["error"] = error;
  j["scale_format"] = scale_format ? nlohmann::ordered_json(to_string(*scale_format)) : nlohmann::ordered_json(nullptr);
  j["inventory_kind"] = to_string(inventory_kind);
  j["responses"] = responses;
  j["backend_kind"] = to_string(backend_kind);
  j["model_name"] = model_name;
  j["temperature"] = temperature;
  j["seed"] = seed;
  j["prompt_template_hash"] = prompt_template_hash;
  j["timestamp"] = timestamp;
  return j.dump();
}

SessionRecord SessionRecord::from_json_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw LoadError("session line is not a JSON object");
  try {
    if (j.at("schema").get<std::string>() != kSessionSchema)
      throw LoadError("unsupported session schema " + j.at("schema").dump());
    SessionRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    const auto cond = j.at("condition").get<std::string>();
    if (cond == "persona") r.condition = Condition::Persona;
    else if (cond == "neutral") r.condition = Condition::Neutral;
    else throw LoadError("unknown condition '" + cond + "'");
    r.participant_id = j.at("participant_id").get<std::string>();
    r.headline_id = j.at("headline_id").get<std::string>();
    r.headline_text = j.at("headline_text").get<std::string>();
    const auto ver = j.at("veracity").get<std::string>();
    if (ver == "true_news") r.veracity = Veracity::True;
    else if (ver == "false_news") r.veracity = Veracity::False;
    else throw LoadError("unknown veracity '" + ver + "'");
    r.repeat = j.at("repeat").get<int>();
    if (!j.at("rating").is_null()) r.rating = j.at("rating").get<int>();
    r.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
    r.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    if (!j.at("scale_format").is_null()) r.scale_format = parse_scale_format(j.at("scale_format").get<std::string>());
    r.inventory_kind = parse_inventory_kind(j.at("inventory_kind").get<std::string>());
    r.responses = j.at("responses").get<std::string>();
    r.backend_kind = parse_backend_kind(j.at("backend_kind").get<std::string>());
    r.model_name = j.at("model_name").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.prompt_template_hash = j.at("prompt_template_hash").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    if ((r.parse_status == ParseStatus::Ok) != (r.rating && *r.rating >= 1 && *r.rating <= 4))
      throw LoadError("parse_status and rating disagree");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("session record: ") + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(std::string("session record: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("session record: ") + e.what());
  }
}

std::string SessionRecord::cell_key() const {
  return fmt::format("{}|{}|{}|{}", model_name, temperature, scale_format ? to_string(*scale_format) : "none",
                     to_string(inventory_kind));
}

std::string SessionRecord::session_key() const {
  return fmt::format("{}|{}|{}|{}|{}", to_string(condition), cell_key(), participant_id, headline_id, repeat);
}

std::string encode_responses(const std::vector<ItemResponse>& responses, const ItemBank& bank) {
  validate_responses(responses, bank);
  std::vector<int> values(bank.size());
  for (const auto& r : responses) values[bank.index_of(r.item_id)] = r.value;
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<ItemResponse> decode_responses(std::string_view encoded, const ItemBank& bank) {
  std::vector<ItemResponse> out;
  std::size_t start = 0;
  while (start <= encoded.size() && out.size() < bank.size() + 1) {
    auto end = encoded.find(',', start);
    if (end == std::string_view::npos) end = encoded.size();
    int v = 0;
    const auto token = encoded.substr(start, end - start);
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw ValidationError("malformed response list '" + std::string(encoded) + "'");
    if (out.size() < bank.size()) out.push_back({bank.items()[out.size()].item_id, v});
    else out.push_back({0, v});
    start = end + 1;
  }
  validate_responses(out, bank);
  return out;
}

std::string regenerate_request(const SessionRecord& record, const Inventory& inventory, const PromptTemplate& tmpl,
                               int retry_limit) {
  if (record.prompt_template_hash != tmpl.hash())
    throw ConfigError("record was produced with template " + record.prompt_template_hash + ", loaded template is " +
                      tmpl.hash());
  BackendConfig config;
  config.backend_kind = record.backend_kind;
  config.model_name = record.model_name;
  config.temperature = record.temperature;
  config.seed = record.seed;
  config.retry_limit = retry_limit;
  Headline headline{record.headline_id, record.headline_text, record.veracity, Lean::ProLiberal, ""};

  std::string prompt;
  if (record.condition == Condition::Neutral) {
    prompt = build_neutral_prompt(tmpl);
  } else {
    if (!record.scale_format) throw ValidationError("persona record without scale_format");
    const ItemBank& bank = inventory.bank(record.inventory_kind);
    ParticipantProfile profile{record.participant_id, record.inventory_kind, decode_responses(record.responses, bank), {}};
    AgentSpec spec{record.participant_id, *record.scale_format, record.inventory_kind};
    prompt = build_persona_prompt(profile, spec, inventory, tmpl);
  }
  return build_request_body(prompt, headline, config, false);
}

SessionLogScan scan_session_log(const std::filesystem::path& path) {
  SessionLogScan scan;
  if (!std::filesystem::exists(path)) return scan;
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      scan.torn_tail = true;
      break;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    try {
      scan.records.push_back(SessionRecord::from_json_line(line));
    } catch (const LoadError& e) {
      if (nl + 1 == text.size()) {
        scan.torn_tail = true;
        break;
      }
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    pos = nl + 1;
    scan.valid_bytes = pos;
  }
  return scan;
}

std::vector<SessionRecord> load_session_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("session log '" + path.string() + "' does not exist");
  auto scan = scan_session_log(path);
  if (scan.torn_tail)
    throw LoadError(path.string() + ": incomplete final record (run still active or interrupted; resume it first)");
  return std::move(scan.records);
}

}  // namespace discern
