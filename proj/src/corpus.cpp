#include "discern/corpus.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "discern/common.hpp"
#include "discern/error.hpp"

namespace discern {

std::string_view to_string(Veracity v) {
  return v == Veracity::True ? "true_news" : "false_news";
}

std::string_view to_string(Lean l) {
  return l == Lean::ProLiberal ? "pro_liberal" : "pro_conservative";
}

Corpus::Corpus(std::string name, std::vector<Headline> headlines)
    : name_(std::move(name)), headlines_(std::move(headlines)) {
  for (std::size_t i = 0; i < headlines_.size(); ++i) {
    if (!by_id_.emplace(headlines_[i].headline_id, i).second)
      throw ValidationError("duplicate headline_id '" + headlines_[i].headline_id + "'");
  }
}

const Headline* Corpus::find(std::string_view headline_id) const {
  auto it = by_id_.find(std::string(headline_id));
  return it == by_id_.end() ? nullptr : &headlines_[it->second];
}

namespace {

// Line of the n-th top-level array element, for error context.
std::vector<std::size_t> element_lines(std::string_view text) {
  std::vector<std::size_t> lines;
  std::size_t line = 1;
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') ++line;
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{' || c == '[') {
      if (depth == 1 && c == '{') lines.push_back(line);
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
    }
  }
  return lines;
}

std::string field(const nlohmann::json& obj, const char* key, const std::string& at) {
  if (!obj.contains(key)) throw LoadError(at + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_string()) throw LoadError(at + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

Corpus parse_corpus(std::string_view text, std::string_view source, std::string name) {
  const std::string where(source);
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
    throw LoadError(where + ": empty corpus file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(where + ": " + e.what());
  }
  if (!doc.is_array()) throw LoadError(where + ": corpus must be a JSON array of headline objects");
  if (doc.empty()) throw LoadError(where + ": corpus contains no headlines");

  const auto lines = element_lines(text);
  std::vector<Headline> headlines;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::size_t line = i < lines.size() ? lines[i] : 0;
    const std::string at = where + ":" + std::to_string(line);
    const auto& obj = doc[i];
    if (!obj.is_object()) throw LoadError(at + ": headline entry must be an object");
    for (const auto& [key, _] : obj.items()) {
      if (key != "headline_id" && key != "text" && key != "veracity" && key != "lean" && key != "source")
        throw LoadError(at + ": unknown field '" + key + "'");
    }
    Headline h;
    h.headline_id = field(obj, "headline_id", at);
    h.text = field(obj, "text", at);
    h.source = field(obj, "source", at);
    const auto veracity = field(obj, "veracity", at);
    const auto lean = field(obj, "lean", at);
    if (veracity == "true_news") h.veracity = Veracity::True;
    else if (veracity == "false_news") h.veracity = Veracity::False;
    else throw LoadError(at + ": veracity must be true_news or false_news, got '" + veracity + "'");
    if (lean == "pro_liberal") h.lean = Lean::ProLiberal;
    else if (lean == "pro_conservative") h.lean = Lean::ProConservative;
    else throw LoadError(at + ": lean must be pro_liberal or pro_conservative, got '" + lean + "'");
    if (h.headline_id.empty()) throw LoadError(at + ": empty headline_id");
    if (h.text.empty()) throw LoadError(at + ": empty text for headline '" + h.headline_id + "'");

    if (auto [it, fresh] = seen.emplace(h.headline_id, line); !fresh)
      throw LoadError(at + ": duplicate headline_id '" + h.headline_id + "' (first seen at line " +
                      std::to_string(it->second) + ")");
    headlines.push_back(std::move(h));
  }
  return Corpus(std::move(name), std::move(headlines));
}

Corpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text_file(path), path.string(), path.stem().string());
}

std::string emit_corpus(const Corpus& corpus) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& h = corpus.headlines()[i];
    nlohmann::ordered_json obj;
    obj["headline_id"] = h.headline_id;
    obj["text"] = h.text;
    obj["veracity"] = to_string(h.veracity);
    obj["lean"] = to_string(h.lean);
    obj["source"] = h.source;
    out += "  " + obj.dump() + (i + 1 < corpus.size() ? ",\n" : "\n");
  }
  out += "]\n";
  return out;
}

std::string BalanceReport::describe() const {
  return fmt::format(
      "{}: true={} false={} pro_liberal={} pro_conservative={} | true/liberal={} true/conservative={} "
      "false/liberal={} false/conservative={}",
      pass ? "PASS" : "FAIL", n_true, n_false, n_liberal, n_conservative, cells[0][0], cells[0][1], cells[1][0],
      cells[1][1]);
}

BalanceReport validate_balance(const Corpus& corpus, const BalanceSpec& expected) {
  BalanceReport report;
  for (const auto& h : corpus.headlines()) {
    const int v = h.veracity == Veracity::True ? 0 : 1;
    const int l = h.lean == Lean::ProLiberal ? 0 : 1;
    ++report.cells[v][l];
  }
  report.n_true = report.cells[0][0] + report.cells[0][1];
  report.n_false = report.cells[1][0] + report.cells[1][1];
  report.n_liberal = report.cells[0][0] + report.cells[1][0];
  report.n_conservative = report.cells[0][1] + report.cells[1][1];
  report.pass = !expected.enabled ||
                (report.n_true == expected.per_veracity && report.n_false == expected.per_veracity &&
                 report.n_liberal == expected.per_lean && report.n_conservative == expected.per_lean);
  return report;
}

}  // namespace discern
