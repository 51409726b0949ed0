#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace discern {

enum class Veracity { True, False };
enum class Lean { ProLiberal, ProConservative };

std::string_view to_string(Veracity v);
std::string_view to_string(Lean l);

struct Headline {
  std::string headline_id;
  std::string text;
  Veracity veracity = Veracity::True;
  Lean lean = Lean::ProLiberal;
  std::string source;

  friend bool operator==(const Headline&, const Headline&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, std::vector<Headline> headlines);

  const std::string& name() const { return name_; }
  const std::vector<Headline>& headlines() const { return headlines_; }
  std::size_t size() const { return headlines_.size(); }
  const Headline* find(std::string_view headline_id) const;

 private:
  std::string name_;
  std::vector<Headline> headlines_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Parses a JSON array of headline objects. Errors carry the source line.
Corpus parse_corpus(std::string_view text, std::string_view source, std::string name);
Corpus load_corpus(const std::filesystem::path& path);
// Serialises in the same layout load_corpus reads (one object per line).
std::string emit_corpus(const Corpus& corpus);

struct BalanceSpec {
  bool enabled = true;
  std::size_t per_veracity = 12;
  std::size_t per_lean = 12;

  static BalanceSpec disabled() { return {false, 0, 0}; }
};

struct BalanceReport {
  bool pass = false;
  // [veracity][lean] with True/False and ProLiberal/ProConservative order.
  std::size_t cells[2][2] = {{0, 0}, {0, 0}};
  std::size_t n_true = 0, n_false = 0, n_liberal = 0, n_conservative = 0;

  std::string describe() const;
};

BalanceReport validate_balance(const Corpus& corpus, const BalanceSpec& expected);

}  // namespace discern
