#include <doctest.h>

#include <algorithm>
#include <map>

#include "discern/error.hpp"
#include "discern/inventory.hpp"
#include "support.hpp"

using namespace discern;

namespace {

const ItemBank& s_bank() { return test::inventory().bank(InventoryKind::Bfi2S); }
const ItemBank& full_bank() { return test::inventory().bank(InventoryKind::Bfi2); }

std::vector<ItemResponse> keyed_responses(const ItemBank& bank, int forward, int reverse) {
  std::vector<ItemResponse> out;
  for (const auto& item : bank.items()) out.push_back({item.item_id, item.reverse_keyed ? reverse : forward});
  return out;
}

void check_all_traits(const TraitScores& s, double expected) {
  for (auto t : kTraits) CHECK(s[t] == doctest::Approx(expected));
}

}  // namespace

TEST_CASE("banks have the published sizes") {
  CHECK(s_bank().size() == 30);
  CHECK(full_bank().size() == 60);
  for (const ItemBank* bank : {&s_bank(), &full_bank()}) {
    std::map<Trait, int> per_domain, reversed;
    for (const auto& item : bank->items()) {
      ++per_domain[item.domain];
      reversed[item.domain] += item.reverse_keyed;
    }
    const int k = static_cast<int>(bank->size() / 5);
    for (auto t : kTraits) {
      CHECK(per_domain[t] == k);
      CHECK(reversed[t] == k / 2);
    }
  }
}

TEST_CASE("reverse keying") {
  CHECK(reverse_key(1) == 5);
  CHECK(reverse_key(2) == 4);
  CHECK(reverse_key(3) == 3);
  CHECK(reverse_key(5) == 1);
  for (int v = 1; v <= 5; ++v) CHECK(reverse_key(reverse_key(v)) == v);
  CHECK_THROWS_AS(reverse_key(0), ValidationError);
  CHECK_THROWS_AS(reverse_key(6), ValidationError);
}

TEST_CASE("scoring examples") {
  check_all_traits(score_inventory(test::constant_responses(s_bank(), 3), s_bank()), 3.0);
  check_all_traits(score_inventory(test::constant_responses(s_bank(), 5), s_bank()), 3.0);
  check_all_traits(score_inventory(test::constant_responses(full_bank(), 1), full_bank()), 3.0);
  check_all_traits(score_inventory(keyed_responses(s_bank(), 5, 1), s_bank()), 5.0);
  check_all_traits(score_inventory(keyed_responses(full_bank(), 1, 5), full_bank()), 1.0);
  check_all_traits(score_inventory(keyed_responses(full_bank(), 4, 3), full_bank()), 3.5);
}

TEST_CASE("validation names the offending item ids") {
  auto responses = test::constant_responses(s_bank(), 3);
  SUBCASE("missing") {
    responses.erase(responses.begin() + 4);
    CHECK_THROWS_WITH_AS(score_inventory(responses, s_bank()), doctest::Contains("5"), ValidationError);
  }
  SUBCASE("duplicate") {
    responses.push_back({7, 2});
    CHECK_THROWS_WITH_AS(score_inventory(responses, s_bank()), doctest::Contains("7"), ValidationError);
  }
  SUBCASE("unknown") {
    responses.push_back({99, 2});
    CHECK_THROWS_WITH_AS(score_inventory(responses, s_bank()), doctest::Contains("99"), ValidationError);
  }
  SUBCASE("out of range") {
    responses[10].value = 6;
    CHECK_THROWS_WITH_AS(score_inventory(responses, s_bank()), doctest::Contains("11"), ValidationError);
  }
}

TEST_CASE("property: scoring ignores response order") {
  std::mt19937_64 gen(101);
  for (int i = 0; i < test::kPropertyCases; ++i) {
    const ItemBank& bank = i % 2 ? full_bank() : s_bank();
    auto responses = test::random_responses(bank, gen);
    const auto base = score_inventory(responses, bank);
    std::shuffle(responses.begin(), responses.end(), gen);
    REQUIRE(score_inventory(responses, bank) == base);
  }
}

TEST_CASE("property: mirrored responses mirror the scores") {
  std::mt19937_64 gen(202);
  for (int i = 0; i < test::kPropertyCases; ++i) {
    const ItemBank& bank = i % 2 ? full_bank() : s_bank();
    auto responses = test::random_responses(bank, gen);
    const auto base = score_inventory(responses, bank);
    for (auto& r : responses) r.value = 6 - r.value;
    const auto mirrored = score_inventory(responses, bank);
    for (auto t : kTraits) {
      REQUIRE(mirrored[t] == doctest::Approx(6.0 - base[t]).epsilon(1e-12));
      REQUIRE(base[t] >= 1.0);
      REQUIRE(base[t] <= 5.0);
    }
  }
}

TEST_CASE("rendering") {
  const auto& labels = test::inventory().labels();
  const InventoryItem& quiet = s_bank().items()[0];
  CHECK(render_likert(quiet, 1, labels) == quiet.text + " -> 1 (strongly disagree)");
  CHECK(render_likert(quiet, 5, labels) == quiet.text + " -> 5 (strongly agree)");
  CHECK(render_likert(quiet, 3, labels) == quiet.text + " -> 3 (neutral; no opinion)");
  CHECK(render_expanded(quiet, 1, labels) == quiet.text + " -> very inaccurate description for me");
  CHECK(render_expanded(quiet, 5, labels) == quiet.text + " -> very accurate description for me");
  CHECK(render_expanded(quiet, 3, labels) == quiet.text + " -> neither accurate nor inaccurate description for me");
  CHECK(render_item(quiet, 2, ScaleFormat::Expanded, labels) == render_expanded(quiet, 2, labels));
  CHECK_THROWS_AS(labels.label(ScaleFormat::Likert, 0), ValidationError);
}

TEST_CASE("short form converts to expanded statements") {
  const auto& labels = test::inventory().labels();
  const auto lines = convert_s_to_expanded(test::constant_responses(s_bank(), 4), s_bank(), labels);
  REQUIRE(lines.size() == 30);
  CHECK(lines[0] == s_bank().items()[0].text + " -> moderately accurate description for me");
  CHECK_THROWS_AS(convert_s_to_expanded(test::constant_responses(full_bank(), 4), full_bank(), labels),
                  ValidationError);
}

TEST_CASE("property: expanded conversion round-trips through the answer parser") {
  const auto& labels = test::inventory().labels();
  std::mt19937_64 gen(303);
  for (int i = 0; i < test::kPropertyCases; ++i) {
    const auto responses = test::random_responses(s_bank(), gen);
    const auto lines = convert_s_to_expanded(responses, s_bank(), labels);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const auto parsed = parse_answer_line(lines[k], labels);
      REQUIRE(parsed);
      REQUIRE(parsed->format == ScaleFormat::Expanded);
      REQUIRE(parsed->rank == responses[k].value);
      REQUIRE(parsed->text == s_bank().items()[k].text);
    }
  }
}

TEST_CASE("answer parser rejects non-answers") {
  const auto& labels = test::inventory().labels();
  CHECK_FALSE(parse_answer_line("Headline: something", labels));
  CHECK_FALSE(parse_answer_line("Is talkative. -> 6 (strongly agree)", labels));
  CHECK_FALSE(parse_answer_line(" -> 1 (strongly disagree)", labels));
  const auto likert = parse_answer_line("Is talkative. -> 2 (disagree a little)", labels);
  REQUIRE(likert);
  CHECK(likert->format == ScaleFormat::Likert);
  CHECK(likert->rank == 2);
}
