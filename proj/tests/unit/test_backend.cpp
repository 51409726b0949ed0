#include <doctest.h>

#include <cstdlib>
#include <httplib.h>
#include <thread>

#include "discern/backend.hpp"
#include "discern/error.hpp"
#include "support.hpp"

using namespace discern;

namespace {

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

BackendConfig live_config() {
  BackendConfig c;
  c.backend_kind = BackendKind::Live;
  c.model_name = "gpt-test";
  c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  c.retry_limit = 2;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

const Headline& true_headline() { return test::fixture_corpus().headlines().front(); }
const Headline& false_headline() { return *test::fixture_corpus().find("F01"); }

std::string persona_prompt(int value) {
  const auto& inv = test::inventory();
  const auto& bank = inv.bank(InventoryKind::Bfi2S);
  ParticipantProfile p{"P", InventoryKind::Bfi2S, test::constant_responses(bank, value), {}};
  return build_persona_prompt(p, {"P", ScaleFormat::Likert, InventoryKind::Bfi2S}, inv, test::prompt_template());
}

}  // namespace

TEST_CASE("rating parser examples") {
  CHECK(parse_rating("4") == 4);
  CHECK(parse_rating("In 2020 I'd rate it 1.") == 1);
  CHECK(parse_rating("I would say 2, it seems dubious.") == 2);
  CHECK(parse_rating("Rating: 3") == 3);
  CHECK(parse_rating("**2**") == 2);
  CHECK_FALSE(parse_rating("cannot judge"));
  CHECK_FALSE(parse_rating("2.5"));
  CHECK_FALSE(parse_rating("A1"));
  CHECK_FALSE(parse_rating("5"));
  CHECK_FALSE(parse_rating("0"));
  CHECK_FALSE(parse_rating(""));
  CHECK_FALSE(parse_rating("-1"));
}

TEST_CASE("synthetic backend is deterministic and repeat sensitive") {
  BackendConfig cfg;
  cfg.seed = 9;
  SyntheticBackend a(cfg, test::shared_inventory());
  SyntheticBackend b(cfg, test::shared_inventory());
  const auto prompt = persona_prompt(4);
  bool repeat_differs = false;
  for (const auto& h : test::fixture_corpus().headlines()) {
    const auto ra = a.rate({prompt, h, 0});
    CHECK(ra.rating == b.rate({prompt, h, 0}).rating);
    CHECK(ra.parse_status == ParseStatus::Ok);
    CHECK(ra.raw_text == std::to_string(*ra.rating));
    repeat_differs |= a.stream_key(prompt, h, 0) != a.stream_key(prompt, h, 1);
  }
  CHECK(repeat_differs);
  CHECK_THROWS_AS(a.rate({"", true_headline(), 0}), ValidationError);
}

TEST_CASE("constant synthetic params round half up") {
  rng::Xoshiro256 gen(1);
  const auto params = SyntheticParams::constant(2.5);
  for (int i = 0; i < 50; ++i) {
    CHECK(synthetic_rate(std::nullopt, true_headline(), params, 1.0, gen) == 3);
    CHECK(synthetic_rate(TraitScores{5, 1, 5, 1, 5}, false_headline(), params, 0.0, gen) == 3);
  }
  CHECK(synthetic_rate(std::nullopt, true_headline(), SyntheticParams::constant(7), 0, gen) == 4);
  CHECK(synthetic_rate(std::nullopt, true_headline(), SyntheticParams::constant(-3), 0, gen) == 1);
}

TEST_CASE("property: a negative weight never raises the rating") {
  auto params = SyntheticParams::constant(2.0);
  params.noise_sd = 0.7;
  params.weights[1][static_cast<std::size_t>(Trait::A)] = -1.0;
  std::mt19937_64 pick(77);
  std::uniform_real_distribution<double> score(1.0, 5.0);
  for (int i = 0; i < test::kPropertyCases; ++i) {
    TraitScores lo{score(pick), score(pick), score(pick), score(pick), score(pick)};
    TraitScores hi = lo;
    hi.a = std::min(5.0, lo.a + score(pick) - 1.0);
    rng::Xoshiro256 g1(i), g2(i);
    REQUIRE(synthetic_rate(hi, false_headline(), params, 0.0, g1) <=
            synthetic_rate(lo, false_headline(), params, 0.0, g2));
  }
}

TEST_CASE("request bodies are byte stable") {
  const auto cfg = live_config();
  const auto a = build_request_body("system text", true_headline(), cfg, false);
  CHECK(a == build_request_body("system text", true_headline(), cfg, false));
  const auto j = nlohmann::json::parse(a);
  CHECK(j["model"] == "gpt-test");
  CHECK(j["messages"][0]["content"] == "system text");
  CHECK(j["messages"][1]["content"] == "Headline: " + true_headline().text);
  const auto clarified = nlohmann::json::parse(build_request_body("system text", true_headline(), cfg, true));
  CHECK(clarified["messages"][1]["content"].get<std::string>().ends_with(kClarificationLine));
  CHECK(a.find(cfg.api_key_env) == std::string::npos);
}

TEST_CASE("live backend retries transport failures then succeeds") {
  int calls = 0;
  LiveBackend backend(live_config(), [&](const std::string&) {
    ++calls;
    if (calls == 1) throw TransportError("connection reset");
    if (calls == 2) return HttpResponse{503, "busy"};
    if (calls == 3) return HttpResponse{429, "slow down"};
    return HttpResponse{200, reply("I'd say 3.")};
  });
  auto cfg = live_config();
  cfg.retry_limit = 3;
  LiveBackend generous(cfg, [&](const std::string&) {
    ++calls;
    if (calls % 4 != 0) return HttpResponse{500, "x"};
    return HttpResponse{200, reply("3")};
  });
  calls = 0;
  const auto res = generous.rate({"prompt", true_headline(), 0});
  CHECK(res.rating == 3);
  CHECK(res.attempts == 4);
  calls = 0;
  CHECK_THROWS_AS(backend.rate({"prompt", true_headline(), 0}), TransportError);
}

TEST_CASE("live backend re-asks with a clarification and reports the last reply") {
  std::vector<std::string> bodies;
  LiveBackend backend(live_config(), [&](const std::string& body) {
    bodies.push_back(body);
    return HttpResponse{200, reply(bodies.size() < 2 ? "Hard to say." : "Probably 2")};
  });
  const auto res = backend.rate({"prompt", true_headline(), 0});
  CHECK(res.rating == 2);
  CHECK(res.attempts == 2);
  REQUIRE(bodies.size() == 2);
  CHECK(bodies[0].find(kClarificationLine) == std::string::npos);
  CHECK(bodies[1].find(kClarificationLine) != std::string::npos);

  LiveBackend stubborn(live_config(), [](const std::string&) { return HttpResponse{200, reply("no idea")}; });
  try {
    stubborn.rate({"prompt", true_headline(), 0});
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.last_raw_text() == "no idea");
  }
  LiveBackend rejected(live_config(), [](const std::string&) { return HttpResponse{401, "unauthorized"}; });
  CHECK_THROWS_AS(rejected.rate({"prompt", true_headline(), 0}), TransportError);
}

TEST_CASE("live backend requires its token") {
  auto cfg = live_config();
  cfg.api_key_env = "DISCERN_TEST_UNSET_TOKEN";
  ::unsetenv(cfg.api_key_env.c_str());
  CHECK_THROWS_AS(LiveBackend{cfg}, ConfigError);
  CHECK_THROWS_AS(make_backend(cfg, test::shared_inventory()), ConfigError);
}

TEST_CASE("live backend talks to an HTTP endpoint") {
  httplib::Server server;
  std::string auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(reply("4"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = live_config();
  cfg.api_key_env = "DISCERN_TEST_TOKEN";
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  ::setenv(cfg.api_key_env.c_str(), "sk-test", 1);
  LiveBackend backend(cfg);
  const auto res = backend.rate({"prompt", true_headline(), 0});
  server.stop();
  thread.join();
  ::unsetenv(cfg.api_key_env.c_str());

  CHECK(res.rating == 4);
  CHECK(auth == "Bearer sk-test");
  CHECK(seen_body == build_request_body("prompt", true_headline(), cfg, false));
}

TEST_CASE("reply extraction") {
  CHECK(extract_reply_text(reply("hello")) == "hello");
  CHECK_THROWS_AS(extract_reply_text("not json"), TransportError);
  CHECK_THROWS_AS(extract_reply_text("{}"), TransportError);
}

TEST_CASE("backend config JSON round trip") {
  auto cfg = live_config();
  cfg.requests_per_minute = 30;
  cfg.synthetic.weights[0][4] = 0.25;
  const auto back = BackendConfig::from_json(cfg.to_json());
  CHECK(back.to_json().dump() == cfg.to_json().dump());
  CHECK(cfg.cell_label() == "gpt-test@0.2");
  nlohmann::json bad = cfg.to_json();
  bad["temperature"] = -1;
  CHECK_THROWS_AS(BackendConfig::from_json(bad), ConfigError);
}
