#include "discern/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "discern/error.hpp"
#include "discern/persona.hpp"

#include <httplib.h>

namespace discern {

std::string_view to_string(BackendKind k) {
  return k == BackendKind::Live ? "live" : "synthetic";
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "live") return BackendKind::Live;
  if (s == "synthetic") return BackendKind::Synthetic;
  throw ConfigError("unknown backend '" + std::string(s) + "' (expected live or synthetic)");
}

std::string_view to_string(ParseStatus s) {
  return s == ParseStatus::Ok ? "ok" : "unparseable";
}

ParseStatus parse_parse_status(std::string_view s) {
  if (s == "ok") return ParseStatus::Ok;
  if (s == "unparseable") return ParseStatus::Unparseable;
  throw ValidationError("unknown parse_status '" + std::string(s) + "'");
}

SyntheticParams SyntheticParams::defaults() {
  SyntheticParams p;
  //                  E      A      C      N     O
  p.weights[0] = {0.00, 0.00, 0.00, 0.00, 0.35};
  p.weights[1] = {0.10, -0.35, -0.35, 0.10, -0.10};
  return p;
}

SyntheticParams SyntheticParams::constant(double b0) {
  SyntheticParams p;
  p.intercept = {b0, b0};
  p.noise_sd = 0;
  p.temperature_noise = 0;
  return p;
}

nlohmann::ordered_json SyntheticParams::to_json() const {
  nlohmann::ordered_json j;
  j["intercept_true"] = intercept[0];
  j["intercept_false"] = intercept[1];
  j["weights_true"] = weights[0];
  j["weights_false"] = weights[1];
  j["trait_center"] = trait_center;
  j["trait_scale"] = trait_scale;
  j["noise_sd"] = noise_sd;
  j["temperature_noise"] = temperature_noise;
  return j;
}

SyntheticParams SyntheticParams::from_json(const nlohmann::json& j) {
  SyntheticParams p = defaults();
  try {
    if (j.contains("intercept_true")) p.intercept[0] = j.at("intercept_true").get<double>();
    if (j.contains("intercept_false")) p.intercept[1] = j.at("intercept_false").get<double>();
    if (j.contains("weights_true")) p.weights[0] = j.at("weights_true").get<std::array<double, 5>>();
    if (j.contains("weights_false")) p.weights[1] = j.at("weights_false").get<std::array<double, 5>>();
    if (j.contains("trait_center")) p.trait_center = j.at("trait_center").get<double>();
    if (j.contains("trait_scale")) p.trait_scale = j.at("trait_scale").get<double>();
    if (j.contains("noise_sd")) p.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("temperature_noise")) p.temperature_noise = j.at("temperature_noise").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic params: ") + e.what());
  }
  if (p.trait_scale <= 0) throw ConfigError("synthetic params: trait_scale must be positive");
  if (p.noise_sd < 0 || p.temperature_noise < 0) throw ConfigError("synthetic params: noise must be non-negative");
  return p;
}

std::string BackendConfig::cell_label() const {
  return fmt::format("{}@{}", model_name, temperature);
}

nlohmann::ordered_json BackendConfig::to_json() const {
  nlohmann::ordered_json j;
  j["backend_kind"] = to_string(backend_kind);
  j["model_name"] = model_name;
  j["temperature"] = temperature;
  j["seed"] = seed;
  if (backend_kind == BackendKind::Live) {
    j["endpoint_url"] = endpoint_url;
    j["api_key_env"] = api_key_env;
    j["max_in_flight"] = max_in_flight;
    j["requests_per_minute"] = requests_per_minute;
  } else {
    j["synthetic"] = synthetic.to_json();
  }
  j["retry_limit"] = retry_limit;
  j["retry_backoff_ms"] = retry_backoff.count();
  j["timeout_ms"] = timeout.count();
  return j;
}

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
  BackendConfig c;
  try {
    if (j.contains("backend_kind")) c.backend_kind = parse_backend_kind(j.at("backend_kind").get<std::string>());
    if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("endpoint_url")) c.endpoint_url = j.at("endpoint_url").get<std::string>();
    if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("retry_limit")) c.retry_limit = j.at("retry_limit").get<int>();
    if (j.contains("retry_backoff_ms")) c.retry_backoff = std::chrono::milliseconds(j.at("retry_backoff_ms").get<long>());
    if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
    if (j.contains("max_in_flight")) c.max_in_flight = j.at("max_in_flight").get<int>();
    if (j.contains("requests_per_minute")) c.requests_per_minute = j.at("requests_per_minute").get<int>();
    if (j.contains("synthetic")) c.synthetic = SyntheticParams::from_json(j.at("synthetic"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("backend config: ") + e.what());
  }
  if (c.temperature < 0) throw ConfigError("backend config: temperature must be >= 0");
  if (c.retry_limit < 0) throw ConfigError("backend config: retry_limit must be >= 0");
  if (c.max_in_flight < 1) throw ConfigError("backend config: max_in_flight must be >= 1");
  if (c.model_name.empty()) throw ConfigError("backend config: model_name is empty");
  return c;
}

std::optional<int> parse_rating(std::string_view text) {
  const auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  const auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    bool standalone = j - i == 1;
    if (i > 0) {
      const char prev = text[i - 1];
      if (is_alnum(prev) || prev == '_') standalone = false;
      // fractional part of a decimal ("2.5" -> the 5)
      if (prev == '.' && i >= 2 && is_digit(text[i - 2])) standalone = false;
      // signed number
      if (prev == '-' && (i < 2 || !is_alnum(text[i - 2]))) standalone = false;
    }
    if (j < n) {
      const char next = text[j];
      if (is_alnum(next) || next == '_') standalone = false;
      if ((next == '.' || next == ',') && j + 1 < n && is_digit(text[j + 1])) standalone = false;
    }
    if (standalone && text[i] >= '1' && text[i] <= '4') return text[i] - '0';
    i = j;
  }
  return std::nullopt;
}

int synthetic_rate(const std::optional<TraitScores>& traits, const Headline& headline, const SyntheticParams& params,
                   double temperature, rng::Xoshiro256& gen) {
  const std::size_t v = headline.veracity == Veracity::True ? 0 : 1;
  double latent = params.intercept[v];
  if (traits) {
    for (auto t : kTraits) {
      const double z = ((*traits)[t] - params.trait_center) / params.trait_scale;
      latent += params.weights[v][static_cast<std::size_t>(t)] * z;
    }
  }
  // Always consume one draw so streams stay aligned when the noise is off.
  const double eps = gen.normal();
  latent += params.noise_for(temperature) * eps;
  return std::clamp(static_cast<int>(std::floor(latent + 0.5)), 1, 4);
}

std::string user_message(const Headline& headline, bool with_clarification) {
  std::string msg = "Headline: " + headline.text;
  if (with_clarification) {
    msg.push_back('\n');
    msg += kClarificationLine;
  }
  return msg;
}

std::string build_request_body(std::string_view prompt, const Headline& headline, const BackendConfig& config,
                               bool with_clarification) {
  nlohmann::ordered_json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", std::string(prompt)}},
      {{"role", "user"}, {"content", user_message(headline, with_clarification)}},
  });
  return body.dump();
}

std::string extract_reply_text(std::string_view response_body) {
  auto j = nlohmann::json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw TransportError("response is not valid JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("response has no choices[0].message.content");
  }
}

// ---------------------------------------------------------------------------

SyntheticBackend::SyntheticBackend(BackendConfig config, std::shared_ptr<const Inventory> inventory)
    : config_(std::move(config)), inventory_(std::move(inventory)) {
  if (!inventory_) throw ConfigError("synthetic backend needs the inventory to read persona prompts");
}

std::uint64_t SyntheticBackend::stream_key(std::string_view prompt, const Headline& headline, int repeat) const {
  const std::string prompt_key = fmt::format("{:016x}", rng::fnv1a64(prompt));
  const std::string temp = fmt::format("{}", config_.temperature);
  const std::string rep = std::to_string(repeat);
  return rng::derive_key(config_.seed, {config_.model_name, temp, prompt_key, headline.headline_id, rep});
}

RatingResponse SyntheticBackend::rate(const RatingRequest& request) {
  if (request.prompt.empty()) throw ValidationError("empty prompt");
  std::optional<TraitScores> traits;
  if (auto persona = recover_persona(request.prompt, *inventory_))
    traits = score_inventory(persona->responses, inventory_->bank(persona->inventory_kind));
  rng::Xoshiro256 gen(stream_key(request.prompt, request.headline, request.repeat));
  const int rating = synthetic_rate(traits, request.headline, config_.synthetic, config_.temperature, gen);
  return RatingResponse{std::to_string(rating), rating, ParseStatus::Ok, 1};
}

// ---------------------------------------------------------------------------

struct LiveBackend::Limiter {
  std::mutex mu;
  std::condition_variable cv;
  int in_flight = 0;
  std::deque<std::chrono::steady_clock::time_point> window;

  void acquire(int max_in_flight, int per_minute) {
    std::unique_lock lock(mu);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      while (!window.empty() && now - window.front() >= std::chrono::minutes(1)) window.pop_front();
      const bool slot = in_flight < max_in_flight;
      const bool budget = per_minute <= 0 || static_cast<int>(window.size()) < per_minute;
      if (slot && budget) break;
      if (!budget) cv.wait_until(lock, window.front() + std::chrono::minutes(1));
      else cv.wait(lock);
    }
    ++in_flight;
    if (per_minute > 0) window.push_back(std::chrono::steady_clock::now());
  }

  void release() {
    {
      std::lock_guard lock(mu);
      --in_flight;
    }
    cv.notify_one();
  }
};

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL must include a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpPost make_http_post(const BackendConfig& config, const std::string& token) {
  const ParsedUrl url = split_url(config.endpoint_url);
  const auto timeout = config.timeout;
  return [url, token, timeout](const std::string& body) {
    httplib::Client client(url.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
    client.set_connection_timeout(std::max<long>(1, secs), 0);
    client.set_read_timeout(std::max<long>(1, secs), 0);
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) throw TransportError("request to " + url.scheme_host_port + " failed: " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
  };
}

}  // namespace

LiveBackend::LiveBackend(BackendConfig config) : config_(std::move(config)), limiter_(std::make_unique<Limiter>()) {
  const char* token = std::getenv(config_.api_key_env.c_str());
  if (!token || !*token)
    throw ConfigError("live backend: environment variable " + config_.api_key_env + " is not set");
  if (config_.endpoint_url.empty()) throw ConfigError("live backend: endpoint URL is empty");
  token_ = token;
  post_ = make_http_post(config_, token_);
}

LiveBackend::LiveBackend(BackendConfig config, HttpPost post)
    : config_(std::move(config)), post_(std::move(post)), limiter_(std::make_unique<Limiter>()) {}

LiveBackend::~LiveBackend() = default;

RatingResponse LiveBackend::rate(const RatingRequest& request) {
  if (request.prompt.empty()) throw ValidationError("empty prompt");
  int attempts = 0;
  int transport_failures = 0;
  int reasks = 0;
  bool clarify = false;
  std::string last_raw;

  auto backoff = [&] {
    const auto wait = config_.retry_backoff * (1LL << std::min(transport_failures - 1, 4));
    std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(wait, std::chrono::seconds(8)));
  };

  for (;;) {
    ++attempts;
    const std::string body = build_request_body(request.prompt, request.headline, config_, clarify);
    if (config_.trace) std::cerr << "[trace] POST " << config_.endpoint_url << " Authorization: Bearer *** " << body << '\n';

    HttpResponse res;
    limiter_->acquire(config_.max_in_flight, config_.requests_per_minute);
    try {
      res = post_(body);
    } catch (const TransportError&) {
      limiter_->release();
      if (++transport_failures > config_.retry_limit) throw;
      backoff();
      continue;
    }
    limiter_->release();
    if (config_.trace) std::cerr << "[trace] HTTP " << res.status << ' ' << res.body << '\n';

    if (res.status == 429 || res.status >= 500) {
      if (++transport_failures > config_.retry_limit)
        throw TransportError(fmt::format("HTTP {} after {} attempts", res.status, attempts));
      backoff();
      continue;
    }
    if (res.status != 200) throw TransportError(fmt::format("HTTP {}: {}", res.status, res.body.substr(0, 200)));

    try {
      last_raw = extract_reply_text(res.body);
    } catch (const TransportError&) {
      last_raw = res.body;
    }
    if (auto rating = parse_rating(last_raw)) return RatingResponse{last_raw, rating, ParseStatus::Ok, attempts};
    if (++reasks > config_.retry_limit)
      throw BackendError(fmt::format("reply still unparseable after {} attempts", attempts), last_raw);
    clarify = true;
  }
}

std::unique_ptr<RatingBackend> make_backend(const BackendConfig& config, std::shared_ptr<const Inventory> inventory) {
  if (config.backend_kind == BackendKind::Live) return std::make_unique<LiveBackend>(config);
  return std::make_unique<SyntheticBackend>(config, std::move(inventory));
}

}  // namespace discern
