#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "discern/corpus.hpp"
#include "discern/inventory.hpp"
#include "discern/rng.hpp"

namespace discern {

enum class BackendKind { Live, Synthetic };
std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);

// Coefficients of the offline rating model
//   rating = clamp(round_half_up(b0[v] + sum_t w[v][t] * z_t + eps), 1, 4)
// with z_t = (score_t - trait_center) / trait_scale and
// eps ~ N(0, noise_sd + temperature_noise * temperature).
// An agent without a persona (neutral prompt) has z = 0 for every trait.
struct SyntheticParams {
  std::array<double, 2> intercept{2.9, 2.0};              // [true, false]
  std::array<std::array<double, 5>, 2> weights{};          // [veracity][E, A, C, N, O]
  double trait_center = 3.0;
  double trait_scale = 1.0;
  double noise_sd = 0.35;
  double temperature_noise = 0.5;

  // A and C lower false-headline ratings, O raises true-headline ratings.
  static SyntheticParams defaults();
  // Every input rated round_half_up(b0), no noise.
  static SyntheticParams constant(double b0);

  double noise_for(double temperature) const { return noise_sd + temperature_noise * temperature; }

  nlohmann::ordered_json to_json() const;
  static SyntheticParams from_json(const nlohmann::json& j);
};

struct BackendConfig {
  BackendKind backend_kind = BackendKind::Synthetic;
  std::string model_name = "synthetic";
  double temperature = 0.2;
  std::uint64_t seed = 0;                      // synthetic only
  std::string endpoint_url;                    // live only, e.g. https://api.openai.com/v1/chat/completions
  std::string api_key_env = "DISCERN_API_KEY";
  int retry_limit = 3;
  std::chrono::milliseconds retry_backoff{500};  // doubled per transport retry, capped at 8 s
  std::chrono::milliseconds timeout{60'000};
  int max_in_flight = 4;
  int requests_per_minute = 0;                 // 0 = unlimited
  bool trace = false;
  SyntheticParams synthetic = SyntheticParams::defaults();

  // Stable label for grid cells and seeds, e.g. "gpt-4o@0.2".
  std::string cell_label() const;
  nlohmann::ordered_json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

enum class ParseStatus { Ok, Unparseable };
std::string_view to_string(ParseStatus s);
ParseStatus parse_parse_status(std::string_view s);

struct RatingResponse {
  std::string raw_text;
  std::optional<int> rating;
  ParseStatus parse_status = ParseStatus::Unparseable;
  int attempts = 1;
};

// First standalone integer token in [1, 4]. Digits glued to other digits,
// letters or a decimal point ("2020", "A1", "2.5") never qualify.
std::optional<int> parse_rating(std::string_view raw_text);

// The offline rating model. `traits` is empty for the neutral agent.
int synthetic_rate(const std::optional<TraitScores>& traits, const Headline& headline, const SyntheticParams& params,
                   double temperature, rng::Xoshiro256& gen);

struct RatingRequest {
  std::string_view prompt;
  const Headline& headline;
  int repeat = 0;
};

// A rating oracle. Implementations are safe to call from several threads.
class RatingBackend {
 public:
  virtual ~RatingBackend() = default;
  virtual RatingResponse rate(const RatingRequest& request) = 0;
  virtual const BackendConfig& config() const = 0;
};

// Clarification appended to the user message when a reply cannot be parsed.
inline constexpr std::string_view kClarificationLine =
    "Please answer with only a single number: 1, 2, 3, or 4.";

// Chat-completions request body. Byte-stable for equal inputs.
std::string build_request_body(std::string_view prompt, const Headline& headline, const BackendConfig& config,
                               bool with_clarification);
std::string user_message(const Headline& headline, bool with_clarification);

// Pure in (prompt-derived persona, headline, config, repeat).
class SyntheticBackend final : public RatingBackend {
 public:
  SyntheticBackend(BackendConfig config, std::shared_ptr<const Inventory> inventory);
  RatingResponse rate(const RatingRequest& request) override;
  const BackendConfig& config() const override { return config_; }

  std::uint64_t stream_key(std::string_view prompt, const Headline& headline, int repeat) const;

 private:
  BackendConfig config_;
  std::shared_ptr<const Inventory> inventory_;
};

// HTTP transport seam: returns (status, body) or throws TransportError.
struct HttpResponse {
  int status = 0;
  std::string body;
};
using HttpPost = std::function<HttpResponse(const std::string& body)>;

class LiveBackend final : public RatingBackend {
 public:
  // Reads the token from config.api_key_env; throws ConfigError when unset.
  explicit LiveBackend(BackendConfig config);
  // For tests: inject the transport directly.
  LiveBackend(BackendConfig config, HttpPost post);
  ~LiveBackend() override;

  RatingResponse rate(const RatingRequest& request) override;
  const BackendConfig& config() const override { return config_; }

 private:
  struct Limiter;
  BackendConfig config_;
  std::string token_;
  HttpPost post_;
  std::unique_ptr<Limiter> limiter_;
};

std::unique_ptr<RatingBackend> make_backend(const BackendConfig& config, std::shared_ptr<const Inventory> inventory);

// Pulls choices[0].message.content out of a chat-completions response.
std::string extract_reply_text(std::string_view response_body);

}  // namespace discern
