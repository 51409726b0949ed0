#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "discern/corpus.hpp"
#include "discern/inventory.hpp"
#include "discern/persona.hpp"

namespace test {

inline std::filesystem::path data_dir() { return DISCERN_TEST_DATA_DIR; }
inline std::filesystem::path fixtures_dir() { return DISCERN_TEST_FIXTURES_DIR; }
inline std::string cli_path() { return DISCERN_CLI_PATH; }

inline const discern::Inventory& inventory() {
  static const discern::Inventory inv = discern::Inventory::load(data_dir());
  return inv;
}

inline std::shared_ptr<const discern::Inventory> shared_inventory() {
  static const auto inv = std::make_shared<const discern::Inventory>(discern::Inventory::load(data_dir()));
  return inv;
}

inline const discern::PromptTemplate& prompt_template() {
  static const discern::PromptTemplate t = discern::PromptTemplate::load(data_dir());
  return t;
}

inline const discern::Corpus& fixture_corpus() {
  static const discern::Corpus c = discern::load_corpus(data_dir() / "fixtures" / "headlines_fixture.json");
  return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("discern-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<discern::ItemResponse> constant_responses(const discern::ItemBank& bank, int value) {
  std::vector<discern::ItemResponse> out;
  for (const auto& item : bank.items()) out.push_back({item.item_id, value});
  return out;
}

inline std::vector<discern::ItemResponse> random_responses(const discern::ItemBank& bank, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> v(1, 5);
  std::vector<discern::ItemResponse> out;
  for (const auto& item : bank.items()) out.push_back({item.item_id, v(gen)});
  return out;
}

inline constexpr int kPropertyCases = 1000;

}  // namespace test
