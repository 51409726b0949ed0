#include "discern/common.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "discern/error.hpp"

namespace discern {

std::string_view to_string(Trait t) {
  static constexpr std::array<std::string_view, 5> names{"E", "A", "C", "N", "O"};
  return names[static_cast<std::size_t>(t)];
}

Trait parse_trait(std::string_view s) {
  for (auto t : kTraits)
    if (to_string(t) == s) return t;
  throw ValidationError("unknown trait '" + std::string(s) + "' (expected one of E, A, C, N, O)");
}

std::string_view to_string(InventoryKind k) {
  return k == InventoryKind::Bfi2 ? "BFI2" : "BFI2S";
}

InventoryKind parse_inventory_kind(std::string_view s) {
  if (s == "BFI2") return InventoryKind::Bfi2;
  if (s == "BFI2S") return InventoryKind::Bfi2S;
  throw ValidationError("unknown inventory kind '" + std::string(s) + "' (expected BFI2 or BFI2S)");
}

std::string_view to_string(ScaleFormat f) {
  return f == ScaleFormat::Likert ? "Likert" : "Expanded";
}

ScaleFormat parse_scale_format(std::string_view s) {
  if (s == "Likert") return ScaleFormat::Likert;
  if (s == "Expanded") return ScaleFormat::Expanded;
  throw ValidationError("unknown scale format '" + std::string(s) + "' (expected Likert or Expanded)");
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("DISCERN_DATA_DIR"); env && *env) return env;
#ifdef DISCERN_DEFAULT_DATA_DIR
  return DISCERN_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace discern
