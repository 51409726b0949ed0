#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace discern {

inline constexpr std::string_view kToolVersion = "discern 0.1.0";

// Big-Five domains in the fixed reporting order.
enum class Trait { E = 0, A, C, N, O };
inline constexpr std::array<Trait, 5> kTraits{Trait::E, Trait::A, Trait::C, Trait::N, Trait::O};
inline constexpr std::size_t kTraitCount = kTraits.size();

std::string_view to_string(Trait t);
Trait parse_trait(std::string_view s);

enum class InventoryKind { Bfi2, Bfi2S };
std::string_view to_string(InventoryKind k);
InventoryKind parse_inventory_kind(std::string_view s);

enum class ScaleFormat { Likert, Expanded };
std::string_view to_string(ScaleFormat f);
ScaleFormat parse_scale_format(std::string_view s);

// Directory holding item banks, label tables, templates and fixtures.
// DISCERN_DATA_DIR overrides the location baked in at build time.
std::filesystem::path default_data_dir();

std::string read_text_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace discern
