#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spatialqa {

/// One placeable asset class: the noun used in questions, a pool of short
/// attribute descriptions to pick mentions from, and a schematic box.
struct AssetClass {
  std::string class_name;
  std::vector<std::string> attribute_phrases;  // at least one
  double footprint_w{0.5};  // meters, x extent at yaw 0
  double footprint_d{0.5};  // meters, z extent at yaw 0
  double height{0.5};       // meters
  bool countable{true};
};

using Catalog = std::vector<AssetClass>;

/// The built-in table: 30+ indoor classes, 3+ phrases each. Users extend or
/// replace it with a catalog file.
Catalog builtin_catalog();

/// Loads a line-delimited JSON catalog file. Throws IoError on missing or
/// malformed input.
Catalog load_catalog(const std::string& path);

/// Canonical line-delimited serialization; the shipped data file is exactly
/// this rendering of the built-in table.
std::string catalog_to_jsonl(const Catalog& catalog);

/// FNV-1a hash of the canonical serialization, hex-encoded. Recorded in
/// manifests so datasets declare which catalog produced them.
std::string catalog_hash(const Catalog& catalog);

/// Naive English plural, good enough for the catalog's nouns.
std::string pluralize(const std::string& noun);

}  // namespace spatialqa
