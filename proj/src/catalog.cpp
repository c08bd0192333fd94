#include "spatialqa/catalog.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spatialqa/errors.hpp"

namespace spatialqa {

namespace {

AssetClass make(std::string name, std::vector<std::string> phrases, double w, double d, double h,
                bool countable = true) {
  AssetClass a;
  a.class_name = std::move(name);
  a.attribute_phrases = std::move(phrases);
  a.footprint_w = w;
  a.footprint_d = d;
  a.height = h;
  a.countable = countable;
  return a;
}

}  // namespace

Catalog builtin_catalog() {
  Catalog c;
  c.push_back(make("chair", {"brown wooden chair", "black plastic chair", "gray fabric chair", "white metal chair"}, 0.45, 0.45, 0.90));
  c.push_back(make("armchair", {"green velvet armchair", "beige leather armchair", "striped armchair"}, 0.80, 0.80, 1.00));
  c.push_back(make("sofa", {"blue fabric sofa", "brown leather sofa", "gray sectional sofa"}, 2.00, 0.90, 0.80, false));
  c.push_back(make("coffee table", {"round glass coffee table", "dark oak coffee table", "low marble coffee table"}, 1.10, 0.60, 0.45));
  c.push_back(make("dining table", {"long wooden dining table", "white round dining table", "black dining table"}, 1.60, 0.90, 0.75, false));
  c.push_back(make("desk", {"white standing desk", "cluttered office desk", "small writing desk"}, 1.40, 0.70, 0.75));
  c.push_back(make("bed", {"queen bed with white sheets", "wooden bed frame", "unmade single bed"}, 2.00, 1.60, 0.60, false));
  c.push_back(make("wardrobe", {"tall oak wardrobe", "white sliding-door wardrobe", "antique wardrobe"}, 1.20, 0.60, 2.00, false));
  c.push_back(make("dresser", {"six-drawer dresser", "mirrored dresser", "painted blue dresser"}, 1.00, 0.50, 0.90));
  c.push_back(make("bookshelf", {"crowded tall bookshelf", "ladder bookshelf", "narrow white bookshelf"}, 0.90, 0.35, 1.80));
  c.push_back(make("floor lamp", {"brass floor lamp", "arc floor lamp", "tripod floor lamp"}, 0.35, 0.35, 1.70));
  c.push_back(make("table lamp", {"ceramic table lamp", "green banker's lamp", "small bedside lamp"}, 0.25, 0.25, 0.50));
  c.push_back(make("television", {"wall-size flat television", "old boxy television", "slim black television"}, 1.10, 0.25, 0.70));
  c.push_back(make("potted plant", {"tall potted fern", "small potted cactus", "leafy rubber plant"}, 0.40, 0.40, 1.10));
  c.push_back(make("vase", {"blue ceramic vase", "tall glass vase", "clay flower vase"}, 0.20, 0.20, 0.45));
  c.push_back(make("cup", {"white porcelain cup", "striped paper cup", "small espresso cup"}, 0.10, 0.10, 0.12));
  c.push_back(make("mug", {"red coffee mug", "chipped enamel mug", "oversized cartoon mug"}, 0.12, 0.12, 0.12));
  c.push_back(make("plate", {"white dinner plate", "patterned ceramic plate", "square black plate"}, 0.25, 0.25, 0.03));
  c.push_back(make("bowl", {"wooden salad bowl", "blue cereal bowl", "steel mixing bowl"}, 0.18, 0.18, 0.08));
  c.push_back(make("wine bottle", {"green wine bottle", "dusty wine bottle", "half-empty wine bottle"}, 0.08, 0.08, 0.30));
  c.push_back(make("laptop", {"open silver laptop", "black gaming laptop", "sticker-covered laptop"}, 0.35, 0.25, 0.25));
  c.push_back(make("pillow", {"fluffy white pillow", "embroidered throw pillow", "long body pillow"}, 0.50, 0.35, 0.15));
  c.push_back(make("box", {"cardboard moving box", "wooden storage box", "transparent plastic box"}, 0.45, 0.45, 0.45));
  c.push_back(make("basket", {"wicker laundry basket", "wire fruit basket", "woven picnic basket"}, 0.35, 0.35, 0.30));
  c.push_back(make("trash can", {"steel pedal trash can", "small office trash can", "green recycling can"}, 0.30, 0.30, 0.50));
  c.push_back(make("stool", {"round bar stool", "three-legged wooden stool", "folding step stool"}, 0.35, 0.35, 0.50));
  c.push_back(make("bench", {"upholstered bedroom bench", "rustic wooden bench", "metal entryway bench"}, 1.30, 0.40, 0.50));
  c.push_back(make("cabinet", {"glass-front display cabinet", "gray filing cabinet", "kitchen cabinet"}, 0.80, 0.45, 1.00));
  c.push_back(make("nightstand", {"two-drawer nightstand", "round marble nightstand", "mid-century nightstand"}, 0.50, 0.40, 0.60));
  c.push_back(make("mirror", {"full-length standing mirror", "gold-framed mirror", "oval dressing mirror"}, 0.70, 0.10, 1.60));
  c.push_back(make("ottoman", {"tufted storage ottoman", "round leather ottoman", "patterned pouf ottoman"}, 0.60, 0.60, 0.40));
  c.push_back(make("microwave", {"black countertop microwave", "retro red microwave", "stainless microwave"}, 0.50, 0.35, 0.30));
  c.push_back(make("kettle", {"whistling stovetop kettle", "electric glass kettle", "copper tea kettle"}, 0.20, 0.20, 0.25));
  c.push_back(make("suitcase", {"hard-shell silver suitcase", "battered leather suitcase", "red rolling suitcase"}, 0.45, 0.25, 0.65));
  return c;
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog file: " + path);
  Catalog catalog;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("catalog parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
    AssetClass a;
    a.class_name = j.at("class_name").get<std::string>();
    a.attribute_phrases = j.at("phrases").get<std::vector<std::string>>();
    a.footprint_w = j.at("footprint_w").get<double>();
    a.footprint_d = j.at("footprint_d").get<double>();
    a.height = j.at("height").get<double>();
    a.countable = j.at("countable").get<bool>();
    if (a.attribute_phrases.empty() || a.footprint_w <= 0 || a.footprint_d <= 0 || a.height <= 0) {
      throw IoError("catalog entry invalid at line " + std::to_string(line_no));
    }
    catalog.push_back(std::move(a));
  }
  if (catalog.empty()) throw IoError("catalog file has no entries: " + path);
  return catalog;
}

std::string catalog_to_jsonl(const Catalog& catalog) {
  std::ostringstream out;
  for (const auto& a : catalog) {
    nlohmann::ordered_json j;
    j["class_name"] = a.class_name;
    j["phrases"] = a.attribute_phrases;
    j["footprint_w"] = a.footprint_w;
    j["footprint_d"] = a.footprint_d;
    j["height"] = a.height;
    j["countable"] = a.countable;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string catalog_hash(const Catalog& catalog) {
  const std::string bytes = catalog_to_jsonl(catalog);
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string pluralize(const std::string& noun) {
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::char_traits<char>::length(suffix);
    return noun.size() >= n && noun.compare(noun.size() - n, n, suffix) == 0;
  };
  if (ends_with("shelf")) return noun.substr(0, noun.size() - 1) + "ves";
  if (ends_with("s") || ends_with("x") || ends_with("ch") || ends_with("sh")) return noun + "es";
  if (noun.size() >= 2 && noun.back() == 'y') {
    const char prev = noun[noun.size() - 2];
    if (prev != 'a' && prev != 'e' && prev != 'i' && prev != 'o' && prev != 'u') {
      return noun.substr(0, noun.size() - 1) + "ies";
    }
  }
  return noun + "s";
}

}  // namespace spatialqa
