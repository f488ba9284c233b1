#include "trove/taxonomy.hpp"

#include <cctype>
#include <sstream>

#include "trove/error.hpp"

namespace trove {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

ClassTaxonomy::ClassTaxonomy()
    : names20_{"void",           "sky",        "car",
               "bus",            "jeep",       "truck",
               "van",            "human",      "building",
               "road",           "barrier",    "ground",
               "cycle rider",    "construction (vehicle)", "bushes",
               "trees",          "motorcycle rider",       "traffic cone",
               "traffic sign",   "sidewalk"},
      names13_{"void",     "car",           "bus",        "truck",   "person",
               "rider",    "road",          "sidewalk",   "building", "traffic poles",
               "vegetation", "terrain",     "sky"} {
  using C = Class13;
  remap_ = {
      C::Void,          // void
      C::Sky,           // sky
      C::Car,           // car
      C::Bus,           // bus
      C::Car,           // jeep
      C::Truck,         // truck
      C::Car,           // van
      C::Person,        // human
      C::Building,      // building
      C::Road,          // road
      C::Void,          // barrier
      C::Terrain,       // ground
      C::Rider,         // cycle rider
      C::Truck,         // construction (vehicle)
      C::Vegetation,    // bushes
      C::Vegetation,    // trees
      C::Rider,         // motorcycle rider
      C::TrafficPoles,  // traffic cone
      C::TrafficPoles,  // traffic sign
      C::Sidewalk,      // sidewalk
  };
  // Cityscapes-like palette
  colors13_ = {{{0, 0, 0},
                {0, 0, 142},
                {0, 60, 100},
                {0, 0, 70},
                {220, 20, 60},
                {255, 0, 0},
                {128, 64, 128},
                {244, 35, 232},
                {70, 70, 70},
                {220, 220, 0},
                {107, 142, 35},
                {152, 251, 152},
                {70, 130, 180}}};
  colors20_ = {{{0, 0, 0},
                {70, 130, 180},
                {0, 0, 142},
                {0, 60, 100},
                {0, 0, 110},
                {0, 0, 70},
                {0, 0, 90},
                {220, 20, 60},
                {70, 70, 70},
                {128, 64, 128},
                {190, 153, 153},
                {152, 251, 152},
                {255, 0, 0},
                {0, 80, 100},
                {85, 107, 47},
                {107, 142, 35},
                {119, 11, 32},
                {250, 170, 30},
                {220, 220, 0},
                {244, 35, 232}}};
}

const ClassTaxonomy& ClassTaxonomy::standard() {
  static const ClassTaxonomy instance;
  return instance;
}

std::optional<Class20> ClassTaxonomy::find20(std::string_view name) const {
  for (std::size_t i = 0; i < names20_.size(); ++i) {
    if (names20_[i] == name || class_slug(names20_[i]) == name) return static_cast<Class20>(i);
  }
  // short form accepted in config files and dataset schemas
  if (name == "construction") return Class20::Construction;
  return std::nullopt;
}

std::optional<Class13> ClassTaxonomy::find13(std::string_view name) const {
  for (std::size_t i = 0; i < names13_.size(); ++i) {
    if (names13_[i] == name || class_slug(names13_[i]) == name) return static_cast<Class13>(i);
  }
  return std::nullopt;
}

void ClassTaxonomy::load_remap13(std::string_view text) {
  std::array<std::optional<Class13>, kNumClasses20> table{};
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw Error(Errc::ConfigError, "remap line " + std::to_string(lineno) + ": expected '<name>: <name>'");
    }
    auto from = find20(trim(std::string_view(line).substr(0, colon)));
    auto to = find13(trim(std::string_view(line).substr(colon + 1)));
    if (!from || !to) {
      throw Error(Errc::ConfigError, "remap line " + std::to_string(lineno) + ": unknown class name");
    }
    table[static_cast<std::size_t>(*from)] = *to;
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i]) throw Error(Errc::ConfigError, "remap table has no entry for '" + names20_[i] + "'");
  }
  if (*table[static_cast<std::size_t>(Class20::Void)] != Class13::Void) {
    throw Error(Errc::ConfigError, "void must map to void");
  }
  for (std::size_t i = 0; i < table.size(); ++i) remap_[i] = *table[i];
}

std::string class_slug(std::string_view name) {
  std::string out;
  bool pending = false;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending && !out.empty()) out.push_back('_');
      pending = false;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      pending = true;
    }
  }
  return out;
}

bool is_vehicle(Class20 c) {
  switch (c) {
    case Class20::Car:
    case Class20::Bus:
    case Class20::Jeep:
    case Class20::Truck:
    case Class20::Van:
    case Class20::Construction:
      return true;
    default:
      return false;
  }
}

}  // namespace trove
