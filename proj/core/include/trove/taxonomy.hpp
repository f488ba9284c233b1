#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trove {

// Native 20-class label set. Values are the ids written into semantic rasters
// before remapping.
enum class Class20 : std::uint8_t {
  Void = 0,
  Sky,
  Car,
  Bus,
  Jeep,
  Truck,
  Van,
  Human,
  Building,
  Road,
  Barrier,
  Ground,
  CycleRider,
  Construction,
  Bushes,
  Trees,
  MotorcycleRider,
  TrafficCone,
  TrafficSign,
  Sidewalk,
};

// Benchmark-compatible 13-class label set.
enum class Class13 : std::uint8_t {
  Void = 0,
  Car,
  Bus,
  Truck,
  Person,
  Rider,
  Road,
  Sidewalk,
  Building,
  TrafficPoles,
  Vegetation,
  Terrain,
  Sky,
};

inline constexpr std::size_t kNumClasses20 = 20;
inline constexpr std::size_t kNumClasses13 = 13;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

// Class names, the 20->13 reduction table and visualization colors. The
// default table ships with the library; load_remap13 overrides the table
// from a "<20-class name>: <13-class name>" text file.
class ClassTaxonomy {
 public:
  ClassTaxonomy();  // default table

  static const ClassTaxonomy& standard();

  const std::array<std::string, kNumClasses20>& names20() const { return names20_; }
  const std::array<std::string, kNumClasses13>& names13() const { return names13_; }
  const std::array<Class13, kNumClasses20>& remap13() const { return remap_; }
  const std::array<Rgb8, kNumClasses13>& colors13() const { return colors13_; }
  const std::array<Rgb8, kNumClasses20>& colors20() const { return colors20_; }

  std::string_view name(Class20 c) const { return names20_[static_cast<std::size_t>(c)]; }
  std::string_view name(Class13 c) const { return names13_[static_cast<std::size_t>(c)]; }
  Class13 to13(Class20 c) const { return remap_[static_cast<std::size_t>(c)]; }

  std::optional<Class20> find20(std::string_view name) const;
  std::optional<Class13> find13(std::string_view name) const;

  // Replaces the remap table from text; throws Error(ConfigError) when the
  // result would not be total over the 20-class set.
  void load_remap13(std::string_view text);

 private:
  std::array<std::string, kNumClasses20> names20_;
  std::array<std::string, kNumClasses13> names13_;
  std::array<Class13, kNumClasses20> remap_;
  std::array<Rgb8, kNumClasses13> colors13_;
  std::array<Rgb8, kNumClasses20> colors20_;
};

// Lowercase, spaces and punctuation folded to '_' ("cycle rider" -> "cycle_rider",
// "construction (vehicle)" -> "construction_vehicle").
std::string class_slug(std::string_view name);

bool is_vehicle(Class20 c);

}  // namespace trove
