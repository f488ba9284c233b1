#include <gtest/gtest.h>

#include <set>

#include "trove/error.hpp"
#include "trove/ingest.hpp"
#include "trove/taxonomy.hpp"

namespace trove {
namespace {

TEST(Taxonomy, TwentyNamesVerbatim) {
  const std::array<std::string, 20> expected = {
      "void",        "sky",         "car",        "bus",    "jeep",
      "truck",       "van",         "human",      "building", "road",
      "barrier",     "ground",      "cycle rider", "construction (vehicle)", "bushes",
      "trees",       "motorcycle rider", "traffic cone", "traffic sign", "sidewalk"};
  const auto& tax = ClassTaxonomy::standard();
  for (const auto& name : expected) {
    EXPECT_TRUE(tax.find20(name).has_value()) << name;
  }
  std::set<std::string> unique(tax.names20().begin(), tax.names20().end());
  EXPECT_EQ(unique.size(), 20u);
}

TEST(Taxonomy, ThirteenNames) {
  const std::array<std::string, 13> expected = {"void",     "car",           "bus",        "truck",   "person",
                                                "rider",    "road",          "sidewalk",   "building", "traffic poles",
                                                "vegetation", "terrain",     "sky"};
  const auto& tax = ClassTaxonomy::standard();
  for (const auto& name : expected) EXPECT_TRUE(tax.find13(name).has_value()) << name;
}

TEST(Taxonomy, RemapIsTotalAndSurjective) {
  const auto& tax = ClassTaxonomy::standard();
  std::set<Class13> image;
  for (std::size_t i = 0; i < kNumClasses20; ++i) {
    const Class13 c = tax.to13(static_cast<Class20>(i));
    ASSERT_LT(static_cast<std::size_t>(c), kNumClasses13);
    image.insert(c);
  }
  EXPECT_EQ(image.size(), kNumClasses13);
}

TEST(Taxonomy, DefaultGroups) {
  const auto& t = ClassTaxonomy::standard();
  EXPECT_EQ(t.to13(Class20::Car), Class13::Car);
  EXPECT_EQ(t.to13(Class20::Jeep), Class13::Car);
  EXPECT_EQ(t.to13(Class20::Van), Class13::Car);
  EXPECT_EQ(t.to13(Class20::Bus), Class13::Bus);
  EXPECT_EQ(t.to13(Class20::Truck), Class13::Truck);
  EXPECT_EQ(t.to13(Class20::Construction), Class13::Truck);
  EXPECT_EQ(t.to13(Class20::Human), Class13::Person);
  EXPECT_EQ(t.to13(Class20::CycleRider), Class13::Rider);
  EXPECT_EQ(t.to13(Class20::MotorcycleRider), Class13::Rider);
  EXPECT_EQ(t.to13(Class20::Trees), Class13::Vegetation);
  EXPECT_EQ(t.to13(Class20::Bushes), Class13::Vegetation);
  EXPECT_EQ(t.to13(Class20::Ground), Class13::Terrain);
  EXPECT_EQ(t.to13(Class20::Void), Class13::Void);
  EXPECT_EQ(t.to13(Class20::Sky), Class13::Sky);
}

TEST(Taxonomy, ShippedRemapFileMatchesDefault) {
  ClassTaxonomy loaded;
  loaded.load_remap13(read_text_file(TROVE_DATA_DIR "/remap13.txt"));
  EXPECT_EQ(loaded.remap13(), ClassTaxonomy::standard().remap13());
}

TEST(Taxonomy, RemapOverride) {
  ClassTaxonomy t;
  std::string text;
  for (const auto& n : t.names20()) text += n + ": " + std::string(t.name(t.to13(*t.find20(n)))) + "\n";
  text += "barrier: traffic poles\n";
  t.load_remap13(text);
  EXPECT_EQ(t.to13(Class20::Barrier), Class13::TrafficPoles);
}

TEST(Taxonomy, IncompleteRemapRejected) {
  ClassTaxonomy t;
  try {
    t.load_remap13("void: void\ncar: car\n");
    FAIL() << "expected ConfigError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
}

TEST(Taxonomy, UnknownNameRejected) {
  ClassTaxonomy t;
  EXPECT_THROW(t.load_remap13("spaceship: car\n"), Error);
}

TEST(Taxonomy, Slugs) {
  EXPECT_EQ(class_slug("cycle rider"), "cycle_rider");
  EXPECT_EQ(class_slug("construction (vehicle)"), "construction_vehicle");
  EXPECT_EQ(class_slug("traffic poles"), "traffic_poles");
}

TEST(Taxonomy, Vehicles) {
  EXPECT_TRUE(is_vehicle(Class20::Car));
  EXPECT_TRUE(is_vehicle(Class20::Truck));
  EXPECT_FALSE(is_vehicle(Class20::Human));
  EXPECT_FALSE(is_vehicle(Class20::Trees));
}

}  // namespace
}  // namespace trove
