#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trove {

enum class Errc {
  // ingest
  MissingFile,
  SchemaViolation,
  EmptyScene,
  XmlMalformed,
  UnresolvedNodeRef,
  DegenerateFootprint,
  TruncatedRecord,
  NonFinitePoint,
  UnknownLabelId,
  // geo / layout
  DegenerateInput,
  TriangulationFailure,
  // placement / background
  NoAssetForCategory,
  NoCameraRig,
  EmptyDensity,
  // scene
  DanglingAssetRef,
  CameraBelowGround,
  SchemaVersionMismatch,
  CorruptStream,
  MeshLoadFailure,
  // annotate / post
  DegenerateCamera,
  MissingMotion,
  UnknownClassId,
  EmptyImage,
  // pipeline
  OsmUnavailable,
  ConfigError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

// Every failure the library reports is an Error; other exception types
// escaping a public entry point are bugs.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// Non-fatal findings (skipped ways, remapped labels, fallbacks) collected
// alongside a result instead of being thrown.
struct Warning {
  Errc code;
  std::string message;

  bool operator==(const Warning&) const = default;
};

using Warnings = std::vector<Warning>;

// Logs to standard error with a "warning:" prefix.
void log_warning(const Warning& w);

}  // namespace trove
