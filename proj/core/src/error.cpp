#include "trove/error.hpp"

#include <iostream>

namespace trove {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::EmptyScene: return "EmptyScene";
    case Errc::XmlMalformed: return "XmlMalformed";
    case Errc::UnresolvedNodeRef: return "UnresolvedNodeRef";
    case Errc::DegenerateFootprint: return "DegenerateFootprint";
    case Errc::TruncatedRecord: return "TruncatedRecord";
    case Errc::NonFinitePoint: return "NonFinitePoint";
    case Errc::UnknownLabelId: return "UnknownLabelId";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::TriangulationFailure: return "TriangulationFailure";
    case Errc::NoAssetForCategory: return "NoAssetForCategory";
    case Errc::NoCameraRig: return "NoCameraRig";
    case Errc::EmptyDensity: return "EmptyDensity";
    case Errc::DanglingAssetRef: return "DanglingAssetRef";
    case Errc::CameraBelowGround: return "CameraBelowGround";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::CorruptStream: return "CorruptStream";
    case Errc::MeshLoadFailure: return "MeshLoadFailure";
    case Errc::DegenerateCamera: return "DegenerateCamera";
    case Errc::MissingMotion: return "MissingMotion";
    case Errc::UnknownClassId: return "UnknownClassId";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::OsmUnavailable: return "OsmUnavailable";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

void log_warning(const Warning& w) {
  std::cerr << "warning: " << to_string(w.code) << ": " << w.message << '\n';
}

}  // namespace trove
