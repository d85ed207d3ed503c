#pragma once

#include <stdexcept>
#include <string>

namespace uq {

// One exception type with a machine-checkable kind. Messages carry context,
// the kind carries identity for tests and exit-code mapping.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    NotPositiveDefinite,
    NoConvergence,
    DimensionMismatch,
    DimensionTooLarge,
    NegativeVariance,
    Unstable,
    RegionBoundary,
    RankDeficient,
    BiasedNetwork,
    Diverged,
    EmptyInput,
    LengthMismatch,
    ClassAbsent,
    BadMagic,
    TruncatedFile,
    CountMismatch,
    BadSize,
    ParseError,
    NonPlanarInput,
    ConfigError,
    IoError,
  };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

  const char* kind_name() const {
    switch (kind_) {
      case Kind::NotPositiveDefinite: return "NotPositiveDefinite";
      case Kind::NoConvergence: return "NoConvergence";
      case Kind::DimensionMismatch: return "DimensionMismatch";
      case Kind::DimensionTooLarge: return "DimensionTooLarge";
      case Kind::NegativeVariance: return "NegativeVariance";
      case Kind::Unstable: return "Unstable";
      case Kind::RegionBoundary: return "RegionBoundary";
      case Kind::RankDeficient: return "RankDeficient";
      case Kind::BiasedNetwork: return "BiasedNetwork";
      case Kind::Diverged: return "Diverged";
      case Kind::EmptyInput: return "EmptyInput";
      case Kind::LengthMismatch: return "LengthMismatch";
      case Kind::ClassAbsent: return "ClassAbsent";
      case Kind::BadMagic: return "BadMagic";
      case Kind::TruncatedFile: return "TruncatedFile";
      case Kind::CountMismatch: return "CountMismatch";
      case Kind::BadSize: return "BadSize";
      case Kind::ParseError: return "ParseError";
      case Kind::NonPlanarInput: return "NonPlanarInput";
      case Kind::ConfigError: return "ConfigError";
      case Kind::IoError: return "IoError";
    }
    return "Unknown";
  }

 private:
  Kind kind_;
};

}  // namespace uq
