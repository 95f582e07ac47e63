#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wgimg {

enum class ErrorKind {
  InvalidArgument,
  CutoffResonance,
  SeparationTooSmall,
  DegenerateNormalizer,
  GeometryError,
  IllConditioned,
  ResidualTooLarge,
  EmptyArray,
  PartialApertureError,
  UnderdeterminedAperture,
  MalformedFile,
  DataMismatch,
  EigenFailure,
  DegenerateImage,
  GridMismatch,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CutoffResonance: return "CutoffResonance";
    case ErrorKind::SeparationTooSmall: return "SeparationTooSmall";
    case ErrorKind::DegenerateNormalizer: return "DegenerateNormalizer";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::EmptyArray: return "EmptyArray";
    case ErrorKind::PartialApertureError: return "PartialApertureError";
    case ErrorKind::UnderdeterminedAperture: return "UnderdeterminedAperture";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::DataMismatch: return "DataMismatch";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::DegenerateImage: return "DegenerateImage";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace wgimg
