#pragma once

#include <stdexcept>
#include <string>

namespace mvar {

/// Failure categories reported by every stage of the pipeline.
enum class Errc {
  invalid_model,
  unstable_model,
  covariance,           // noise covariance not symmetric PSD
  covariance_singular,  // noise covariance not invertible
  invalid_pair,
  singular_design,
  insufficient_data,
  singular_transform,
  insufficient_segments,
  degenerate_channel,
  degenerate_inverse,
  degenerate_column,
  isolated_instability,
  correlated_noise,
  invalid_argument,
  parse,
  io,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_model: return "invalid-model";
    case Errc::unstable_model: return "unstable-model";
    case Errc::covariance: return "covariance";
    case Errc::covariance_singular: return "covariance-singular";
    case Errc::invalid_pair: return "invalid-pair";
    case Errc::singular_design: return "singular-design";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::singular_transform: return "singular-transform";
    case Errc::insufficient_segments: return "insufficient-segments";
    case Errc::degenerate_channel: return "degenerate-channel";
    case Errc::degenerate_inverse: return "degenerate-inverse";
    case Errc::degenerate_column: return "degenerate-column";
    case Errc::isolated_instability: return "isolated-instability";
    case Errc::correlated_noise: return "correlated-noise";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace mvar
