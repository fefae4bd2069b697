#pragma once

#include <array>
#include <charconv>
#include <stdexcept>
#include <string>

namespace pgm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad caller input: unknown names, overlapping sets, invalid options.
struct ArgumentError : Error {
  using Error::Error;
};

// Graph-structural violations: directed cycles, non-decomposable factorisation targets.
struct StructureError : Error {
  using Error::Error;
};

// Malformed input files.
struct IngestError : Error {
  using Error::Error;
};

// Numerical failures: singular matrices, degenerate variances, failed pivots.
struct NumericError : Error {
  using Error::Error;
};

// Conditioning on an impossible event.
struct EvidenceError : Error {
  using Error::Error;
};

// A sampler produced no usable draws.
struct SamplingError : Error {
  using Error::Error;
};

/// Shortest round-trip decimal form of a real; used for every serialised number.
inline std::string real_repr(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace pgm
