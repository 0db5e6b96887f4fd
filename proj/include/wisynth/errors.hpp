#pragma once

#include <stdexcept>
#include <string>

namespace wisynth {

// Error taxonomy shared by the library and the CLI exit-code mapping.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroCfr : std::domain_error {
  ZeroCfr() : std::domain_error("phase undefined for zero CFR") {}
};
struct EmptySeries : ShapeError {
  EmptySeries() : ShapeError("empty amplitude series") {}
};
struct BadMagic : ParseError {
  using ParseError::ParseError;
};
struct UnsupportedVersion : ParseError {
  using ParseError::ParseError;
};
struct TruncatedPayload : ParseError {
  using ParseError::ParseError;
};
struct RangeOverflow : ParseError {
  using ParseError::ParseError;
};
struct IndivisiblePacketCount : ShapeError {
  using ShapeError::ShapeError;
};
struct EmptyDataset : ShapeError {
  EmptyDataset() : ShapeError("dataset is empty") {}
};
struct NotScalar : ShapeError {
  NotScalar() : ShapeError("backward requires a scalar loss") {}
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace wisynth
