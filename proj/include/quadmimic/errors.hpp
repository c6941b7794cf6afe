#pragma once

#include <stdexcept>
#include <string>

namespace quadmimic {

// Malformed input text (bad float, wrong column count, bad header).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input that violates a documented contract.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Query outside the valid domain (e.g. sample time past clip end).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate geometry (collinear keypoints, zero-length axis).
struct GeometryError : std::runtime_error {
  explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse detected at runtime (backward before forward, wrong stage).
struct StateError : std::runtime_error {
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Not enough data to estimate a statistic.
struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

// File I/O failure.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value during optimization; carries the diagnostic dump path.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_path(std::move(dump)) {}
  std::string dump_path;
};

}  // namespace quadmimic
