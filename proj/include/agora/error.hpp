#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agora {

// Base for every failure the library reports. Findings (audit flags) are not
// errors and never throw.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSON on a given 1-based line of a JSONL file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A well-formed record that violates the schema (missing or mistyped field).
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ": field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Block sequence that cannot be grouped into a context.
class StructureError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  ScoringError(std::size_t step_index, const std::string& what)
      : Error("step " + std::to_string(step_index) + ": " + what), step_index_(step_index) {}
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Method and reference logs do not cover the same task ids.
class PairingError : public Error {
 public:
  PairingError(std::string task_id, const std::string& what)
      : Error("task '" + task_id + "': " + what), task_id_(std::move(task_id)) {}
  const std::string& task_id() const noexcept { return task_id_; }

 private:
  std::string task_id_;
};

}  // namespace agora
