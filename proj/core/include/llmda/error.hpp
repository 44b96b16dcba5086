// Copyright 2026 The llmda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmda {

// Every failure surfaced by the library derives from Error. kind() is a
// stable machine-readable tag used by the CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("InvalidArgument", message) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("LengthMismatch", "length mismatch: " + std::to_string(a) +
                                    " vs " + std::to_string(b)) {}
};

class MalformedDiff : public Error {
 public:
  MalformedDiff(std::size_t line, const std::string& message)
      : Error("MalformedDiff",
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t index, std::string field)
      : Error("SchemaError", "record " + std::to_string(index) +
                                 ": missing or invalid field '" + field + "'"),
        index_(index),
        field_(std::move(field)) {}

  std::size_t index() const noexcept { return index_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t index_;
  std::string field_;
};

class EmptyClass : public Error {
 public:
  explicit EmptyClass(const std::string& label)
      : Error("EmptyClass", "class '" + label + "' has no samples") {}
};

class ServiceUnavailable : public Error {
 public:
  ServiceUnavailable(int attempts, const std::string& last_error)
      : Error("ServiceUnavailable",
              "explanation service unavailable after " +
                  std::to_string(attempts) + " attempt(s): " + last_error),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class CacheCorrupt : public Error {
 public:
  explicit CacheCorrupt(const std::string& path)
      : Error("CacheCorrupt", "cache entry failed checksum: " + path) {}
};

class BackendMissingEntry : public Error {
 public:
  BackendMissingEntry(const std::string& sample_id, const std::string& modality)
      : Error("BackendMissingEntry", "no precomputed embedding for sample '" +
                                         sample_id + "' (" + modality + ")") {}
};

class InsufficientClassMembers : public Error {
 public:
  InsufficientClassMembers(std::string missing, const std::string& message)
      : Error("InsufficientClassMembers", message),
        missing_(std::move(missing)) {}

  // "security" or "non-security".
  const std::string& missing_class() const noexcept { return missing_; }

 private:
  std::string missing_;
};

class SingleClassError : public Error {
 public:
  SingleClassError()
      : Error("SingleClassError", "AUC requires both classes to be present") {}
};

class DegenerateData : public Error {
 public:
  explicit DegenerateData(const std::string& message)
      : Error("DegenerateData", message) {}
};

class DivergenceDetected : public Error {
 public:
  DivergenceDetected(int epoch, std::string last_good_checkpoint)
      : Error("DivergenceDetected",
              "non-finite loss at epoch " + std::to_string(epoch) +
                  (last_good_checkpoint.empty()
                       ? std::string()
                       : "; last good checkpoint: " + last_good_checkpoint)),
        epoch_(epoch),
        checkpoint_(std::move(last_good_checkpoint)) {}

  int epoch() const noexcept { return epoch_; }
  const std::string& last_good_checkpoint() const noexcept {
    return checkpoint_;
  }

 private:
  int epoch_;
  std::string checkpoint_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error("FormatError", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

// Invalid run configuration, detected before any work starts.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("ConfigError", message) {}
};

// An upstream artifact (checkpoint, dataset, ...) is absent.
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(std::string path)
      : Error("MissingArtifact", "missing artifact: " + path),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace llmda
