#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace herlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A relabeler response that is empty after truncation; the trajectory is unusable.
class EmptyLabelError : public Error {
 public:
  using Error::Error;
};

// A preference answer outside the prompt's answer map.
class UnmappedAnswerError : public Error {
 public:
  using Error::Error;
};

class TemplateMismatchError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(std::string endpoint, const std::string& what)
      : Error(endpoint + ": " + what), endpoint_(std::move(endpoint)) {}
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
};

class MalformedResponseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Failure inside one pipeline stage; the message is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace herlab
