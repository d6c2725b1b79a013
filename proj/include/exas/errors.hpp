#pragma once

#include <stdexcept>
#include <string>

namespace exas {

// Base of every error raised by the orchestrator. Violations that are data
// (descriptor validation, intent questions) are returned, not thrown.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class StateError : public Error {
  public:
    using Error::Error;
};

class AdmissionError : public Error {
  public:
    using Error::Error;
};

class InsufficientCapacity : public Error {
  public:
    InsufficientCapacity(std::string axis, const std::string& what)
      : Error(what), axis_(std::move(axis)) {}

    const std::string& axis() const noexcept { return axis_; }

  private:
    std::string axis_;
};

class IllegalTransition : public Error {
  public:
    using Error::Error;
};

class UnknownExperiment : public Error {
  public:
    explicit UnknownExperiment(const std::string& id)
      : Error("unknown experiment: " + id) {}
};

class ProvisionFault : public Error {
  public:
    ProvisionFault(std::string node_id, const std::string& message)
      : Error(node_id.empty() ? message : node_id + ": " + message),
        node_id_(std::move(node_id)), message_(message) {}

    const std::string& node_id() const noexcept { return node_id_; }
    const std::string& message() const noexcept { return message_; }

  private:
    std::string node_id_;
    std::string message_;
};

class HandleTornDown : public Error {
  public:
    using Error::Error;
};

class WrongDriverKind : public Error {
  public:
    using Error::Error;
};

class RangeError : public Error {
  public:
    using Error::Error;
};

class EmptyTrace : public Error {
  public:
    EmptyTrace() : Error("trace has no samples") {}
};

class UnitMismatch : public Error {
  public:
    using Error::Error;
};

class StorageError : public Error {
  public:
    using Error::Error;
};

class NotFound : public Error {
  public:
    using Error::Error;
};

class DanglingReference : public Error {
  public:
    using Error::Error;
};

class DuplicateExperiment : public Error {
  public:
    using Error::Error;
};

}  // namespace exas
