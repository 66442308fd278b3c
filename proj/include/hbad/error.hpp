#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hbad {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or model parameters.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A primitive or model force was evaluated outside its domain.
class DomainError : public Error {
  public:
    DomainError(std::string operation, const std::string& what)
        : Error(operation + ": " + what), operation_(std::move(operation)) {}

    /// Name of the operation (AD primitive or model force) that failed.
    const std::string& operation() const noexcept { return operation_; }

  private:
    std::string operation_;
};

/// Domain error raised while sampling a model along the time grid.
class SampleError : public DomainError {
  public:
    SampleError(const DomainError& cause, std::size_t sample)
        : DomainError(cause.operation(),
                      std::string(cause.what()) + " (at sample " + std::to_string(sample) + ")"),
          sample_(sample) {}

    std::size_t sample() const noexcept { return sample_; }

  private:
    std::size_t sample_;
};

/// Numerical failure that cannot be reported through a result object.
class NumericalError : public Error {
  public:
    using Error::Error;
};

}  // namespace hbad
