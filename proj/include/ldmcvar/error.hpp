#pragma once

#include <stdexcept>
#include <string>

namespace ldmcvar {

/// Invalid model parameters, configs or arguments. The CLI maps this to exit code 2.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// The requested operation has no meaning for the given fading model.
class UnsupportedModel : public ParameterError {
 public:
  explicit UnsupportedModel(const std::string& what) : ParameterError(what) {}
};

/// Non-finite values, failed brackets, or diverging iterates. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ldmcvar
