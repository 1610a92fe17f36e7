#pragma once

#include <stdexcept>
#include <string>

namespace iface {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// geometry
class NonUnitSpeed : public Error { public: using Error::Error; };
class DegenerateTangents : public Error { public: using Error::Error; };
class OutOfTube : public Error { public: using Error::Error; };
class SingularChart : public Error { public: using Error::Error; };

// wave
class BlowUp : public Error { public: using Error::Error; };
class ChartUnavailable : public Error { public: using Error::Error; };
class InvalidGrid : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// diagnostics / decomposition
class InsufficientSnapshots : public Error { public: using Error::Error; };
class OutOfBox : public Error { public: using Error::Error; };
class HypothesisFailed : public Error { public: using Error::Error; };
class NotUnique : public Error { public: using Error::Error; };
class InsufficientSlices : public Error { public: using Error::Error; };

// odelab
class NoZeroCrossing : public Error { public: using Error::Error; };
class HypothesisViolated : public Error { public: using Error::Error; };
class NoContraction : public Error { public: using Error::Error; };

// harness
class NonPositiveValue : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

}  // namespace iface
