#pragma once

#include <stdexcept>
#include <string>

namespace condu {

//! Base of every error raised by the library. `kind()` is a stable
//! machine-readable tag used in the CLI's JSON error records.
class Error : public std::runtime_error
{
public:
  Error(std::string kind, const std::string& what)
    : std::runtime_error(what)
    , kind_(std::move(kind))
  {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define CONDU_DEFINE_ERROR(Name)                                               \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    explicit Name(const std::string& what)                                     \
      : Error(#Name, what)                                                     \
    {}                                                                         \
  }

CONDU_DEFINE_ERROR(InvalidArgument);
CONDU_DEFINE_ERROR(InvalidBandwidth);
CONDU_DEFINE_ERROR(DimensionMismatch);
CONDU_DEFINE_ERROR(DegenerateSample);
CONDU_DEFINE_ERROR(ComplexityBudgetExceeded);
CONDU_DEFINE_ERROR(BudgetExceedsPopulation);
CONDU_DEFINE_ERROR(MeasureTooLarge);
CONDU_DEFINE_ERROR(InvalidProjectionOrder);
CONDU_DEFINE_ERROR(NoClosedFormConditional);
CONDU_DEFINE_ERROR(ZeroDensityWindow);
CONDU_DEFINE_ERROR(SampleTooSmall);
CONDU_DEFINE_ERROR(EmptyBandwidthRange);
CONDU_DEFINE_ERROR(BandwidthOutOfRange);
CONDU_DEFINE_ERROR(BoundedClassHasNoRemainder);
CONDU_DEFINE_ERROR(IoError);
CONDU_DEFINE_ERROR(SchemaError);

#undef CONDU_DEFINE_ERROR

//! Configuration validation failure; `field()` names the offending JSON path.
class ConfigError : public Error
{
public:
  ConfigError(std::string field, const std::string& what)
    : Error("ConfigError", what)
    , field_(std::move(field))
  {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

} // namespace condu
