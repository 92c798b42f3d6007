#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CASCADE_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

CASCADE_DEFINE_ERROR(ParseError);
CASCADE_DEFINE_ERROR(SchemaError);
CASCADE_DEFINE_ERROR(TokenizationError);
CASCADE_DEFINE_ERROR(AnnotationError);
CASCADE_DEFINE_ERROR(SpecError);
CASCADE_DEFINE_ERROR(ConfigError);
CASCADE_DEFINE_ERROR(IoError);
CASCADE_DEFINE_ERROR(AlignmentError);
CASCADE_DEFINE_ERROR(ParameterError);
CASCADE_DEFINE_ERROR(SupportError);
CASCADE_DEFINE_ERROR(BandTooNarrowError);
CASCADE_DEFINE_ERROR(DivergenceError);
CASCADE_DEFINE_ERROR(CheckpointError);
CASCADE_DEFINE_ERROR(IndexError);

#undef CASCADE_DEFINE_ERROR

}  // namespace cascade
