#pragma once

#include <stdexcept>
#include <string>

namespace poolal {

// Every error raised by the library derives from Error; the subclasses map
// onto the distinct failure classes the CLI and HTTP layer report.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "error"; }
};

#define POOLAL_DEFINE_ERROR(Name, Code)                       \
  class Name : public Error {                                 \
   public:                                                    \
    using Error::Error;                                       \
    const char* code() const noexcept override { return Code; } \
  };

POOLAL_DEFINE_ERROR(ConfigError, "config_error")
POOLAL_DEFINE_ERROR(ShapeError, "shape_error")
POOLAL_DEFINE_ERROR(NumericError, "numeric_error")
POOLAL_DEFINE_ERROR(PreconditionError, "precondition_error")
POOLAL_DEFINE_ERROR(CapacityError, "capacity_error")
POOLAL_DEFINE_ERROR(IoError, "io_error")
POOLAL_DEFINE_ERROR(ParseError, "parse_error")
POOLAL_DEFINE_ERROR(LabelRangeError, "label_range_error")
POOLAL_DEFINE_ERROR(EmptyDatasetError, "empty_dataset")
POOLAL_DEFINE_ERROR(NotFoundError, "not_found")
POOLAL_DEFINE_ERROR(ConflictError, "conflict")
POOLAL_DEFINE_ERROR(ValidationError, "validation_error")

#undef POOLAL_DEFINE_ERROR

}  // namespace poolal
