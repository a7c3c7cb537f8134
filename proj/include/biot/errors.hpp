#pragma once

#include <stdexcept>
#include <string>

namespace biot {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-readable tag written into CLI error records.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept = 0;
};

#define BIOT_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                        \
    public:                                                            \
        using Error::Error;                                            \
        const char* kind() const noexcept override { return #Name; }   \
    }

BIOT_DEFINE_ERROR(RangeViolation);
BIOT_DEFINE_ERROR(DimensionMismatch);
BIOT_DEFINE_ERROR(DegenerateCell);
BIOT_DEFINE_ERROR(IncompatibleSpaces);
BIOT_DEFINE_ERROR(FactorizationFailure);
BIOT_DEFINE_ERROR(EigFailure);
BIOT_DEFINE_ERROR(SingularNormMatrix);
BIOT_DEFINE_ERROR(ConfigError);

#undef BIOT_DEFINE_ERROR

} // namespace biot
