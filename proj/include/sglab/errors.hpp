#pragma once

#include <stdexcept>
#include <string>

namespace sglab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define SGLAB_DEFINE_ERROR(Name)               \
    class Name : public Error                  \
    {                                          \
    public:                                    \
        using Error::Error;                    \
    }

SGLAB_DEFINE_ERROR(InvalidMatrix);
SGLAB_DEFINE_ERROR(SingularMatrix);
SGLAB_DEFINE_ERROR(DimensionError);
SGLAB_DEFINE_ERROR(ConfigError);
SGLAB_DEFINE_ERROR(DataError);
SGLAB_DEFINE_ERROR(InsufficientData);
SGLAB_DEFINE_ERROR(ContractionViolation);
SGLAB_DEFINE_ERROR(AnchorError);
SGLAB_DEFINE_ERROR(RangeError);
SGLAB_DEFINE_ERROR(DomainError);
SGLAB_DEFINE_ERROR(InsufficientHorizon);

#undef SGLAB_DEFINE_ERROR

} // namespace sglab
