#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

#define SENTINEL_ERROR(Name)                                            \
    class Name : public std::runtime_error {                            \
    public:                                                             \
        explicit Name(const std::string& what) : std::runtime_error(what) {} \
    };

SENTINEL_ERROR(MalformedMessage)
SENTINEL_ERROR(InvariantViolation)
SENTINEL_ERROR(KeysPurged)
SENTINEL_ERROR(MalformedTopology)
SENTINEL_ERROR(NonPositiveDefinite)
SENTINEL_ERROR(SingularInnovation)
SENTINEL_ERROR(UnknownSignalGroup)
SENTINEL_ERROR(UnmappedAnomaly)
SENTINEL_ERROR(InsufficientData)
SENTINEL_ERROR(OutOfRange)
SENTINEL_ERROR(SchemaMismatch)

#undef SENTINEL_ERROR

}  // namespace sentinel
