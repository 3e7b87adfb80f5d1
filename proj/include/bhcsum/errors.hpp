#pragma once

#include <stdexcept>
#include <string>

namespace bhcsum {

// Exit-code families used by the CLI: 2 config, 3 data, 4 training.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyAdmission : DataError {
    explicit EmptyAdmission(const std::string& msg) : DataError(msg) {}
};

struct TooFewAdmissions : DataError {
    explicit TooFewAdmissions(const std::string& msg) : DataError(msg) {}
};

struct MissingReference : DataError {
    explicit MissingReference(const std::string& msg) : DataError(msg) {}
};

struct MisalignedGuidance : DataError {
    explicit MisalignedGuidance(const std::string& msg) : DataError(msg) {}
};

struct AlignmentError : DataError {
    explicit AlignmentError(const std::string& msg) : DataError(msg) {}
};

struct DimensionMismatch : DataError {
    explicit DimensionMismatch(const std::string& msg) : DataError(msg) {}
};

struct EmptyTraining : DataError {
    explicit EmptyTraining(const std::string& msg) : DataError(msg) {}
};

}  // namespace bhcsum
