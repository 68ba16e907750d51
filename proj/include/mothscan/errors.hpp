#pragma once

#include <stdexcept>
#include <string>

namespace mothscan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct ExtractionError : Error {
    using Error::Error;
};

struct DetectionError : Error {
    using Error::Error;
};

struct SplitError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// Raised when training hits a non-finite loss; carries the epoch it happened in.
struct TrainingError : Error {
    TrainingError(const std::string& what, long epoch_index)
        : Error(what), epoch(epoch_index) {}
    long epoch;
};

}  // namespace mothscan
