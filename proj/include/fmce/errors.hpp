#pragma once

#include <stdexcept>
#include <string>

namespace fmce {

// Parse/validation failure on an input file (loss logs, datasets, checkpoints).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// CQI never fell to the threshold; no convergence epoch exists.
struct NotConvergedError : std::runtime_error {
    explicit NotConvergedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Phase segmentation cannot be performed on this curve.
struct SegmentationError : std::runtime_error {
    explicit SegmentationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat curve: total log-loss drop is zero.
struct DegenerateCurveError : SegmentationError {
    explicit DegenerateCurveError(const std::string& msg) : SegmentationError(msg) {}
};

// Strictly increasing markers are unachievable before the convergence epoch.
struct InfeasibleSegmentationError : SegmentationError {
    int colliding_phase;
    InfeasibleSegmentationError(const std::string& msg, int phase)
        : SegmentationError(msg), colliding_phase(phase) {}
};

}  // namespace fmce
