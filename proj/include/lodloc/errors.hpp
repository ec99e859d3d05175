#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lodloc {

// Base of all library errors. The category is a stable machine-readable
// tag, used by the CLI for exit reporting.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define LODLOC_ERROR_TYPE(Name, tag)                              \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& message)                 \
            : Error(tag, message) {}                              \
    }

// model loading / validation
LODLOC_ERROR_TYPE(ParseError, "parse");
LODLOC_ERROR_TYPE(ValidationError, "validation");
LODLOC_ERROR_TYPE(TriangulationError, "triangulation");
LODLOC_ERROR_TYPE(DuplicateBuildingError, "duplicate-building");

// camera / trajectory
LODLOC_ERROR_TYPE(LastFrameError, "last-frame");
LODLOC_ERROR_TYPE(BehindCameraError, "behind-camera");
LODLOC_ERROR_TYPE(OutOfBoundsError, "out-of-bounds");

// imaging / matching
LODLOC_ERROR_TYPE(ImageTooSmallError, "image-too-small");
LODLOC_ERROR_TYPE(EmptySetError, "empty-set");
LODLOC_ERROR_TYPE(ThresholdError, "threshold");
LODLOC_ERROR_TYPE(DimensionMismatchError, "dimension-mismatch");
LODLOC_ERROR_TYPE(MissingMaskError, "missing-mask");

// lifting / resection
LODLOC_ERROR_TYPE(MissError, "miss");
LODLOC_ERROR_TYPE(InsufficientPointsError, "precondition");
LODLOC_ERROR_TYPE(DegenerateConfigError, "degenerate-config");
LODLOC_ERROR_TYPE(SingularNormalMatrixError, "singular-normal-matrix");

// reporting / orchestration
LODLOC_ERROR_TYPE(DivisionByZeroError, "division-by-zero");
LODLOC_ERROR_TYPE(ConfigError, "config");
LODLOC_ERROR_TYPE(IoError, "io");

#undef LODLOC_ERROR_TYPE

}  // namespace lodloc
