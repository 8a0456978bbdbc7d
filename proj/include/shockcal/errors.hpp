// Error types thrown across the library. Every failure mode has its own
// type so callers (and tests) can catch precisely what they expect.

#pragma once

#include <stdexcept>
#include <string>

namespace shockcal {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// signal-core
struct DegenerateSignal : Error { using Error::Error; };
struct NonPositivePeak : Error { using Error::Error; };
struct MismatchedSets : Error { using Error::Error; };
struct NonPositiveReferencePeak : Error { using Error::Error; };

// synth-rig
struct InvalidPulseParams : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };

// srs
struct InvalidRange : Error { using Error::Error; };
struct FrequencyAboveNyquist : Error { using Error::Error; };

// nn
struct DimensionMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct StaleTape : Error { using Error::Error; };

// calibnet
struct DegenerateDecode : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// baselines
struct InvalidCutoff : Error { using Error::Error; };
struct FilterTooLong : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };

// pipeline / file formats
struct IoError : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };
struct MissingModelForMethod : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

}  // namespace shockcal
