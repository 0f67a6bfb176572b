#pragma once

namespace edacam {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the preprocessing pipeline changes in a way that
// invalidates cached windows.
inline constexpr const char* kPreprocVersion = "pp-1";

inline constexpr const char* kCheckpointMagic = "EDCK";

}  // namespace edacam
