#pragma once

namespace crem {

// Library release. Bump on any change that alters numerical output.
inline constexpr const char* kLibraryVersion = "0.1.0";

// Identifies the field construction (key chaining, normal inversion, zero-run
// bridge). Recorded in every output record; experiments produced under
// different field versions are not comparable sample-for-sample.
inline constexpr const char* kFieldVersion = "crem-field/1";

} // namespace crem
