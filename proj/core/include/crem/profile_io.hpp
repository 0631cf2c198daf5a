#pragma once

#include "crem/covariance.hpp"

#include <string>

namespace crem {

// Profile files are whitespace-separated "t A" breakpoint pairs, one per
// line; blank lines and lines starting with # are skipped. Validation errors
// report the offending line number.
CovarianceProfile load_profile_file(const std::string& path);
void save_profile_file(const std::string& path, const CovarianceProfile& p);

// Resolves a builtin name ("brw", "square", "concave_square", "two_slope",
// "two_slope:<c1>") or falls back to loading the string as a file path. When
// canon_id is given it receives the identifier to record.
CovarianceProfile resolve_profile(const std::string& name_or_path,
                                  std::string* canon_id = nullptr);

} // namespace crem
