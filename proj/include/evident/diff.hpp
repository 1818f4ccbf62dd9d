#pragma once

#include <string>
#include <string_view>

namespace evident {

// Unified diff between two texts (line-granular, Myers LCS), with the given
// number of context lines. Returns "" when the inputs are identical.
std::string unified_diff(std::string_view before, std::string_view after,
                         const std::string& before_label, const std::string& after_label,
                         int context = 3);

// Caps a diff at max_lines lines, appending a truncation marker when cut.
std::string truncate_diff(const std::string& diff, int max_lines = 200);

// Replays a unified diff against the original text. Hunk context must match
// exactly; raises precondition on mismatch.
std::string apply_unified_diff(std::string_view original, const std::string& diff);

}  // namespace evident
