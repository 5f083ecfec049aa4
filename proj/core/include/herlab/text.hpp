#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace herlab {

inline constexpr std::string_view kInstructionPrefix = "Lift a ";

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

/// Lowercase, drop punctuation, split on whitespace ("It's a car!" -> its, a, car).
std::vector<std::string> tokenize(std::string_view text);

/// Text up to (excluding) the first newline, whitespace-trimmed. May be empty.
std::string first_line(std::string_view raw);

/// Turns a raw relabeler response into an instruction: keep the first line,
/// trim it and prefix "Lift a ". Text that already carries the prefix is left
/// as is, so the function is idempotent. Throws EmptyLabelError when nothing
/// is left after truncation.
std::string postprocess(std::string_view raw);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Substitutes `value` for the first "{}" in `pattern`.
std::string format_phrase(std::string_view pattern, std::string_view value);

}  // namespace herlab
