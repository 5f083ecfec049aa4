#include "herlab/text.hpp"

#include <cctype>
#include <charconv>

#include "herlab/error.hpp"

namespace herlab {

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string trim(std::string_view text) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string first_line(std::string_view raw) {
  const auto newline = raw.find('\n');
  return trim(raw.substr(0, newline));
}

std::string postprocess(std::string_view raw) {
  std::string line = first_line(raw);
  if (line.empty()) {
    throw EmptyLabelError("empty label after truncation to the first line");
  }
  if (line.starts_with(kInstructionPrefix)) {
    return line;
  }
  return std::string(kInstructionPrefix) + line;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_phrase(std::string_view pattern, std::string_view value) {
  const auto slot = pattern.find("{}");
  if (slot == std::string_view::npos) {
    return std::string(pattern);
  }
  std::string out;
  out.reserve(pattern.size() + value.size());
  out.append(pattern.substr(0, slot));
  out.append(value);
  out.append(pattern.substr(slot + 2));
  return out;
}

}  // namespace herlab
