#include "funcda/text.hpp"

#include <cctype>

namespace funcda {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string fold(std::string_view s) { return to_lower(trim(s)); }

std::string label_key(std::string_view s) {
  // Trim anything that is not a letter or digit from both ends.
  size_t b = 0;
  size_t e = s.size();
  while (b < e && !is_alnum(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && !is_alnum(static_cast<unsigned char>(s[e - 1]))) --e;

  std::string out;
  out.reserve(e - b);
  bool pending_sep = false;
  for (size_t i = b; i < e; ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_space(c) || c == '_' || c == '-') {
      pending_sep = true;
      continue;
    }
    if (pending_sep && !out.empty()) out.push_back(' ');
    pending_sep = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace funcda
