#include "wseg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wseg/error.hpp"

namespace wseg {
namespace {

class TomlLine {
 public:
  TomlLine(std::string_view s, int line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("config line " + std::to_string(line_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::vector<std::string> key() {
    std::vector<std::string> parts;
    for (;;) {
      skip_ws();
      if (peek() == '"') {
        parts.push_back(basic_string());
      } else {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
          ++pos_;
        if (start == pos_) fail("expected a key");
        parts.emplace_back(s_.substr(start, pos_ - start));
      }
      skip_ws();
      if (peek() != '.') return parts;
      ++pos_;
    }
  }

  nlohmann::json value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') {
      const std::size_t end = s_.find('\'', pos_ + 1);
      if (end == std::string_view::npos) fail("unterminated literal string");
      std::string v(s_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return v;
    }
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      for (;;) {
        arr.push_back(value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          if (peek() == ']') {
            ++pos_;
            return arr;
          }
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    if (digits.empty()) fail("missing value");
    try {
      std::size_t used = 0;
      if (digits.find_first_of(".eE") == std::string::npos && digits != "inf" && digits != "nan") {
        const long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      } else {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

 private:
  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char ch = s_[pos_++];
      if (ch == '\\' && pos_ < s_.size()) {
        const char e = s_[pos_++];
        switch (e) {
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          case '\\': ch = '\\'; break;
          case '"': ch = '"'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += ch;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

nlohmann::json& descend(nlohmann::json& root, const std::vector<std::string>& path, const TomlLine& line) {
  nlohmann::json* node = &root;
  for (const auto& part : path) {
    if (!node->is_object()) line.fail("key '" + part + "' redefines a non-table value");
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
  }
  return *node;
}

}  // namespace

nlohmann::json parse_toml(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  std::vector<std::string> table;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    ++line_no;
    TomlLine line(raw, line_no);
    if (!line.at_end_or_comment()) {
      if (line.peek() == '[') {
        line.expect('[');
        table = line.key();
        line.expect(']');
        descend(root, table, line);
      } else {
        std::vector<std::string> key = line.key();
        line.expect('=');
        nlohmann::json v = line.value();
        std::vector<std::string> path = table;
        path.insert(path.end(), key.begin(), key.end() - 1);
        nlohmann::json& parent = descend(root, path, line);
        if (parent.contains(key.back())) line.fail("duplicate key '" + key.back() + "'");
        parent[key.back()] = std::move(v);
      }
      if (!line.at_end_or_comment()) line.fail("trailing characters");
    }
    start = end + 1;
  }
  return root;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".toml") return parse_toml(text);
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw FormatError("config file '" + path.string() + "' must hold a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config file '" + path.string() + "': " + e.what());
  }
}

}  // namespace wseg
