#include "thermident/json_doc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thermident/error.hpp"

namespace thermident {
namespace {

std::string escape_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Minimal structural scanner; it assumes the text already parsed cleanly.
class Scanner {
 public:
  Scanner(std::string_view text, std::unordered_map<std::string, int>& lines)
      : text_(text), lines_(lines) {}

  void run() {
    skip_ws();
    value("");
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
      } else if (c != ' ' && c != '\t' && c != '\r') {
        return;
      }
      ++pos_;
    }
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
      }
      out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  void value(const std::string& path) {
    lines_.emplace(path, line_);
    switch (peek()) {
      case '{': {
        ++pos_;
        skip_ws();
        while (peek() == '"') {
          std::string key = string_token();
          skip_ws();
          ++pos_;  // ':'
          skip_ws();
          value(path + "/" + escape_token(key));
          skip_ws();
          if (peek() == ',') {
            ++pos_;
            skip_ws();
          }
        }
        ++pos_;  // '}'
        break;
      }
      case '[': {
        ++pos_;
        skip_ws();
        std::size_t index = 0;
        while (peek() != ']' && pos_ < text_.size()) {
          value(path + "/" + std::to_string(index++));
          skip_ws();
          if (peek() == ',') {
            ++pos_;
            skip_ws();
          }
        }
        ++pos_;
        break;
      }
      case '"':
        string_token();
        break;
      default:
        while (pos_ < text_.size()) {
          char c = text_[pos_];
          if (c == ',' || c == '}' || c == ']' || c == ' ' || c == '\n' ||
              c == '\t' || c == '\r') {
            break;
          }
          ++pos_;
        }
    }
  }

  std::string_view text_;
  std::unordered_map<std::string, int>& lines_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

int line_at_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

JsonLocator::JsonLocator(std::string_view text) {
  Scanner scanner(text, lines_);
  scanner.run();
}

int JsonLocator::line_of(std::string pointer) const {
  while (true) {
    if (auto it = lines_.find(pointer); it != lines_.end()) {
      return it->second;
    }
    if (pointer.empty()) {
      return 0;
    }
    pointer.erase(pointer.rfind('/'));
  }
}

JsonDocument::JsonDocument(std::string text, std::string source_name)
    : text_(std::move(text)), source_(std::move(source_name)), locator_("") {
  try {
    root_ = json::parse(text_);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << source_ << ":" << line_at_offset(text_, e.byte == 0 ? 0 : e.byte - 1)
        << ": malformed JSON: " << e.what();
    throw Error(ErrorCode::kSchema, msg.str());
  }
  locator_ = JsonLocator(text_);
}

void JsonDocument::fail(const pointer& where, const std::string& message) const {
  std::ostringstream msg;
  const std::string ptr = where.to_string();
  msg << source_ << ":" << locator_.line_of(ptr) << ": " << (ptr.empty() ? "/" : ptr)
      << ": " << message;
  throw Error(ErrorCode::kSchema, msg.str());
}

const JsonDocument::json& JsonDocument::at(const pointer& where) const {
  if (!root_.contains(where)) {
    const std::string ptr = where.to_string();
    const std::string key = ptr.substr(ptr.rfind('/') + 1);
    fail(where.parent_pointer(), "missing required field '" + key + "'");
  }
  return root_.at(where);
}

const JsonDocument::json& JsonDocument::object(const pointer& where) const {
  const json& v = at(where);
  if (!v.is_object()) {
    fail(where, "expected an object");
  }
  return v;
}

const JsonDocument::json& JsonDocument::array(const pointer& where) const {
  const json& v = at(where);
  if (!v.is_array()) {
    fail(where, "expected an array");
  }
  return v;
}

bool JsonDocument::has(const pointer& object_ptr, const std::string& key) const {
  return root_.contains(object_ptr) && root_.at(object_ptr).is_object() &&
         root_.at(object_ptr).contains(key);
}

std::string JsonDocument::string(const pointer& where) const {
  const json& v = at(where);
  if (!v.is_string()) {
    fail(where, "expected a string");
  }
  return v.get<std::string>();
}

double JsonDocument::number(const pointer& where) const {
  const json& v = at(where);
  if (!v.is_number()) {
    fail(where, "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    fail(where, "expected a finite number");
  }
  return d;
}

double JsonDocument::positive(const pointer& where) const {
  const double d = number(where);
  if (!(d > 0.0)) {
    fail(where, "must be strictly positive");
  }
  return d;
}

double JsonDocument::nonnegative(const pointer& where) const {
  const double d = number(where);
  if (d < 0.0) {
    fail(where, "must be non-negative");
  }
  return d;
}

std::int64_t JsonDocument::integer(const pointer& where) const {
  const json& v = at(where);
  if (!v.is_number_integer()) {
    fail(where, "expected an integer");
  }
  return v.get<std::int64_t>();
}

std::vector<std::string> JsonDocument::strings(const pointer& where) const {
  const json& v = array(where);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(string(where / i));
  }
  return out;
}

void JsonDocument::expect_schema(std::string_view expected) const {
  const std::string tag = string(pointer("/schema"));
  if (tag != expected) {
    fail(pointer("/schema"),
         "unsupported schema '" + tag + "', expected '" + std::string(expected) + "'");
  }
}

}  // namespace thermident
