#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace thermident {

/// Maps JSON pointers to the 1-based source line where their value starts,
/// so schema errors found after parsing can point back into the file.
class JsonLocator {
 public:
  explicit JsonLocator(std::string_view text);

  /// Line of `pointer`, or of its closest located ancestor; 0 if unknown.
  int line_of(std::string pointer) const;

 private:
  std::unordered_map<std::string, int> lines_;
};

/// A parsed JSON document plus the bookkeeping needed to emit
/// "<source>:<line>: <pointer>: message" schema diagnostics.
class JsonDocument {
 public:
  using json = nlohmann::json;
  using pointer = json::json_pointer;

  /// Throws Error(kSchema) on malformed JSON, with the offending line.
  JsonDocument(std::string text, std::string source_name);

  const json& root() const { return root_; }
  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const pointer& where, const std::string& message) const;

  const json& at(const pointer& where) const;
  const json& object(const pointer& where) const;
  const json& array(const pointer& where) const;
  bool has(const pointer& object_ptr, const std::string& key) const;

  std::string string(const pointer& where) const;
  double number(const pointer& where) const;
  double positive(const pointer& where) const;
  double nonnegative(const pointer& where) const;
  std::int64_t integer(const pointer& where) const;
  std::vector<std::string> strings(const pointer& where) const;

  /// Requires a top-level "schema" string equal to `expected`.
  void expect_schema(std::string_view expected) const;

 private:
  std::string text_;
  std::string source_;
  json root_;
  JsonLocator locator_;
};

}  // namespace thermident
