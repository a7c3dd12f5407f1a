#pragma once

// Small TOML-like format shared by model configs, certificate bundles and
// obligation sidecars.
//
//   # comment
//   key = 1.5e-3
//   name = "text"
//   flag = true
//   M = [[1, 2], [3, 4]]          # arrays may span lines, trailing commas ok
//   [section.sub]                 # table header (dotted path)
//   [[items]]                     # append a table to an array of tables
//
// Tables keep insertion order so that emitted files are reproducible.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fdcert/numerics.hpp"

namespace fdcert::textfmt {

class Value;

class Table {
 public:
  using Entry = std::pair<std::string, Value>;

  Table() = default;

  const Value* find(std::string_view key) const;
  Value* find(std::string_view key);
  bool contains(std::string_view key) const { return find(key) != nullptr; }
  /// Throws ParseError naming the key and the table's line.
  const Value& at(std::string_view key) const;

  Value& set(std::string key, Value v);
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t line() const { return line_; }
  void set_line(std::size_t l) { line_ = l; }

 private:
  std::vector<Entry> entries_;
  std::size_t line_ = 0;
};

using Array = std::vector<Value>;

class Value {
 public:
  Value() = default;
  Value(double d) : v_(d) {}
  Value(int i) : v_(static_cast<double>(i)) {}
  Value(std::size_t i) : v_(static_cast<double>(i)) {}
  Value(bool b) : v_(b) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(Array a) : v_(std::move(a)) {}
  Value(Table t) : v_(std::move(t)) {}

  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_table() const { return std::holds_alternative<Table>(v_); }

  double as_number() const;
  std::int64_t as_int() const;
  std::size_t as_count() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const Array& as_array() const;
  Array& as_array();
  const Table& as_table() const;
  Table& as_table();

  Vector as_vector() const;
  Matrix as_matrix() const;
  SymMatrix as_sym() const;
  std::vector<std::string> as_strings() const;

  std::size_t line() const { return line_; }
  void set_line(std::size_t l) { line_ = l; }

 private:
  std::variant<std::monostate, double, bool, std::string, Array, Table> v_;
  std::size_t line_ = 0;
};

/// Parses a document; errors carry the offending line number.
Table parse(std::string_view text);
Table parse_file(const std::string& path);

/// Shortest-safe decimal form with 17 significant digits.
std::string format_number(double v);

/// Emits documents with a fixed layout: scalars first, then sub-tables and
/// arrays of tables in insertion order. Matrices print one row per line.
std::string emit(const Table& root);

Value matrix_value(const Matrix& m);
Value vector_value(std::span<const double> v);
Value strings_value(const std::vector<std::string>& s);

}  // namespace fdcert::textfmt
