#include "fdcert/text_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fdcert/error.hpp"

namespace fdcert::textfmt {

// ---------------------------------------------------------------------------
// Table / Value

const Value* Table::find(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

Value* Table::find(std::string_view key) {
  for (auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

const Value& Table::at(std::string_view key) const {
  if (const Value* v = find(key)) return *v;
  throw ParseError(line_, "missing key '" + std::string(key) + "'");
}

Value& Table::set(std::string key, Value v) {
  if (Value* existing = find(key)) {
    *existing = std::move(v);
    return *existing;
  }
  entries_.emplace_back(std::move(key), std::move(v));
  return entries_.back().second;
}

namespace {

[[noreturn]] void type_error(std::size_t line, const char* want) {
  throw ParseError(line, std::string("expected ") + want);
}

}  // namespace

double Value::as_number() const {
  if (!is_number()) type_error(line_, "a number");
  return std::get<double>(v_);
}

std::int64_t Value::as_int() const {
  const double d = as_number();
  if (d != std::floor(d) || std::abs(d) > 9.0e15) type_error(line_, "an integer");
  return static_cast<std::int64_t>(d);
}

std::size_t Value::as_count() const {
  const auto i = as_int();
  if (i < 0) type_error(line_, "a nonnegative integer");
  return static_cast<std::size_t>(i);
}

bool Value::as_bool() const {
  if (!is_bool()) type_error(line_, "true or false");
  return std::get<bool>(v_);
}

const std::string& Value::as_string() const {
  if (!is_string()) type_error(line_, "a string");
  return std::get<std::string>(v_);
}

const Array& Value::as_array() const {
  if (!is_array()) type_error(line_, "an array");
  return std::get<Array>(v_);
}

Array& Value::as_array() {
  if (!is_array()) type_error(line_, "an array");
  return std::get<Array>(v_);
}

const Table& Value::as_table() const {
  if (!is_table()) type_error(line_, "a table");
  return std::get<Table>(v_);
}

Table& Value::as_table() {
  if (!is_table()) type_error(line_, "a table");
  return std::get<Table>(v_);
}

Vector Value::as_vector() const {
  // A bare number is accepted as a length-1 vector.
  if (is_number()) return {as_number()};
  Vector out;
  for (const auto& e : as_array()) out.push_back(e.as_number());
  return out;
}

Matrix Value::as_matrix() const {
  if (is_number()) return Matrix{{as_number()}};
  const auto& rows = as_array();
  std::vector<std::vector<double>> data;
  data.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.is_array()) type_error(r.line(), "a matrix row (array of numbers)");
    data.push_back(r.as_vector());
    if (data.back().size() != data.front().size())
      throw ParseError(r.line(), "ragged matrix: rows differ in length");
  }
  for (const auto& r : data)
    for (double v : r)
      if (!std::isfinite(v)) throw ParseError(line_, "non-finite matrix entry");
  return Matrix::from_rows(data);
}

SymMatrix Value::as_sym() const {
  const Matrix m = as_matrix();
  if (!m.is_square()) throw ParseError(line_, "expected a square matrix");
  const double scale = std::max(m.max_abs(), 1.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw ParseError(line_, "matrix is not symmetric");
  return SymMatrix(m);
}

std::vector<std::string> Value::as_strings() const {
  std::vector<std::string> out;
  for (const auto& e : as_array()) out.push_back(e.as_string());
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Table run() {
    Table root;
    root.set_line(1);
    Table* current = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = header(root);
      } else {
        key_value(*current);
      }
    }
    return root;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (peek() == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all_space() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (peek() == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "'");
    get();
  }

  static bool is_key_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  }

  std::string bare_key() {
    skip_inline_space();
    if (peek() == '"') return string_literal();
    const std::size_t start = pos_;
    while (!eof() && is_key_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{bare_key()};
    skip_inline_space();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(bare_key());
      skip_inline_space();
    }
    return parts;
  }

  Table* header(Table& root) {
    const std::size_t hdr_line = line_;
    ++pos_;
    const bool is_array = peek() == '[';
    if (is_array) ++pos_;
    const auto path = dotted_key();
    if (peek() != ']') fail("expected ']' to close table header");
    ++pos_;
    if (is_array) {
      if (peek() != ']') fail("expected ']]' to close array-of-tables header");
      ++pos_;
    }
    end_of_line();

    Table* t = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) t = descend(*t, path[i], hdr_line);
    const std::string& last = path.back();
    Value* existing = t->find(last);
    if (is_array) {
      if (existing == nullptr) {
        Value v{Array{}};
        v.set_line(hdr_line);
        existing = &t->set(last, std::move(v));
      }
      if (!existing->is_array()) throw ParseError(hdr_line, "'" + last + "' is not an array of tables");
      Table fresh;
      fresh.set_line(hdr_line);
      Value tv{std::move(fresh)};
      tv.set_line(hdr_line);
      existing->as_array().push_back(std::move(tv));
      return &existing->as_array().back().as_table();
    }
    if (existing != nullptr) {
      if (!existing->is_table()) throw ParseError(hdr_line, "'" + last + "' is not a table");
      return &existing->as_table();
    }
    Table fresh;
    fresh.set_line(hdr_line);
    Value tv{std::move(fresh)};
    tv.set_line(hdr_line);
    return &t->set(last, std::move(tv)).as_table();
  }

  Table* descend(Table& t, const std::string& key, std::size_t hdr_line) {
    Value* v = t.find(key);
    if (v == nullptr) {
      Table fresh;
      fresh.set_line(hdr_line);
      Value tv{std::move(fresh)};
      tv.set_line(hdr_line);
      v = &t.set(key, std::move(tv));
    }
    if (v->is_table()) return &v->as_table();
    if (v->is_array() && !v->as_array().empty() && v->as_array().back().is_table())
      return &v->as_array().back().as_table();
    throw ParseError(hdr_line, "'" + key + "' is not a table");
  }

  void key_value(Table& t) {
    const std::size_t kv_line = line_;
    const auto path = dotted_key();
    skip_inline_space();
    if (peek() != '=') fail("expected '=' after key");
    ++pos_;
    skip_inline_space();
    Value v = value();
    Table* target = &t;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) target = descend(*target, path[i], kv_line);
    if (target->contains(path.back())) throw ParseError(kv_line, "duplicate key '" + path.back() + "'");
    target->set(path.back(), std::move(v));
    end_of_line();
  }

  Value value() {
    const std::size_t vline = line_;
    Value v;
    const char c = peek();
    if (c == '"') {
      v = Value(string_literal());
    } else if (c == '[') {
      v = Value(array());
    } else if (s_.substr(pos_, 4) == "true" && !is_key_char(char_at(pos_ + 4))) {
      pos_ += 4;
      v = Value(true);
    } else if (s_.substr(pos_, 5) == "false" && !is_key_char(char_at(pos_ + 5))) {
      pos_ += 5;
      v = Value(false);
    } else {
      v = Value(number());
    }
    v.set_line(vline);
    return v;
  }

  char char_at(std::size_t p) const { return p < s_.size() ? s_[p] : '\0'; }

  double number() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E' ||
          c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string tok(s_.substr(start, pos_ - start));
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    const char* first = tok.c_str();
    if (*first == '+') ++first;
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(first, tok.c_str() + tok.size(), d);
    if (ec != std::errc() || ptr != tok.c_str() + tok.size())
      fail("malformed number '" + tok + "'");
    return d;
  }

  std::string string_literal() {
    if (peek() != '"') fail("expected '\"'");
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
    return out;
  }

  Array array() {
    ++pos_;
    Array out;
    while (true) {
      skip_all_space();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(value());
      skip_all_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

Table parse(std::string_view text) { return Parser(text).run(); }

Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    throw ParseError(e.line(), path + ": " + msg.substr(msg.find(": ") + 2));
  }
}

// ---------------------------------------------------------------------------
// Emitter

std::string format_number(double v) {
  if (!std::isfinite(v)) throw InputError("cannot serialize a non-finite number");
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

bool is_table_array(const Value& v) {
  if (!v.is_array() || v.as_array().empty()) return false;
  for (const auto& e : v.as_array())
    if (!e.is_table()) return false;
  return true;
}

bool is_matrix(const Value& v) {
  if (!v.is_array() || v.as_array().empty()) return false;
  for (const auto& e : v.as_array())
    if (!e.is_array()) return false;
  return true;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string inline_value(const Value& v) {
  if (v.is_number()) return format_number(v.as_number());
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  if (v.is_string()) return quote(v.as_string());
  if (v.is_array()) {
    std::string out = "[";
    bool first = true;
    for (const auto& e : v.as_array()) {
      if (!first) out += ", ";
      first = false;
      out += inline_value(e);
    }
    return out + "]";
  }
  throw InputError("inline tables are not supported by the emitter");
}

void emit_table(std::string& out, const Table& t, const std::string& path) {
  for (const auto& [k, v] : t.entries()) {
    if (v.is_table() || is_table_array(v)) continue;
    if (is_matrix(v)) {
      out += k + " = [\n";
      for (const auto& row : v.as_array()) out += "  " + inline_value(row) + ",\n";
      out += "]\n";
    } else {
      out += k + " = " + inline_value(v) + "\n";
    }
  }
  for (const auto& [k, v] : t.entries()) {
    const std::string sub = path.empty() ? k : path + "." + k;
    if (v.is_table()) {
      out += "\n[" + sub + "]\n";
      emit_table(out, v.as_table(), sub);
    } else if (is_table_array(v)) {
      for (const auto& e : v.as_array()) {
        out += "\n[[" + sub + "]]\n";
        emit_table(out, e.as_table(), sub);
      }
    }
  }
}

}  // namespace

std::string emit(const Table& root) {
  std::string out;
  emit_table(out, root, "");
  return out;
}

Value matrix_value(const Matrix& m) {
  Array rows;
  rows.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(vector_value(m.row(i)));
  return Value(std::move(rows));
}

Value vector_value(std::span<const double> v) {
  Array a;
  a.reserve(v.size());
  for (double d : v) a.emplace_back(d);
  return Value(std::move(a));
}

Value strings_value(const std::vector<std::string>& s) {
  Array a;
  a.reserve(s.size());
  for (const auto& e : s) a.emplace_back(e);
  return Value(std::move(a));
}

}  // namespace fdcert::textfmt
