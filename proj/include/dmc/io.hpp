#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "dmc/errors.hpp"

namespace dmc::io {

/// Shortest decimal that reads back to the same double.
inline std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Fixed 17 significant digits, the canonical plan format.
inline std::string canonical(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Strict full-string number parse; nullopt-like failure via bool.
inline bool parse_double(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_long(const std::string& text, long long& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

/// Space- or comma-separated list of numbers.
inline bool parse_doubles(const std::string& text, std::vector<double>& out) {
  out.clear();
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return true;
    double v = 0.0;
    if (!parse_double(cur, v)) return false;
    out.push_back(v);
    cur.clear();
    return true;
  };
  for (char c : text) {
    if (c == ' ' || c == ',' || c == '\t') {
      if (!flush()) return false;
    } else {
      cur.push_back(c);
    }
  }
  return flush();
}

inline std::string join_canonical(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(' ');
    s += canonical(v[i]);
  }
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

/// Sectioned key = value text. Sections and keys are kept sorted, so
/// serialization is canonical.
struct Document {
  std::string source = "<memory>";
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::map<std::string, int> section_lines;

  bool has(const std::string& section, const std::string& key) const {
    const auto it = sections.find(section);
    return it != sections.end() && it->second.count(key) > 0;
  }

  void set(const std::string& section, const std::string& key, std::string value) {
    sections[section][key] = Entry{std::move(value), 0};
  }
};

/// Lines: "[section]", "key = value", blank, or comments starting with '#'
/// or ';'. Keys outside a section, duplicates and malformed lines are errors
/// carrying "<source>:<line>".
inline Document parse_document(const std::string& text, const std::string& source = "<memory>") {
  Document doc;
  doc.source = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  bool in_section = false;
  int line = 0;
  auto fail = [&](const std::string& why) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + why);
  };
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail("empty section name");
      if (doc.section_lines.count(section)) fail("duplicate section [" + section + "]");
      doc.section_lines[section] = line;
      doc.sections[section];
      in_section = true;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail("empty key");
    if (!in_section) fail("key '" + key + "' appears before any [section]");
    auto& sec = doc.sections[section];
    if (sec.count(key)) fail("duplicate key '" + section + "." + key + "'");
    sec[key] = Entry{trim(s.substr(eq + 1)), line};
  }
  return doc;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Document load_document(const std::string& path) { return parse_document(read_file(path), path); }

inline std::string serialize(const Document& doc) {
  std::string out;
  bool first = true;
  for (const auto& [name, keys] : doc.sections) {
    if (!first) out += "\n";
    first = false;
    out += "[" + name + "]\n";
    for (const auto& [k, e] : keys) out += k + " = " + e.value + "\n";
  }
  return out;
}

/// Writes to "<path>.tmp" and renames over path.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw NumericalError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

/// CSV with a header row; numbers in shortest round-trip form.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) text_.push_back(',');
      text_ += header[i];
    }
    text_.push_back('\n');
  }

  void row(const std::vector<double>& values) {
    detail::require(values.size() == columns_, "CSV row width differs from the header");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) text_.push_back(',');
      text_ += shortest(values[i]);
    }
    text_.push_back('\n');
  }

  /// Row with empty cells where present is false.
  void row(const std::vector<double>& values, const std::vector<bool>& present) {
    detail::require(values.size() == columns_ && present.size() == columns_, "CSV row width differs from the header");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) text_.push_back(',');
      if (present[i]) text_ += shortest(values[i]);
    }
    text_.push_back('\n');
  }

  const std::string& text() const { return text_; }
  void write(const std::string& path) const { write_atomic(path, text_); }

 private:
  std::size_t columns_;
  std::string text_;
};

/// "name" or "name(arg, arg, ...)"; arguments are kept as trimmed strings.
struct Call {
  std::string name;
  std::vector<std::string> args;

  double number(std::size_t i, const std::string& where) const {
    double v = 0.0;
    if (i >= args.size() || !parse_double(args[i], v)) {
      throw ValidationError(where + ": argument " + std::to_string(i + 1) + " of " + name + " must be a number");
    }
    return v;
  }

  double number_or(std::size_t i, double fallback, const std::string& where) const {
    return i < args.size() ? number(i, where) : fallback;
  }

  void arity(std::size_t lo, std::size_t hi, const std::string& where) const {
    if (args.size() < lo || args.size() > hi) {
      throw ValidationError(where + ": " + name + " takes " +
                            (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
                            " arguments, got " + std::to_string(args.size()));
    }
  }
};

inline Call parse_call(const std::string& text, const std::string& where) {
  const std::string s = trim(text);
  Call c;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    c.name = s;
  } else {
    if (s.back() != ')') throw ValidationError(where + ": missing ')' in '" + s + "'");
    c.name = trim(s.substr(0, open));
    const std::string inner = trim(s.substr(open + 1, s.size() - open - 2));
    if (!inner.empty()) {
      std::string cur;
      for (char ch : inner) {
        if (ch == ',') {
          c.args.push_back(trim(cur));
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      c.args.push_back(trim(cur));
    }
  }
  if (c.name.empty()) throw ValidationError(where + ": empty value");
  for (char ch : c.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) {
      throw ValidationError(where + ": bad name '" + c.name + "'");
    }
  }
  return c;
}

/// Typed access to a Document that tracks which keys were consumed, so that
/// unknown (misspelled) keys can be reported with their line.
class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  const Document& document() const { return doc_; }
  bool has_section(const std::string& s) const { return doc_.sections.count(s) > 0; }

  bool has(const std::string& s, const std::string& k) const { return doc_.has(s, k); }

  /// "<source>:<line>: key 'section.key'" for messages.
  std::string where(const std::string& s, const std::string& k) const {
    int line = 0;
    if (doc_.has(s, k)) line = doc_.sections.at(s).at(k).line;
    return doc_.source + (line ? ":" + std::to_string(line) : "") + ": key '" + s + "." + k + "'";
  }

  const std::string* raw(const std::string& s, const std::string& k) {
    if (!doc_.has(s, k)) return nullptr;
    used_.insert(s + "\n" + k);
    return &doc_.sections.at(s).at(k).value;
  }

  std::string text(const std::string& s, const std::string& k, const std::string& fallback) {
    const auto* v = raw(s, k);
    return v ? *v : fallback;
  }

  std::string required_text(const std::string& s, const std::string& k) {
    const auto* v = raw(s, k);
    if (!v) throw ValidationError(doc_.source + ": missing required key '" + s + "." + k + "'");
    return *v;
  }

  double number(const std::string& s, const std::string& k, double fallback) {
    const auto* v = raw(s, k);
    return v ? to_number(*v, s, k) : fallback;
  }

  double required_number(const std::string& s, const std::string& k) {
    return to_number(required_text(s, k), s, k);
  }

  long long integer(const std::string& s, const std::string& k, long long fallback) {
    const auto* v = raw(s, k);
    if (!v) return fallback;
    long long out = 0;
    if (!parse_long(*v, out)) throw ValidationError(where(s, k) + " must be an integer, got '" + *v + "'");
    return out;
  }

  bool boolean(const std::string& s, const std::string& k, bool fallback) {
    const auto* v = raw(s, k);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ValidationError(where(s, k) + " must be true or false, got '" + *v + "'");
  }

  std::vector<double> numbers(const std::string& s, const std::string& k) {
    const std::string v = required_text(s, k);
    std::vector<double> out;
    if (!parse_doubles(v, out)) throw ValidationError(where(s, k) + " must be a list of numbers");
    return out;
  }

  Call call(const std::string& s, const std::string& k, const std::string& fallback) {
    const auto* v = raw(s, k);
    return parse_call(v ? *v : fallback, where(s, k));
  }

  /// Throws on the first key or section that was never read, restricted to
  /// the given sections (other sections belong to other subcommands).
  void reject_unknown(const std::set<std::string>& sections) const {
    for (const auto& [name, keys] : doc_.sections) {
      if (!sections.count(name)) continue;
      for (const auto& [k, e] : keys) {
        if (!used_.count(name + "\n" + k)) {
          throw ValidationError(doc_.source + ":" + std::to_string(e.line) + ": unknown key '" + name + "." + k + "'");
        }
      }
    }
  }

  /// Throws on any section outside the known set.
  void reject_unknown_sections(const std::set<std::string>& known) const {
    for (const auto& [name, line] : doc_.section_lines) {
      if (!known.count(name)) {
        throw ValidationError(doc_.source + ":" + std::to_string(line) + ": unknown section [" + name + "]");
      }
    }
  }

 private:
  double to_number(const std::string& v, const std::string& s, const std::string& k) const {
    double out = 0.0;
    if (!parse_double(v, out)) throw ValidationError(where(s, k) + " must be a finite number, got '" + v + "'");
    return out;
  }

  const Document& doc_;
  std::set<std::string> used_;
};

}  // namespace dmc::io
