#pragma once

#include <string>
#include <vector>

namespace fm {

struct SourcePos {
  int line = 1;  // 1-based
  int col = 1;   // 1-based
  friend bool operator==(const SourcePos&, const SourcePos&) = default;
  friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

struct SourceSpan {
  std::string file;
  SourcePos start;
  SourcePos end;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  SourceSpan span;
};

inline Diagnostic make_error(std::string code, std::string message, SourceSpan span = {}) {
  return {Severity::Error, std::move(code), std::move(message), std::move(span)};
}

inline Diagnostic make_warning(std::string code, std::string message, SourceSpan span = {}) {
  return {Severity::Warning, std::move(code), std::move(message), std::move(span)};
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

/// "file:line:col: severity[code]: message"
inline std::string format_diagnostic(const Diagnostic& d) {
  std::string out = d.span.file.empty() ? std::string("<input>") : d.span.file;
  out += ':' + std::to_string(d.span.start.line) + ':' + std::to_string(d.span.start.col) + ": ";
  out += d.severity == Severity::Error ? "error" : "warning";
  out += '[' + d.code + "]: " + d.message;
  return out;
}

}  // namespace fm
