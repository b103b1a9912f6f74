#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "fm/diagnostic.hpp"

namespace fm::dsl {

enum class Tok {
  Ident,
  Int,
  Dec,
  String,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Colon,
  Comma,
  Dot,
  Slash,
  Arrow,      // ->
  FatArrow,   // =>
  Hash,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
};

inline const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::Dec: return "decimal";
    case Tok::String: return "string";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Colon: return "':'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Slash: return "'/'";
    case Tok::Arrow: return "'->'";
    case Tok::FatArrow: return "'=>'";
    case Tok::Hash: return "'#'";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::End: return "end of input";
  }
  return "?";
}

/// Splits FM source into tokens. Unknown characters become E_LEX
/// diagnostics and are skipped. Columns count bytes.
class Lexer {
 public:
  Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  std::vector<Token> run(std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      SourcePos start = pos();
      if (i_ >= src_.size()) {
        out.push_back({Tok::End, "", span(start)});
        return out;
      }
      char c = src_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t b = i_;
        while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) advance();
        out.push_back({Tok::Ident, std::string(src_.substr(b, i_ - b)), span(start)});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t b = i_;
        while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
        Tok kind = Tok::Int;
        if (i_ + 1 < src_.size() && src_[i_] == '.' && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) &&
            !after_label_hash(out)) {
          kind = Tok::Dec;
          advance();
          while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
        }
        out.push_back({kind, std::string(src_.substr(b, i_ - b)), span(start)});
      } else if (c == '"') {
        lex_string(out, diags, start);
      } else if (!lex_symbol(out, start)) {
        std::size_t len = utf8_length(static_cast<unsigned char>(c));
        std::string bad(src_.substr(i_, len));
        for (std::size_t k = 0; k < len && i_ < src_.size(); ++k) advance();
        diags.push_back(make_error("E_LEX", "unexpected character '" + bad + "'", span(start)));
      }
    }
  }

 private:
  // Inside "#f23.1" the ".1" belongs to the label, not a decimal.
  static bool after_label_hash(const std::vector<Token>& out) {
    std::size_t n = out.size();
    for (std::size_t k = n; k > 0; --k) {
      const Token& t = out[k - 1];
      if (t.kind == Tok::Hash) return true;
      if (t.kind != Tok::Ident && t.kind != Tok::Int && t.kind != Tok::Dot) return false;
    }
    return false;
  }

  static std::size_t utf8_length(unsigned char c) {
    if (c >= 0xF0) return 4;
    if (c >= 0xE0) return 3;
    if (c >= 0xC0) return 2;
    return 1;
  }

  SourcePos pos() const { return {line_, col_}; }
  SourceSpan span(SourcePos start) const { return {file_, start, pos()}; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  void lex_string(std::vector<Token>& out, std::vector<Diagnostic>& diags, SourcePos start) {
    advance();
    std::string value;
    while (i_ < src_.size() && src_[i_] != '"' && src_[i_] != '\n') {
      if (src_[i_] == '\\' && i_ + 1 < src_.size()) {
        advance();
        char e = src_[i_];
        value += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        value += src_[i_];
      }
      advance();
    }
    if (i_ >= src_.size() || src_[i_] != '"') {
      diags.push_back(make_error("E_LEX", "unterminated string literal", span(start)));
    } else {
      advance();
    }
    out.push_back({Tok::String, std::move(value), span(start)});
  }

  bool lex_symbol(std::vector<Token>& out, SourcePos start) {
    struct Sym {
      std::string_view text;
      Tok kind;
    };
    // Longest match first; the UTF-8 operators are accepted as aliases.
    static constexpr Sym kSyms[] = {
        {"->", Tok::Arrow}, {"=>", Tok::FatArrow}, {"!=", Tok::Ne}, {"<=", Tok::Le}, {">=", Tok::Ge},
        {"≠", Tok::Ne}, {"≤", Tok::Le},   {"≥", Tok::Ge}, {"×", Tok::Star},
        {"÷", Tok::Slash}, {"−", Tok::Minus}, {"{", Tok::LBrace}, {"}", Tok::RBrace},
        {"(", Tok::LParen}, {")", Tok::RParen},     {":", Tok::Colon},  {",", Tok::Comma},
        {".", Tok::Dot},    {"/", Tok::Slash},      {"#", Tok::Hash},   {"=", Tok::Eq},
        {"<", Tok::Lt},     {">", Tok::Gt},         {"+", Tok::Plus},   {"-", Tok::Minus},
        {"*", Tok::Star},
    };
    for (const auto& s : kSyms) {
      if (src_.substr(i_, s.text.size()) != s.text) continue;
      std::string text(s.text);
      i_ += s.text.size();
      col_ += static_cast<int>(s.text.size());
      out.push_back({s.kind, std::move(text), span(start)});
      return true;
    }
    return false;
  }

  std::string_view src_;
  std::string file_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline std::vector<Token> lex(std::string_view src, const std::string& file, std::vector<Diagnostic>& diags) {
  return Lexer(src, file).run(diags);
}

}  // namespace fm::dsl
