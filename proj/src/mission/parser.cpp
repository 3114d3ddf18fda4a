#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fluc/mission.hpp"

namespace fluc::mission {

namespace {

bool is_blank(std::string_view s) {
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct SyntaxError {
  std::string message;
};

// Recursive descent over a single physical line. A line holds zero or more
// calls separated by ';', optionally followed by a '#' comment.
class LineParser {
 public:
  LineParser(std::string_view text, int line) : s_(text), line_(line) {}

  std::vector<PrimitiveCall> statements() {
    std::vector<PrimitiveCall> out;
    for (;;) {
      skip_ws();
      if (at_end_of_statements()) break;
      out.push_back(call());
      skip_ws();
      if (peek() == ';') {
        ++pos_;
        continue;
      }
      if (!at_end_of_statements()) fail("trailing characters after call: '" + rest() + "'");
      break;
    }
    return out;
  }

 private:
  PrimitiveCall call() {
    PrimitiveCall c;
    c.source_line = line_;
    if (!ident_start(peek())) fail("expected a function name, found " + describe_here());
    c.name = ident();
    skip_ws();
    expect('(');
    skip_ws();
    if (peek() != ')') {
      for (;;) {
        argument(c);
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          continue;
        }
        break;
      }
    }
    skip_ws();
    if (peek() != ')') {
      if (eof()) fail("unbalanced parentheses: missing ')'");
      fail("expected ',' or ')', found " + describe_here());
    }
    ++pos_;
    return c;
  }

  void argument(PrimitiveCall& c) {
    if (ident_start(peek())) {
      const std::size_t save = pos_;
      std::string name = ident();
      skip_ws();
      if (peek() == '=') {
        ++pos_;
        skip_ws();
        for (const auto& [k, v] : c.kwargs)
          if (k == name) fail("duplicate keyword argument '" + name + "'");
        c.kwargs.emplace_back(std::move(name), value());
        return;
      }
      pos_ = save;
    }
    if (!c.kwargs.empty()) fail("positional argument follows keyword argument");
    c.args.push_back(value());
  }

  Value value() {
    const char ch = peek();
    if (ch == '[') return list();
    if (ch == '"' || ch == '\'') return string_literal();
    if (ident_start(ch)) {
      const std::string word = ident();
      if (word == "true" || word == "True") return 1.0;
      if (word == "false" || word == "False") return 0.0;
      fail("unknown token '" + word + "'");
    }
    return number();
  }

  Value list() {
    expect('[');
    NumberList items;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return items;
    }
    for (;;) {
      skip_ws();
      items.push_back(number());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return items;
      }
      if (eof()) fail("unbalanced brackets: missing ']'");
      fail("expected ',' or ']' in list, found " + describe_here());
    }
  }

  std::string string_literal() {
    const char quote = s_[pos_++];
    std::string out;
    while (!eof()) {
      const char ch = s_[pos_++];
      if (ch == quote) return out;
      if (ch == '\\') {
        if (eof()) break;
        const char esc = s_[pos_++];
        switch (esc) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '\\': out.push_back('\\'); break;
          case '"': out.push_back('"'); break;
          case '\'': out.push_back('\''); break;
          default: fail(std::string("unknown escape '\\") + esc + "'");
        }
        continue;
      }
      out.push_back(ch);
    }
    fail("unterminated string literal");
  }

  double number() {
    const std::size_t start = pos_;
    bool negative = false;
    if (peek() == '+' || peek() == '-') {
      negative = peek() == '-';
      ++pos_;
    }
    const std::size_t body = pos_;
    std::size_t digits = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_, ++digits;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_, ++digits;
    }
    if (digits == 0) {
      pos_ = start;
      fail("expected a number, found " + describe_here());
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[p])))
        fail("malformed exponent in number '" + std::string(s_.substr(start, p - start)) + "'");
      while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
      pos_ = p;
    }
    double v = 0.0;
    std::string_view text = s_.substr(body, pos_ - body);
    std::string buf;
    if (!text.empty() && text.front() == '.') {  // from_chars rejects ".5"
      buf = "0";
      buf += text;
      text = buf;
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
      fail("number out of range: '" + std::string(s_.substr(start, pos_ - start)) + "'");
    return negative ? -v : v;
  }

  std::string ident() {
    const std::size_t start = pos_;
    while (!eof() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char ch) {
    if (peek() != ch) fail(std::string("expected '") + ch + "', found " + describe_here());
    ++pos_;
  }

  void skip_ws() {
    while (!eof() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  bool at_end_of_statements() const { return eof() || s_[pos_] == '#'; }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  std::string rest() const { return std::string(s_.substr(pos_)); }

  std::string describe_here() const {
    if (eof()) return "end of line";
    return std::string("'") + s_[pos_] + "'";
  }

  [[noreturn]] void fail(const std::string& message) const { throw SyntaxError{message}; }

  std::string_view s_;
  int line_;
  std::size_t pos_ = 0;
};

void render_value(std::ostringstream& os, const Value& v) {
  switch (kind_of(v)) {
    case ValueKind::Number: os << render_number(std::get<double>(v)); break;
    case ValueKind::NumberList: {
      os << '[';
      const auto& items = std::get<NumberList>(v);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) os << ',';
        os << render_number(items[i]);
      }
      os << ']';
      break;
    }
    case ValueKind::String: {
      os << '"';
      for (char ch : std::get<std::string>(v)) {
        switch (ch) {
          case '"': os << "\\\""; break;
          case '\\': os << "\\\\"; break;
          case '\n': os << "\\n"; break;
          case '\t': os << "\\t"; break;
          default: os << ch;
        }
      }
      os << '"';
      break;
    }
  }
}

}  // namespace

std::string ParseError::to_string() const {
  return "line " + std::to_string(line) + ": " + message;
}

bool structurally_equal(const MissionScript& a, const MissionScript& b) {
  if (a.calls.size() != b.calls.size()) return false;
  for (std::size_t i = 0; i < a.calls.size(); ++i) {
    const auto& x = a.calls[i];
    const auto& y = b.calls[i];
    if (x.name != y.name || x.args != y.args || x.kwargs != y.kwargs) return false;
  }
  return true;
}

Extracted extract_script(std::string_view raw) {
  constexpr std::string_view fence = "```";
  Extracted out;
  const auto open = raw.find(fence);
  if (open == std::string_view::npos) {
    out.text = std::string(trim(raw));
    out.unfenced = true;
  } else {
    // Skip the info string ("python", "text", ...) up to the end of the fence line.
    auto body_start = raw.find('\n', open + fence.size());
    body_start = body_start == std::string_view::npos ? raw.size() : body_start + 1;
    const auto close = raw.find(fence, body_start);
    const auto body = raw.substr(body_start, close == std::string_view::npos ? raw.size() - body_start
                                                                              : close - body_start);
    out.text = std::string(trim(body));
  }
  if (is_blank(out.text)) throw Error("EmptyOutput", "model output contains no mission script");
  return out;
}

ParseResult parse(std::string_view text) {
  ParseResult result;
  MissionScript script;
  script.source_text = std::string(text);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    ++line_no;
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    try {
      for (auto& call : LineParser(line, line_no).statements()) script.calls.push_back(std::move(call));
    } catch (const SyntaxError& e) {
      result.errors.push_back({line_no, e.message});
    }
    pos = eol + 1;
  }
  if (result.errors.empty() && script.calls.empty()) result.errors.push_back({1, "empty script"});
  if (result.errors.empty()) result.script = std::move(script);
  return result;
}

std::string render_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string render(const PrimitiveCall& call) {
  std::ostringstream os;
  os << call.name << '(';
  bool first = true;
  for (const auto& a : call.args) {
    if (!first) os << ", ";
    first = false;
    render_value(os, a);
  }
  for (const auto& [k, v] : call.kwargs) {
    if (!first) os << ", ";
    first = false;
    os << k << '=';
    render_value(os, v);
  }
  os << ')';
  return os.str();
}

std::string render(const MissionScript& script) {
  std::string out;
  for (const auto& c : script.calls) {
    out += render(c);
    out += '\n';
  }
  return out;
}

}  // namespace fluc::mission
