#include <cctype>
#include <charconv>
#include <cstdlib>

#include "ivnsim/andl.hpp"

namespace ivn::andl {

namespace {

enum class Tok : std::uint8_t {
  Ident,
  Number,  // with unit suffix, resolved into a Quantity
  LBrace,
  RBrace,
  Semi,
  Colon,
  Comma,
  Dot,
  Arrow,  // <-->
  End,
  Bad,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Quantity quantity;
  bool unit_error = false;
  std::string unit;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_trivia();
    Token t;
    t.pos = pos();
    if (at_end()) {
      t.kind = Tok::End;
      return t;
    }
    const char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[i_])) ||
                           src_[i_] == '_')) {
        advance();
      }
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, i_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number();
    switch (c) {
      case '{': advance(); t.kind = Tok::LBrace; return t;
      case '}': advance(); t.kind = Tok::RBrace; return t;
      case ';': advance(); t.kind = Tok::Semi; return t;
      case ':': advance(); t.kind = Tok::Colon; return t;
      case ',': advance(); t.kind = Tok::Comma; return t;
      case '.': advance(); t.kind = Tok::Dot; return t;
      case '<':
        if (src_.substr(i_).rfind("<-->", 0) == 0) {
          advance(); advance(); advance(); advance();
          t.kind = Tok::Arrow;
          return t;
        }
        break;
      default: break;
    }
    advance();
    t.kind = Tok::Bad;
    t.text = std::string(1, c);
    return t;
  }

  /// Raw capture of a brace-balanced block; the opening '{' must already be
  /// consumed. Returns the content without the outer braces.
  std::string capture_raw_block(bool& ok) {
    std::string out;
    int depth = 1;
    while (!at_end()) {
      const char c = src_[i_];
      if (c == '{') ++depth;
      if (c == '}') {
        --depth;
        if (depth == 0) {
          advance();
          ok = true;
          return out;
        }
      }
      out.push_back(c);
      advance();
    }
    ok = false;
    return out;
  }

  SourcePos pos() const { return SourcePos{line_, col_}; }

 private:
  bool at_end() const { return i_ >= src_.size(); }

  void advance() {
    if (at_end()) return;
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_trivia() {
    while (!at_end()) {
      const char c = src_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
        while (!at_end() && src_[i_] != '\n') advance();
        continue;
      }
      break;
    }
  }

  Token lex_number() {
    Token t;
    t.pos = pos();
    t.kind = Tok::Number;
    std::int64_t whole = 0;
    bool overflow = false;
    const std::size_t start = i_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
      const std::int64_t digit = src_[i_] - '0';
      if (whole > (INT64_MAX - digit) / 10) overflow = true;
      else whole = whole * 10 + digit;
      advance();
    }
    std::int64_t num = whole;
    std::int64_t den = 1;
    if (!at_end() && src_[i_] == '.' && i_ + 1 < src_.size() &&
        std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
      advance();
      while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
        const std::int64_t digit = src_[i_] - '0';
        if (num > (INT64_MAX - digit) / 10 || den > INT64_MAX / 10) overflow = true;
        else {
          num = num * 10 + digit;
          den *= 10;
        }
        advance();
      }
    }
    // unit suffix: letters plus '/'
    std::string unit;
    while (!at_end() && (std::isalpha(static_cast<unsigned char>(src_[i_])) || src_[i_] == '/')) {
      unit.push_back(src_[i_]);
      advance();
    }
    t.text = std::string(src_.substr(start, i_ - start));
    t.unit = unit;
    if (overflow) {
      t.unit_error = true;
      return t;
    }
    t.quantity = resolve_unit(num, den, unit, t.unit_error);
    return t;
  }

  static Quantity resolve_unit(std::int64_t num, std::int64_t den, const std::string& unit,
                               bool& error) {
    Quantity q;
    error = false;
    auto scaled = [&](std::int64_t factor) -> std::int64_t {
      const __int128 v = (__int128)num * factor;
      if (v % den != 0) {
        error = true;
        return 0;
      }
      const __int128 r = v / den;
      if (r > INT64_MAX || r < 0) {
        error = true;
        return 0;
      }
      return static_cast<std::int64_t>(r);
    };
    if (unit.empty()) {
      q.kind = Quantity::Kind::Plain;
      q.plain_num = num;
      q.plain_den = den;
      q.value = den == 1 ? num : num / den;
      return q;
    }
    if (unit == "B") { q.kind = Quantity::Kind::Bytes; q.value = scaled(1); return q; }
    if (unit == "KB") { q.kind = Quantity::Kind::Bytes; q.value = scaled(1'000); return q; }
    if (unit == "MB") { q.kind = Quantity::Kind::Bytes; q.value = scaled(1'000'000); return q; }
    if (unit == "ps") { q.kind = Quantity::Kind::Time; q.value = scaled(1); return q; }
    if (unit == "ns") { q.kind = Quantity::Kind::Time; q.value = scaled(1'000); return q; }
    if (unit == "us") { q.kind = Quantity::Kind::Time; q.value = scaled(1'000'000); return q; }
    if (unit == "ms") { q.kind = Quantity::Kind::Time; q.value = scaled(1'000'000'000); return q; }
    if (unit == "s") { q.kind = Quantity::Kind::Time; q.value = scaled(1'000'000'000'000); return q; }
    if (unit == "b/s") { q.kind = Quantity::Kind::Rate; q.value = scaled(1); return q; }
    if (unit == "kb/s") { q.kind = Quantity::Kind::Rate; q.value = scaled(1'000); return q; }
    if (unit == "Mb/s") { q.kind = Quantity::Kind::Rate; q.value = scaled(1'000'000); return q; }
    if (unit == "Gb/s") { q.kind = Quantity::Kind::Rate; q.value = scaled(1'000'000'000); return q; }
    error = true;
    return q;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

constexpr std::size_t kMaxDiagnostics = 64;

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { shift(); }

  ParseResult run() {
    ParseResult result;
    Ast ast;
    while (cur_.kind != Tok::End && diags_.size() < kMaxDiagnostics) {
      if (cur_.kind == Tok::Ident && cur_.text == "types") {
        parse_types_block(ast);
      } else if (cur_.kind == Tok::Ident && cur_.text == "network") {
        parse_network(ast);
      } else {
        error_here("expected 'types' or 'network'");
        shift();
      }
    }
    if (ast.network_name.empty() && diags_.empty()) {
      diags_.push_back({cur_.pos, "no network definition found"});
    }
    result.diagnostics = std::move(diags_);
    if (result.diagnostics.empty()) result.ast = std::move(ast);
    return result;
  }

 private:
  void shift() { cur_ = lex_.next(); }

  bool at(Tok k) const { return cur_.kind == k; }
  bool at_kw(const char* kw) const { return cur_.kind == Tok::Ident && cur_.text == kw; }

  void error_here(const std::string& msg) {
    if (diags_.size() < kMaxDiagnostics) diags_.push_back({cur_.pos, msg});
  }

  bool expect(Tok k, const char* what) {
    if (at(k)) {
      shift();
      return true;
    }
    error_here(std::string("expected ") + what);
    return false;
  }

  /// After an error inside a block: skip to the next ';' (consumed) or stop
  /// in front of '}' / end of input.
  void sync() {
    int depth = 0;
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::Semi && depth == 0) {
        shift();
        return;
      }
      if (cur_.kind == Tok::LBrace) ++depth;
      if (cur_.kind == Tok::RBrace) {
        if (depth == 0) return;
        --depth;
      }
      shift();
    }
  }

  std::string expect_ident(const char* what) {
    if (at(Tok::Ident)) {
      std::string name = cur_.text;
      shift();
      return name;
    }
    error_here(std::string("expected ") + what);
    return {};
  }

  std::optional<Property> parse_property() {
    Property p;
    p.pos = cur_.pos;
    p.name = expect_ident("property name");
    if (p.name.empty()) {
      sync();
      return std::nullopt;
    }
    if (at(Tok::Number)) {
      if (cur_.unit_error) {
        error_here("unknown or inexact unit '" + cur_.unit + "' in '" + cur_.text + "'");
        shift();
        sync();
        return std::nullopt;
      }
      p.value = cur_.quantity;
      shift();
    } else if (at(Tok::Ident)) {
      p.value = cur_.text;
      shift();
    } else {
      error_here("expected value for property '" + p.name + "'");
      sync();
      return std::nullopt;
    }
    if (!expect(Tok::Semi, "';'")) {
      sync();
      return std::nullopt;
    }
    return p;
  }

  std::vector<Property> parse_property_block() {
    std::vector<Property> props;
    if (!expect(Tok::LBrace, "'{'")) return props;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      if (auto p = parse_property()) props.push_back(std::move(*p));
    }
    expect(Tok::RBrace, "'}'");
    return props;
  }

  void parse_types_block(Ast& ast) {
    shift();  // types
    const std::string group = expect_ident("types group name");
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      TypeDef def;
      def.pos = cur_.pos;
      def.group = group;
      def.kind = expect_ident("type kind");
      def.name = expect_ident("type name");
      if (def.kind.empty() || def.name.empty()) {
        sync();
        continue;
      }
      def.props = parse_property_block();
      if (at(Tok::Semi)) shift();
      ast.types.push_back(std::move(def));
    }
    expect(Tok::RBrace, "'}'");
  }

  void parse_network(Ast& ast) {
    shift();  // network
    if (!ast.network_name.empty()) error_here("duplicate network definition");
    ast.network_name = expect_ident("network name");
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      if (at_kw("inline")) {
        shift();
        if (!at_kw("ini")) {
          error_here("expected 'ini' after 'inline'");
          sync();
          continue;
        }
        shift();
        if (!at(Tok::LBrace)) {
          error_here("expected '{'");
          sync();
          continue;
        }
        // cur_ is the '{' and the lexer sits right behind it: capture raw
        // text up to the matching brace without tokenizing it
        bool ok = false;
        const std::string raw = lex_.capture_raw_block(ok);
        if (!ok) {
          error_here("unterminated inline ini block");
          shift();
          continue;
        }
        parse_ini_lines(raw, ast);
        shift();  // token after the raw block
      } else if (at_kw("devices")) {
        shift();
        parse_devices(ast);
      } else if (at_kw("connections")) {
        shift();
        parse_connections(ast);
      } else if (at_kw("communication")) {
        shift();
        parse_communication(ast);
      } else {
        error_here("expected 'inline', 'devices', 'connections' or 'communication'");
        sync();
        if (at(Tok::RBrace)) break;
      }
    }
    expect(Tok::RBrace, "'}'");
  }

  void parse_ini_lines(const std::string& raw, Ast& ast) {
    std::size_t start = 0;
    while (start <= raw.size()) {
      std::size_t end = raw.find('\n', start);
      std::string line = raw.substr(start, end == std::string::npos ? std::string::npos
                                                                    : end - start);
      if (auto c = line.find("//"); c != std::string::npos) line.resize(c);
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        auto trim = [](std::string s) {
          const auto a = s.find_first_not_of(" \t\r");
          const auto b = s.find_last_not_of(" \t\r");
          return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) ast.inline_ini.emplace_back(key, value);
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }

  void parse_devices(Ast& ast) {
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      DeviceDecl d;
      d.pos = cur_.pos;
      d.kind = expect_ident("device kind");
      d.name = expect_ident("device name");
      if (d.kind.empty() || d.name.empty()) {
        sync();
        continue;
      }
      if (at(Tok::LBrace)) {
        d.props = parse_property_block();
        if (at(Tok::Semi)) shift();
      } else if (!expect(Tok::Semi, "';'")) {
        sync();
        continue;
      }
      ast.devices.push_back(std::move(d));
    }
    expect(Tok::RBrace, "'}'");
  }

  void parse_connections(Ast& ast) {
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      if (!at_kw("segment")) {
        error_here("expected 'segment'");
        sync();
        continue;
      }
      shift();
      SegmentDecl seg;
      seg.pos = cur_.pos;
      seg.name = expect_ident("segment name");
      if (!expect(Tok::LBrace, "'{'")) continue;
      while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
        if (auto conn = parse_connection()) seg.connections.push_back(std::move(*conn));
      }
      expect(Tok::RBrace, "'}'");
      ast.segments.push_back(std::move(seg));
    }
    expect(Tok::RBrace, "'}'");
  }

  std::optional<Connection> parse_connection() {
    Connection conn;
    conn.pos = cur_.pos;
    conn.a = expect_ident("device name");
    if (conn.a.empty()) {
      sync();
      return std::nullopt;
    }
    if (!expect(Tok::Arrow, "'<-->'")) {
      sync();
      return std::nullopt;
    }
    if (at(Tok::LBrace)) {
      LinkSpec link;
      link.pos = cur_.pos;
      shift();
      if (at_kw("new")) {
        shift();
        std::string group = expect_ident("type group");
        std::string name;
        if (at(Tok::Dot)) {
          shift();
          name = expect_ident("type name");
        } else {
          // unqualified reference: single segment name
          name = group;
          group.clear();
        }
        link.type_ref = group.empty() ? name : group + "." + name;
        if (at(Tok::LBrace)) link.props = parse_property_block();
      } else if (at(Tok::Ident)) {
        link.inline_kind = cur_.text;
        shift();
        link.props = parse_property_block();
      } else {
        error_here("expected 'new' or a link kind");
        sync();
        return std::nullopt;
      }
      if (!expect(Tok::RBrace, "'}'")) {
        sync();
        return std::nullopt;
      }
      if (!expect(Tok::Arrow, "'<-->'")) {
        sync();
        return std::nullopt;
      }
      conn.link = std::move(link);
    }
    conn.b = expect_ident("device name");
    if (conn.b.empty()) {
      sync();
      return std::nullopt;
    }
    if (!expect(Tok::Semi, "';'")) {
      sync();
      return std::nullopt;
    }
    return conn;
  }

  void parse_communication(Ast& ast) {
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      if (!at_kw("message")) {
        error_here("expected 'message'");
        sync();
        continue;
      }
      shift();
      MessageDecl msg;
      msg.pos = cur_.pos;
      msg.name = expect_ident("message name");
      if (!expect(Tok::LBrace, "'{'")) continue;
      while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
        if (at_kw("sender")) {
          shift();
          msg.sender = expect_ident("sender device");
          expect(Tok::Semi, "';'");
        } else if (at_kw("receivers")) {
          shift();
          while (true) {
            const std::string r = expect_ident("receiver device");
            if (r.empty()) break;
            msg.receivers.push_back(r);
            if (at(Tok::Comma)) {
              shift();
              continue;
            }
            break;
          }
          expect(Tok::Semi, "';'");
        } else if (at_kw("mapping")) {
          shift();
          parse_mapping(msg);
        } else {
          if (auto p = parse_property()) msg.props.push_back(std::move(*p));
        }
      }
      expect(Tok::RBrace, "'}'");
      ast.messages.push_back(std::move(msg));
    }
    expect(Tok::RBrace, "'}'");
  }

  void parse_mapping(MessageDecl& msg) {
    if (!expect(Tok::LBrace, "'{'")) return;
    while (!at(Tok::RBrace) && !at(Tok::End) && diags_.size() < kMaxDiagnostics) {
      MappingEntry entry;
      entry.pos = cur_.pos;
      entry.scope = expect_ident("segment or gateway name");
      if (entry.scope.empty()) {
        sync();
        continue;
      }
      if (!expect(Tok::Colon, "':'")) {
        sync();
        continue;
      }
      entry.kind = expect_ident("mapping kind");
      if (entry.kind.empty()) {
        sync();
        continue;
      }
      if (entry.kind == "pool") {
        entry.pool_name = expect_ident("pool name");
      }
      if (at(Tok::LBrace)) entry.params = parse_property_block();
      expect(Tok::Semi, "';'");
      msg.mappings.push_back(std::move(entry));
    }
    expect(Tok::RBrace, "'}'");
  }

  Lexer lex_;
  Token cur_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ParseResult parse(std::string_view text) {
  Parser parser(text);
  return parser.run();
}

std::optional<Quantity> parse_quantity(std::string_view text) {
  // Reuse the lexer so CLI overrides accept the same literals as scenarios.
  Lexer lex(text);
  Token t = lex.next();
  if (t.kind != Tok::Number || t.unit_error) return std::nullopt;
  if (lex.next().kind != Tok::End) return std::nullopt;
  return t.quantity;
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    out += std::to_string(d.pos.line) + ":" + std::to_string(d.pos.col) + ": " + d.message + "\n";
  }
  return out;
}

}  // namespace ivn::andl
