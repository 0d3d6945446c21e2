// Parser for the .pill workbench format: recursive type definitions, named
// processes, and expected-typing declarations.
//
//   -- comments run to end of line
//   type Bit = 1 + 1;
//   proc Client = x[inl].x[].0;
//   check Client :: x : Bit * 1;
//
// Type operators, tightest first: prefixes (~ ! ?), *, @, +, & — all
// right-associative; `ex X. A` and `all X. A` extend as far right as
// possible. `[| G |]` and `<| G |>` wrap hyperenvironments into types.
//
// Processes follow pi-calculus conventions: a prefix continuation binds
// tighter than `|`, so `x[].0 | y[].0` is a parallel pair. Process variables
// (higher-order layer) are uppercase-initial; channels are lowercase-initial.
// `x^[y].P` is sugar for `x[z].(y<->z | P)` with z fresh. `$Name` splices a
// previously defined process.
#ifndef HYPERPILL_PARSER_HPP
#define HYPERPILL_PARSER_HPP

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperpill/base.hpp"
#include "hyperpill/process.hpp"
#include "hyperpill/types.hpp"

namespace hyperpill {

struct CheckDecl {
  Name proc;
  HyperEnv env;
  int line = 0;
};

struct PillFile {
  Sigma sigma;
  std::vector<std::pair<Name, Proc>> procs;  // in file order
  std::map<Name, Proc> procByName;
  std::vector<CheckDecl> checks;
  FreshNames fresh;  // generator used while desugaring; reusable afterwards
};

namespace detail {

enum class TokKind { Ident, Symbol, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  int line = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string src) : src_(std::move(src)) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip();
    tok_.line = line_;
    if (pos_ >= src_.size()) {
      tok_ = {TokKind::End, "", line_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\'' || d == '#')
          ++pos_;
        else
          break;
      }
      tok_ = {TokKind::Ident, src_.substr(start, pos_ - start), line_};
      return;
    }
    // Multi-character symbols first.
    static const char* multi[] = {"<->", "[|", "|]", "<|", "|>", "::"};
    for (const char* m : multi) {
      std::size_t n = std::string(m).size();
      if (src_.compare(pos_, n, m) == 0) {
        pos_ += n;
        tok_ = {TokKind::Symbol, m, line_};
        return;
      }
    }
    static const std::string singles = "()[]{}<>:,.;=|&*@+~!?^$01";
    if (singles.find(c) != std::string::npos) {
      ++pos_;
      tok_ = {TokKind::Symbol, std::string(1, c), line_};
      return;
    }
    throw Error("line " + std::to_string(line_) + ": unexpected character '" +
                std::string(1, c) + "'");
  }

  void skip() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  Token tok_;
};

inline bool isKeyword(const std::string& s) {
  static const char* kws[] = {"new", "let",  "in",  "type", "proc",  "check",
                              "inl", "inr",  "case", "ex",  "all",   "bot",
                              "empty"};
  for (const char* k : kws)
    if (s == k) return true;
  return false;
}

inline bool isProcVarName(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

class Parser {
 public:
  Parser(std::string src, PillFile& out) : lex_(std::move(src)), out_(out) {}

  void parseFile() {
    while (lex_.peek().kind != TokKind::End) {
      Token t = lex_.peek();
      if (t.text == "type") {
        lex_.next();
        Name n = expectIdent("type name");
        require(std::isupper(static_cast<unsigned char>(n[0])),
                "line " + std::to_string(t.line) + ": type names start uppercase");
        expect("=");
        // The name is visible in its own body, so definitions can recurse.
        pendingType_ = n;
        Type ty = parseType();
        pendingType_.clear();
        expect(";");
        out_.sigma.define(n, ty);
      } else if (t.text == "proc") {
        lex_.next();
        Name n = expectIdent("process name");
        expect("=");
        Proc p = parseProc0();
        expect(";");
        require(!out_.procByName.count(n),
                "line " + std::to_string(t.line) + ": duplicate process '" + n + "'");
        out_.procs.emplace_back(n, p);
        out_.procByName.emplace(n, p);
      } else if (t.text == "check") {
        lex_.next();
        Name n = expectIdent("process name");
        expect("::");
        HyperEnv g = parseHyperEnv();
        expect(";");
        require(out_.procByName.count(n) > 0,
                "line " + std::to_string(t.line) + ": check names unknown process '" + n + "'");
        out_.checks.push_back({n, std::move(g), t.line});
      } else {
        fail("expected 'type', 'proc' or 'check'", t);
      }
    }
  }

  // --- types ---------------------------------------------------------------

  Type parseType() { return parseWith(); }

  // --- hyperenvironments ---------------------------------------------------

  HyperEnv parseHyperEnv() {
    if (lex_.peek().text == "empty") {
      lex_.next();
      return {};
    }
    HyperEnv g;
    g.push_back(parseEnvComp());
    while (lex_.peek().text == "|") {
      lex_.next();
      g.push_back(parseEnvComp());
    }
    return g;
  }

  // --- processes -----------------------------------------------------------

  Proc parseProc0() {
    Proc p = parseFactor();
    if (lex_.peek().text == "|") {
      lex_.next();
      return pPar(p, parseProc0());
    }
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const Token& t) {
    throw Error("line " + std::to_string(t.line) + ": " + msg +
                (t.kind == TokKind::End ? " (at end of input)" : " (at '" + t.text + "')"));
  }

  void expect(const std::string& sym) {
    Token t = lex_.next();
    if (t.text != sym) fail("expected '" + sym + "'", t);
  }

  Name expectIdent(const std::string& what) {
    Token t = lex_.next();
    if (t.kind != TokKind::Ident || isKeyword(t.text)) fail("expected " + what, t);
    return t.text;
  }

  Name expectChannel() {
    Token t = lex_.peek();
    Name n = expectIdent("channel name");
    if (isProcVarName(n)) fail("channel names start lowercase", t);
    return n;
  }

  Name expectProcVar() {
    Token t = lex_.peek();
    Name n = expectIdent("process variable");
    if (!isProcVarName(n)) fail("process variables start uppercase", t);
    return n;
  }

  Type parseWith() {
    Type l = parsePlus();
    if (lex_.peek().text == "&") {
      lex_.next();
      return tWith(l, parseWith());
    }
    return l;
  }
  Type parsePlus() {
    Type l = parseParr();
    if (lex_.peek().text == "+") {
      lex_.next();
      return tPlus(l, parsePlus());
    }
    return l;
  }
  Type parseParr() {
    Type l = parseTensor();
    if (lex_.peek().text == "@") {
      lex_.next();
      return tParr(l, parseParr());
    }
    return l;
  }
  Type parseTensor() {
    Type l = parseTypePrefix();
    if (lex_.peek().text == "*") {
      lex_.next();
      return tTensor(l, parseTensor());
    }
    return l;
  }
  Type parseTypePrefix() {
    const std::string& s = lex_.peek().text;
    if (s == "~") {
      lex_.next();
      return dual(parseTypePrefix());
    }
    if (s == "!") {
      lex_.next();
      return tBang(parseTypePrefix());
    }
    if (s == "?") {
      lex_.next();
      return tQuery(parseTypePrefix());
    }
    return parseTypeAtom();
  }
  Type parseTypeAtom() {
    Token t = lex_.next();
    if (t.text == "1") return tOne();
    if (t.text == "bot") return tBot();
    if (t.text == "(") {
      Type ty = parseType();
      expect(")");
      return ty;
    }
    if (t.text == "ex" || t.text == "all") {
      Name x = expectIdent("type variable");
      expect(".");
      boundTyVars_.push_back(x);
      Type body = parseType();
      boundTyVars_.pop_back();
      return t.text == "ex" ? tExists(x, body) : tForall(x, body);
    }
    if (t.text == "[|" || t.text == "<|") {
      HyperEnv g = parseHyperEnv();
      expect(t.text == "[|" ? "|]" : "|>");
      return t.text == "[|" ? tProvide(std::move(g)) : tAssume(std::move(g));
    }
    if (t.kind == TokKind::Ident && !isKeyword(t.text)) {
      bool bound = false;
      for (const auto& b : boundTyVars_)
        if (b == t.text) bound = true;
      if (!bound && (out_.sigma.defined(t.text) || t.text == pendingType_))
        return tDef(t.text, false);
      return tVar(t.text, false);
    }
    fail("expected a type", t);
  }

  Env parseEnvComp() {
    Env e;
    if (lex_.peek().text == "(") {
      lex_.next();
      expect(")");
      return e;  // explicitly empty component
    }
    while (true) {
      Name x = expectChannel();
      expect(":");
      Type ty = parseType();
      require(!e.count(x), "duplicate name '" + x + "' in environment");
      e.emplace(std::move(x), std::move(ty));
      if (lex_.peek().text != ",") break;
      lex_.next();
    }
    return e;
  }

  Record parseRecord() {
    Record r;
    if (lex_.peek().text == ")" || lex_.peek().text == ">") return r;
    while (true) {
      Name f = expectIdent("parameter name");
      expect("=");
      Name x = expectChannel();
      require(!r.count(f), "duplicate parameter '" + f + "'");
      r.emplace(std::move(f), std::move(x));
      if (lex_.peek().text != ",") break;
      lex_.next();
    }
    return r;
  }

  std::optional<HyperEnv> parseOptAnno() {
    if (lex_.peek().text != "::") return std::nullopt;
    lex_.next();
    expect("{");
    HyperEnv g = parseHyperEnv();
    expect("}");
    return g;
  }

  Proc parseFactor() {
    Token t = lex_.peek();
    const std::string& s = t.text;
    if (s == "0") {
      lex_.next();
      return pNil();
    }
    if (s == "(") {
      lex_.next();
      Proc p = parseProc0();
      expect(")");
      return p;
    }
    if (s == "new") {
      lex_.next();
      expect("(");
      Name x = expectChannel();
      Type anno;
      if (lex_.peek().text == ":") {
        lex_.next();
        anno = parseType();
      }
      expect(")");
      expect("(");
      Name y = expectChannel();
      expect(")");
      return pCut(x, anno, y, parseFactor());
    }
    if (s == "let") {
      lex_.next();
      Name p = expectProcVar();
      auto anno = parseOptAnno();
      expect("=");
      expect("(");
      Record rho = parseRecord();
      expect(")");
      Proc body = parseFactor();
      expectKeyword("in");
      Proc cont = parseProc0();
      return pChop(p, Abstraction{std::move(rho), body}, cont, std::move(anno));
    }
    if (s == "!") {
      lex_.next();
      Name x = expectChannel();
      expect("(");
      Name y = expectChannel();
      expect(")");
      expect(".");
      return pServer(x, y, parseFactor());
    }
    if (s == "?") {
      lex_.next();
      Name x = expectChannel();
      expect("[");
      if (lex_.peek().text == "]") {
        lex_.next();
        expect(".");
        return pDisp(x, parseFactor());
      }
      Name y = expectChannel();
      if (lex_.peek().text == ",") {
        lex_.next();
        Name z = expectChannel();
        expect("]");
        expect(".");
        return pDup(x, y, z, parseFactor());
      }
      expect("]");
      expect(".");
      return pUse(x, y, parseFactor());
    }
    if (s == "$") {
      lex_.next();
      Name n = expectIdent("process name");
      auto it = out_.procByName.find(n);
      if (it == out_.procByName.end()) fail("unknown process '" + n + "'", t);
      return it->second;
    }
    if (t.kind == TokKind::Ident && !isKeyword(s)) {
      if (isProcVarName(s)) {
        Name p = expectProcVar();
        expect("<");
        Record sigma = parseRecord();
        expect(">");
        auto anno = parseOptAnno();
        return pInvoke(p, std::move(sigma), std::move(anno));
      }
      Name x = expectChannel();
      return parseSuffix(x);
    }
    fail("expected a process", t);
  }

  void expectKeyword(const std::string& kw) {
    Token t = lex_.next();
    if (t.kind != TokKind::Ident || t.text != kw) fail("expected '" + kw + "'", t);
  }

  Proc parseSuffix(const Name& x) {
    Token t = lex_.next();
    const std::string& s = t.text;
    if (s == "<->") return pFwd(x, expectChannel());
    if (s == "^") {
      expect("[");
      Name y = expectChannel();
      expect("]");
      expect(".");
      Proc cont = parseFactor();
      return pFreeSend(x, y, std::move(cont), out_.fresh);
    }
    if (s == "[") {
      const std::string& u = lex_.peek().text;
      if (u == "]") {
        lex_.next();
        expect(".");
        return pClose(x, parseFactor());
      }
      if (u == "inl" || u == "inr") {
        bool left = u == "inl";
        lex_.next();
        expect("]");
        expect(".");
        return left ? pInl(x, parseFactor()) : pInr(x, parseFactor());
      }
      if (u == "type") {
        lex_.next();
        Type ty = parseType();
        expect("]");
        expect(".");
        return pSendType(x, ty, parseFactor());
      }
      if (u == "(") {
        lex_.next();
        Record rho = parseRecord();
        expect(")");
        Proc body = parseProc0();
        expect("]");
        expect(".");
        Proc cont = parseFactor();
        return pHoSend(x, Abstraction{std::move(rho), body}, cont);
      }
      Name y = expectChannel();
      expect("]");
      expect(".");
      return pSend(x, y, parseFactor());
    }
    if (s == "(") {
      if (lex_.peek().text == ")") {
        lex_.next();
        expect(".");
        return pWait(x, parseFactor());
      }
      if (lex_.peek().text == "type") {
        lex_.next();
        Name v = expectIdent("type variable");
        expect(")");
        expect(".");
        boundTyVars_.push_back(v);
        Proc body = parseFactor();
        boundTyVars_.pop_back();
        return pRecvType(x, v, body);
      }
      Name y = expectIdent("name");
      expect(")");
      expect(".");
      if (isProcVarName(y)) return pHoRecv(x, y, parseFactor());
      return pRecv(x, y, parseFactor());
    }
    if (s == ".") {
      expectKeyword("case");
      expect("(");
      Proc l = parseProc0();
      expect(",");
      Proc r = parseProc0();
      expect(")");
      return pCase(x, l, r);
    }
    fail("expected a prefix after '" + x + "'", t);
  }

  Lexer lex_;
  PillFile& out_;
  std::vector<Name> boundTyVars_;
  Name pendingType_;  // name of the definition currently being parsed
};

}  // namespace detail

// Parse a complete .pill file.
inline PillFile parsePill(const std::string& src) {
  PillFile out;
  detail::Parser p(src, out);
  p.parseFile();
  return out;
}

// Conveniences for tests and the command line: parse a single construct.
inline Type parseTypeIn(const Sigma& sigma, const std::string& src) {
  PillFile out;
  out.sigma = sigma;
  detail::Parser p(src, out);
  Type t = p.parseType();
  return t;
}

inline Proc parseProcIn(const std::string& src) {
  PillFile out;
  detail::Parser p(src, out);
  return p.parseProc0();
}

inline HyperEnv parseHyperEnvIn(const Sigma& sigma, const std::string& src) {
  PillFile out;
  out.sigma = sigma;
  detail::Parser p(src, out);
  return p.parseHyperEnv();
}

}  // namespace hyperpill

#endif  // HYPERPILL_PARSER_HPP
