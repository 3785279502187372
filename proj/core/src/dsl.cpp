#include "futv/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace futv {

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << pos.line << ":" << pos.col << ": " << message;
  return os.str();
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  End, Name, Int,
  LParen, RParen, LBrace, RBrace,
  Lt, Gt, Le, Ge, EqEq, Ne,
  Comma, Colon, Dot, DotDot,
  Plus, Minus, ParallelBar, Pipe,
  Arrow, Diamond, AndAnd, Bang, Backslash,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t ival = 0;
  SourcePos pos;
};

struct ParseFail {
  Diagnostic diag;
};

[[noreturn]] void fail_at(SourcePos pos, const std::string& msg) {
  throw ParseFail{Diagnostic{pos, msg}};
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto pos = [&] { return SourcePos{line, col}; };
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i < text.size() && text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.pos = pos();
    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      t.kind = Tok::Name;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::Int;
      t.text = text.substr(i, j - i);
      t.ival = std::stoll(t.text);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (two('.', '.')) { t.kind = Tok::DotDot; advance(2); }
    else if (two('-', '>')) { t.kind = Tok::Arrow; advance(2); }
    else if (two('<', '>')) { t.kind = Tok::Diamond; advance(2); }
    else if (two('<', '=')) { t.kind = Tok::Le; advance(2); }
    else if (two('>', '=')) { t.kind = Tok::Ge; advance(2); }
    else if (two('!', '=')) { t.kind = Tok::Ne; advance(2); }
    else if (two('&', '&')) { t.kind = Tok::AndAnd; advance(2); }
    else if (two('|', '|')) { t.kind = Tok::ParallelBar; advance(2); }
    else {
      switch (c) {
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '<': t.kind = Tok::Lt; break;
        case '>': t.kind = Tok::Gt; break;
        case ',': t.kind = Tok::Comma; break;
        case ':': t.kind = Tok::Colon; break;
        case '.': t.kind = Tok::Dot; break;
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '|': t.kind = Tok::Pipe; break;
        case '!': t.kind = Tok::Bang; break;
        case '\\': t.kind = Tok::Backslash; break;
        case '=': t.kind = Tok::EqEq; break;
        default:
          fail_at(t.pos, std::string("unexpected character '") + c + "'");
      }
      advance(1);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = pos();
  out.push_back(std::move(end));
  return out;
}

// ---------------------------------------------------------------------------
// Parser

enum class EKind { Num, Bool, Msg, Set };

const char* ekind_name(EKind k) {
  switch (k) {
    case EKind::Num: return "integer";
    case EKind::Bool: return "boolean";
    case EKind::Msg: return "message";
    case EKind::Set: return "set";
  }
  return "?";
}

struct PendingCall {
  std::string name;
  std::size_t argc;
  SourcePos pos;
};

class Parser {
public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {
    Environment scratch;
    scratch.init_builtins();
    builtin_actions_ = scratch.actions;
  }

  ModelFile parse() {
    parse_header();
    while (at_name("process")) parse_def();
    parse_init();
    expect(Tok::End, "end of file");
    resolve_calls();
    return std::move(model_);
  }

private:
  std::vector<Token> toks_;
  std::size_t at_ = 0;
  ModelFile model_;
  std::map<std::string, ActionDecl> builtin_actions_;
  std::map<std::string, TagDecl> tag_table_;
  std::map<std::string, ActionDecl> user_action_table_;
  std::vector<std::map<std::string, std::string>> scopes_;  // name -> sort
  bool init_context_ = false;
  std::vector<PendingCall> pending_calls_;

  const Token& cur() const { return toks_[at_]; }
  const Token& peek(std::size_t k = 1) const {
    return toks_[std::min(at_ + k, toks_.size() - 1)];
  }
  Token take() { return toks_[at_++]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_name(const char* s) const { return at(Tok::Name) && cur().text == s; }

  Token expect(Tok k, const char* what) {
    if (!at(k)) fail_at(cur().pos, std::string("expected ") + what);
    return take();
  }

  bool accept(Tok k) {
    if (!at(k)) return false;
    ++at_;
    return true;
  }

  std::string expect_name(const char* what) {
    if (!at(Tok::Name)) fail_at(cur().pos, std::string("expected ") + what);
    return take().text;
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {
        "process", "sum",  "init", "eps",  "tau",   "ranks", "domain", "tags",
        "action",  "comm", "max",  "in",   "mod",   "N",     "rank",   "value",
        "true",    "false", "Network", "Bcast", "Barrier"};
    return kw.count(s) > 0;
  }

  // ----- header -----

  void parse_header() {
    bool saw_ranks = false;
    while (true) {
      if (at_name("ranks")) {
        take();
        model_.ranks_lo = static_cast<int>(expect(Tok::Int, "integer").ival);
        expect(Tok::DotDot, "'..'");
        model_.ranks_hi = static_cast<int>(expect(Tok::Int, "integer").ival);
        if (model_.ranks_lo < 1 || model_.ranks_hi < model_.ranks_lo)
          fail_at(cur().pos, "invalid rank range");
        saw_ranks = true;
      } else if (at_name("domain")) {
        take();
        model_.int_lo = expect(Tok::Int, "integer").ival;
        expect(Tok::DotDot, "'..'");
        model_.int_hi = expect(Tok::Int, "integer").ival;
        if (model_.int_hi < model_.int_lo) fail_at(cur().pos, "invalid Int domain");
      } else if (at_name("tags")) {
        take();
        do {
          SourcePos p = cur().pos;
          TagDecl tag;
          tag.name = expect_name("tag name");
          if (is_keyword(tag.name)) fail_at(p, "'" + tag.name + "' is reserved");
          if (accept(Tok::LParen)) {
            if (!at(Tok::RParen)) {
              do tag.payload.push_back(parse_argkind());
              while (accept(Tok::Comma));
            }
            expect(Tok::RParen, "')'");
          }
          if (!tag_table_.emplace(tag.name, tag).second)
            fail_at(p, "duplicate tag '" + tag.name + "'");
          model_.tags.push_back(std::move(tag));
        } while (accept(Tok::Comma));
      } else if (at_name("action")) {
        take();
        SourcePos p = cur().pos;
        ActionDecl decl;
        decl.name = expect_name("action name");
        if (is_keyword(decl.name) || builtin_actions_.count(decl.name))
          fail_at(p, "'" + decl.name + "' is reserved");
        if (accept(Tok::LParen)) {
          if (!at(Tok::RParen)) {
            do decl.sig.push_back(parse_argkind());
            while (accept(Tok::Comma));
          }
          expect(Tok::RParen, "')'");
        }
        decl.network_facing = false;
        if (!user_action_table_.emplace(decl.name, decl).second)
          fail_at(p, "duplicate action '" + decl.name + "'");
        model_.user_actions.push_back(std::move(decl));
      } else if (at_name("comm")) {
        take();
        std::vector<std::pair<std::string, std::string>> pairs;
        do {
          std::string a = expect_name("action name");
          expect(Tok::Pipe, "'|'");
          std::string b = expect_name("action name");
          pairs.emplace_back(std::move(a), std::move(b));
        } while (accept(Tok::Comma));
        model_.comm = std::move(pairs);
      } else {
        break;
      }
    }
    if (!saw_ranks) fail_at(cur().pos, "model header must declare a 'ranks lo..hi' range");
  }

  ArgKind parse_argkind() {
    SourcePos p = cur().pos;
    std::string s = expect_name("sort name");
    if (s == "Int") return ArgKind::Int;
    if (s == "Rank") return ArgKind::Rank;
    if (s == "Msg") return ArgKind::Msg;
    if (s == "Bool") return ArgKind::Bool;
    if (s == "Set") return ArgKind::Set;
    fail_at(p, "unknown sort '" + s + "'");
  }

  // ----- process definitions -----

  void parse_def() {
    take();  // 'process'
    SourcePos p = cur().pos;
    ProcessDef def;
    def.name = expect_name("process name");
    if (is_keyword(def.name)) fail_at(p, "'" + def.name + "' is reserved");
    if (builtin_actions_.count(def.name) || user_action_table_.count(def.name) ||
        tag_table_.count(def.name))
      fail_at(p, "'" + def.name + "' already names an action or tag");
    for (const auto& d : model_.defs)
      if (d.name == def.name) fail_at(p, "duplicate process '" + def.name + "'");

    expect(Tok::LParen, "'('");
    scopes_.push_back({});
    if (!at(Tok::RParen)) {
      do {
        SourcePos pp = cur().pos;
        std::string pname = expect_name("parameter name");
        expect(Tok::Colon, "':'");
        std::string sort = parse_sort_name();
        if (!scopes_.back().emplace(pname, sort).second)
          fail_at(pp, "duplicate parameter '" + pname + "'");
        def.params.emplace_back(pname, sort);
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    expect(Tok::EqEq, "'='");
    def.body = parse_term();
    scopes_.pop_back();
    model_.defs.push_back(std::move(def));
  }

  std::string parse_sort_name() {
    SourcePos p = cur().pos;
    std::string s = expect_name("sort name");
    if (s != "Int" && s != "Rank") fail_at(p, "unknown sort '" + s + "'");
    return s;
  }

  // ----- init clause -----

  void parse_init() {
    if (!at_name("init")) fail_at(cur().pos, "expected 'init' clause");
    take();
    init_context_ = true;
    scopes_.push_back({});
    if (accept(Tok::LBrace)) {
      while (!at(Tok::RBrace)) {
        SourcePos p = cur().pos;
        int r = static_cast<int>(expect(Tok::Int, "rank index").ival);
        expect(Tok::Colon, "':'");
        TermPtr t = parse_factor();
        for (const auto& [rr, _] : model_.init_ranks)
          if (rr == r) fail_at(p, "duplicate init entry for rank " + std::to_string(r));
        model_.init_ranks.emplace_back(r, std::move(t));
      }
      expect(Tok::RBrace, "'}'");
      if (model_.init_ranks.empty()) fail_at(cur().pos, "empty init block");
      std::sort(model_.init_ranks.begin(), model_.init_ranks.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t i = 0; i < model_.init_ranks.size(); ++i)
        if (model_.init_ranks[i].first != static_cast<int>(i))
          fail_at(cur().pos, "init entries must cover ranks 0..k-1 exactly");
    } else {
      model_.init_all = parse_factor();
    }
    scopes_.pop_back();
    init_context_ = false;
  }

  // ----- terms -----

  TermPtr parse_term() {
    TermPtr t = parse_par();
    while (accept(Tok::Plus)) t = mk_choice(t, parse_par());
    return t;
  }

  TermPtr parse_par() {
    TermPtr t = parse_seq();
    while (accept(Tok::ParallelBar)) t = mk_par(t, parse_seq());
    return t;
  }

  TermPtr parse_seq() {
    TermPtr t = parse_factor();
    while (accept(Tok::Dot)) t = mk_seq(t, parse_factor());
    return t;
  }

  TermPtr parse_factor() {
    if (at_name("sum")) {
      take();
      SourcePos p = cur().pos;
      std::string binder = expect_name("binder name");
      if (is_keyword(binder)) fail_at(p, "'" + binder + "' is reserved");
      expect(Tok::Colon, "':'");
      std::string sort = parse_sort_name();
      expect(Tok::Dot, "'.'");
      scopes_.push_back({{binder, sort}});
      TermPtr body = parse_factor();
      scopes_.pop_back();
      return mk_sum(binder, sort, body);
    }
    if (at_name("eps")) { take(); return mk_epsilon(); }
    if (at_name("tau")) { take(); return mk_tau(); }

    // Guard attempt: expr "->" factor ("<>" factor)?. Backtrack only while
    // deciding; once the arrow is seen the guard form is committed.
    {
      std::size_t save = at_;
      std::optional<std::pair<Expr, EKind>> guess;
      try {
        auto ek = parse_expr();
        if (at(Tok::Arrow)) guess = std::move(ek);
      } catch (const ParseFail&) {
      }
      if (guess) {
        if (guess->second != EKind::Bool)
          fail_at(cur().pos,
                  "guard must be boolean, got " + std::string(ekind_name(guess->second)));
        take();  // '->'
        TermPtr then_branch = parse_factor();
        TermPtr else_branch;
        if (accept(Tok::Diamond)) else_branch = parse_factor();
        return mk_cond(std::move(guess->first), then_branch, else_branch);
      }
      at_ = save;
    }

    if (accept(Tok::LParen)) {
      TermPtr t = parse_term();
      expect(Tok::RParen, "')'");
      return t;
    }

    SourcePos p = cur().pos;
    std::string name = expect_name("action, process call, 'eps' or 'tau'");
    std::vector<Expr> args;
    std::vector<EKind> kinds;
    bool has_parens = false;
    if (accept(Tok::LParen)) {
      has_parens = true;
      if (!at(Tok::RParen)) {
        do {
          auto [e, k] = parse_expr();
          args.push_back(std::move(e));
          kinds.push_back(k);
        } while (accept(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
    }

    const ActionDecl* decl = nullptr;
    if (auto it = builtin_actions_.find(name); it != builtin_actions_.end()) decl = &it->second;
    if (auto it = user_action_table_.find(name); it != user_action_table_.end())
      decl = &it->second;
    if (decl != nullptr) {
      if (decl->name == "nsend" || decl->name == "nrecv" || decl->name == "breq" ||
          decl->name == kBarrierAck)
        fail_at(p, "'" + name + "' is reserved for the network environment");
      check_action_args(*decl, kinds, p);
      return mk_act(ActionExpr{name, std::move(args)});
    }
    if (!has_parens) fail_at(p, "unknown action '" + name + "'");
    // Unknown name with parens: a process call, resolved after all defs.
    for (EKind k : kinds)
      if (k != EKind::Num)
        fail_at(p, "process arguments must be integers");
    pending_calls_.push_back({name, args.size(), p});
    return mk_call(name, std::move(args));
  }

  void check_action_args(const ActionDecl& decl, const std::vector<EKind>& kinds, SourcePos p) {
    if (decl.sig.size() != kinds.size())
      fail_at(p, "action '" + decl.name + "' expects " + std::to_string(decl.sig.size()) +
                     " argument(s), got " + std::to_string(kinds.size()));
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      bool ok = false;
      switch (decl.sig[i]) {
        case ArgKind::Rank:
        case ArgKind::Int: ok = kinds[i] == EKind::Num; break;
        case ArgKind::Msg: ok = kinds[i] == EKind::Num || kinds[i] == EKind::Msg; break;
        case ArgKind::Bool: ok = kinds[i] == EKind::Bool; break;
        case ArgKind::Set: ok = kinds[i] == EKind::Set; break;
      }
      if (!ok)
        fail_at(p, "argument " + std::to_string(i + 1) + " of '" + decl.name +
                       "' has the wrong sort");
    }
  }

  void resolve_calls() {
    for (const auto& c : pending_calls_) {
      const ProcessDef* found = nullptr;
      for (const auto& d : model_.defs)
        if (d.name == c.name) found = &d;
      if (found == nullptr) fail_at(c.pos, "undefined process '" + c.name + "'");
      if (found->params.size() != c.argc)
        fail_at(c.pos, "process '" + c.name + "' expects " +
                           std::to_string(found->params.size()) + " argument(s), got " +
                           std::to_string(c.argc));
    }
    if (model_.comm) {
      for (const auto& [a, b] : *model_.comm) {
        auto known = [&](const std::string& s) {
          return builtin_actions_.count(s) || user_action_table_.count(s);
        };
        if (!known(a) || !known(b))
          fail_at(SourcePos{}, "comm clause names unknown action '" + (known(a) ? b : a) + "'");
      }
    }
  }

  // ----- expressions -----

  std::pair<Expr, EKind> parse_expr() { return parse_and(); }

  std::pair<Expr, EKind> parse_and() {
    auto [e, k] = parse_cmp();
    while (at(Tok::AndAnd)) {
      SourcePos p = take().pos;
      auto [r, rk] = parse_cmp();
      if (k != EKind::Bool || rk != EKind::Bool) fail_at(p, "'&&' needs boolean operands");
      e = Expr::binary(Expr::Kind::And, std::move(e), std::move(r));
      k = EKind::Bool;
    }
    return {std::move(e), k};
  }

  std::pair<Expr, EKind> parse_cmp() {
    auto [e, k] = parse_add();
    Expr::Kind op;
    switch (cur().kind) {
      case Tok::EqEq: op = Expr::Kind::Eq; break;
      case Tok::Ne: op = Expr::Kind::Ne; break;
      case Tok::Lt: op = Expr::Kind::Lt; break;
      case Tok::Le: op = Expr::Kind::Le; break;
      case Tok::Gt: op = Expr::Kind::Gt; break;
      case Tok::Ge: op = Expr::Kind::Ge; break;
      case Tok::Name:
        if (cur().text == "in") {
          SourcePos p = take().pos;
          auto [r, rk] = parse_add();
          if (rk != EKind::Set) fail_at(p, "'in' needs a set on the right");
          return {Expr::binary(Expr::Kind::In, std::move(e), std::move(r)), EKind::Bool};
        }
        return {std::move(e), k};
      default:
        return {std::move(e), k};
    }
    SourcePos p = take().pos;
    auto [r, rk] = parse_add();
    bool numeric_op = op != Expr::Kind::Eq && op != Expr::Kind::Ne;
    if (numeric_op && (k != EKind::Num || rk != EKind::Num))
      fail_at(p, "comparison needs integer operands");
    return {Expr::binary(op, std::move(e), std::move(r)), EKind::Bool};
  }

  std::pair<Expr, EKind> parse_add() {
    auto [e, k] = parse_unary();
    while (true) {
      Expr::Kind op;
      if (at(Tok::Plus)) op = Expr::Kind::Add;
      else if (at(Tok::Minus)) op = Expr::Kind::Sub;
      else if (at(Tok::Backslash)) op = Expr::Kind::Diff;
      else if (at_name("mod")) op = Expr::Kind::Mod;
      else break;
      SourcePos p = take().pos;
      auto [r, rk] = parse_unary();
      if (op == Expr::Kind::Diff) {
        if (k != EKind::Set || rk != EKind::Set) fail_at(p, "'\\' needs set operands");
        k = EKind::Set;
      } else {
        if (k != EKind::Num || rk != EKind::Num) fail_at(p, "arithmetic needs integer operands");
        k = EKind::Num;
      }
      e = Expr::binary(op, std::move(e), std::move(r));
    }
    return {std::move(e), k};
  }

  std::pair<Expr, EKind> parse_unary() {
    if (at(Tok::Bang)) {
      SourcePos p = take().pos;
      auto [e, k] = parse_unary();
      if (k != EKind::Bool) fail_at(p, "'!' needs a boolean operand");
      return {Expr::unary(Expr::Kind::Not, std::move(e)), EKind::Bool};
    }
    return parse_primary();
  }

  std::pair<Expr, EKind> parse_primary() {
    SourcePos p = cur().pos;
    if (at(Tok::Int)) return {Expr::lit_of(Value::integer(take().ival)), EKind::Num};
    if (accept(Tok::LParen)) {
      auto out = parse_expr();
      expect(Tok::RParen, "')'");
      return out;
    }
    if (at(Tok::LBrace)) {
      take();
      std::vector<Expr> elems;
      if (!at(Tok::RBrace)) {
        do {
          auto [e, k] = parse_expr();
          if (k != EKind::Num) fail_at(p, "set elements must be integers");
          elems.push_back(std::move(e));
        } while (accept(Tok::Comma));
      }
      expect(Tok::RBrace, "'}'");
      return {Expr::set_of(std::move(elems)), EKind::Set};
    }
    if (!at(Tok::Name)) fail_at(p, "expected an expression");
    std::string name = take().text;
    if (name == "true") return {Expr::lit_of(Value::boolean(true)), EKind::Bool};
    if (name == "false") return {Expr::lit_of(Value::boolean(false)), EKind::Bool};
    if (name == "N") return {Expr::size_n(), EKind::Num};
    if (name == "max") {
      expect(Tok::LParen, "'('");
      auto [a, ka] = parse_expr();
      expect(Tok::Comma, "','");
      auto [b, kb] = parse_expr();
      expect(Tok::RParen, "')'");
      if (ka != EKind::Num || kb != EKind::Num) fail_at(p, "max needs integer operands");
      return {Expr::binary(Expr::Kind::Max, std::move(a), std::move(b)), EKind::Num};
    }
    if (auto it = tag_table_.find(name); it != tag_table_.end()) {
      expect(Tok::Lt, "'<'");
      std::vector<Expr> payload;
      std::vector<EKind> kinds;
      if (!at(Tok::Gt)) {
        do {
          auto [e, k] = parse_expr();
          payload.push_back(std::move(e));
          kinds.push_back(k);
        } while (accept(Tok::Comma));
      }
      expect(Tok::Gt, "'>'");
      const TagDecl& tag = it->second;
      if (tag.payload.size() != kinds.size())
        fail_at(p, "tag '" + name + "' expects " + std::to_string(tag.payload.size()) +
                       " payload value(s)");
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        bool ok = tag.payload[i] == ArgKind::Msg ? kinds[i] == EKind::Msg
                                                 : kinds[i] == EKind::Num;
        if (!ok) fail_at(p, "payload " + std::to_string(i + 1) + " of '" + name +
                                "' has the wrong sort");
      }
      return {Expr::msg(name, std::move(payload)), EKind::Msg};
    }
    if (init_context_ && (name == "rank" || name == "value"))
      return {Expr::var(name), EKind::Num};
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto v = it->find(name);
      if (v != it->end()) return {Expr::var(name), EKind::Num};
    }
    fail_at(p, "undefined name '" + name + "'");
  }
};

}  // namespace

ParseResult parse_model(const std::string& text) {
  ParseResult out;
  try {
    Parser p(text);
    out.model = p.parse();
  } catch (const ParseFail& f) {
    out.diagnostics.push_back(f.diag);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pretty-printing

namespace {

const char* argkind_name(ArgKind k) {
  switch (k) {
    case ArgKind::Int: return "Int";
    case ArgKind::Rank: return "Rank";
    case ArgKind::Msg: return "Msg";
    case ArgKind::Bool: return "Bool";
    case ArgKind::Set: return "Set";
  }
  return "?";
}

void print_sig(std::ostringstream& os, const std::vector<ArgKind>& sig) {
  if (sig.empty()) return;
  os << "(";
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (i) os << ", ";
    os << argkind_name(sig[i]);
  }
  os << ")";
}

std::string factor_str(const TermPtr& t) {
  // init clauses and init entries print at factor level
  std::string s = term_str(t);
  switch (t->kind) {
    case Term::Kind::Seq:
    case Term::Kind::Choice:
    case Term::Kind::Par:
      return "(" + s + ")";
    default:
      return s;
  }
}

}  // namespace

std::string pretty(const ModelFile& m) {
  std::ostringstream os;
  os << "ranks " << m.ranks_lo << ".." << m.ranks_hi << "\n";
  os << "domain " << m.int_lo << ".." << m.int_hi << "\n";
  if (!m.tags.empty()) {
    os << "tags ";
    for (std::size_t i = 0; i < m.tags.size(); ++i) {
      if (i) os << ", ";
      os << m.tags[i].name;
      print_sig(os, m.tags[i].payload);
    }
    os << "\n";
  }
  for (const auto& a : m.user_actions) {
    os << "action " << a.name;
    print_sig(os, a.sig);
    os << "\n";
  }
  if (m.comm) {
    os << "comm ";
    for (std::size_t i = 0; i < m.comm->size(); ++i) {
      if (i) os << ", ";
      os << (*m.comm)[i].first << "|" << (*m.comm)[i].second;
    }
    os << "\n";
  }
  for (const auto& d : m.defs) {
    os << "\nprocess " << d.name << "(";
    for (std::size_t i = 0; i < d.params.size(); ++i) {
      if (i) os << ", ";
      os << d.params[i].first << ": " << d.params[i].second;
    }
    os << ") =\n  " << term_str(d.body) << "\n";
  }
  os << "\ninit ";
  if (m.init_all) {
    os << factor_str(m.init_all) << "\n";
  } else {
    os << "{\n";
    for (const auto& [r, t] : m.init_ranks)
      os << "  " << r << ": " << factor_str(t) << "\n";
    os << "}\n";
  }
  return os.str();
}

bool ModelFile::equals(const ModelFile& o) const {
  if (ranks_lo != o.ranks_lo || ranks_hi != o.ranks_hi || int_lo != o.int_lo ||
      int_hi != o.int_hi)
    return false;
  if (tags.size() != o.tags.size() || user_actions.size() != o.user_actions.size() ||
      defs.size() != o.defs.size())
    return false;
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i].name != o.tags[i].name || tags[i].payload != o.tags[i].payload) return false;
  for (std::size_t i = 0; i < user_actions.size(); ++i)
    if (user_actions[i].name != o.user_actions[i].name ||
        user_actions[i].sig != o.user_actions[i].sig)
      return false;
  if (comm.has_value() != o.comm.has_value()) return false;
  if (comm && *comm != *o.comm) return false;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (defs[i].name != o.defs[i].name || defs[i].params != o.defs[i].params) return false;
    if (!term_equal(defs[i].body, o.defs[i].body)) return false;
  }
  if (static_cast<bool>(init_all) != static_cast<bool>(o.init_all)) return false;
  if (init_all && !term_equal(init_all, o.init_all)) return false;
  if (init_ranks.size() != o.init_ranks.size()) return false;
  for (std::size_t i = 0; i < init_ranks.size(); ++i) {
    if (init_ranks[i].first != o.init_ranks[i].first) return false;
    if (!term_equal(init_ranks[i].second, o.init_ranks[i].second)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Elaboration

Environment elaborate(const ModelFile& m, int n) {
  if (n < m.ranks_lo || n > m.ranks_hi)
    fail(Errc::RankCountOutOfRange,
         "N=" + std::to_string(n) + " outside the model's range " + std::to_string(m.ranks_lo) +
             ".." + std::to_string(m.ranks_hi));
  if (!m.init_ranks.empty() && static_cast<int>(m.init_ranks.size()) != n)
    fail(Errc::RankCountOutOfRange,
         "model pins " + std::to_string(m.init_ranks.size()) + " per-rank init entries but N=" +
             std::to_string(n));
  Environment env;
  env.size_n = n;
  env.int_lo = m.int_lo;
  env.int_hi = m.int_hi;

  std::vector<std::string> restrict_names;
  if (m.comm) {
    for (const auto& [a, b] : *m.comm) restrict_names.push_back(a + "|" + b);
    env.init_builtins(&restrict_names);
  } else {
    env.init_builtins(nullptr);
  }

  for (const auto& t : m.tags) env.tags[t.name] = t;
  for (const auto& a : m.user_actions) env.actions[a.name] = a;

  if (m.comm) {
    // Any listed pair not matched by a default is a user pair (identity
    // correspondence over equal arities, both sides drive).
    for (const auto& [a, b] : *m.comm) {
      std::string display = a + "|" + b;
      bool present = false;
      for (const auto& p : env.pairs)
        if (p.display == display) present = true;
      if (present) continue;
      const ActionDecl& da = env.action_decl(a);
      const ActionDecl& db = env.action_decl(b);
      if (da.network_facing || db.network_facing)
        fail(Errc::SortError, "comm pair " + display + " is not a supported builtin pair");
      if (da.sig.size() != db.sig.size())
        fail(Errc::SortError, "comm pair " + display + " joins actions of different arity");
      CommPair p;
      p.a = a;
      p.b = b;
      for (std::size_t i = 0; i < da.sig.size(); ++i)
        p.corr.emplace_back(static_cast<int>(i), static_cast<int>(i));
      p.a_drives = p.b_drives = true;
      p.display = display;
      env.pairs.push_back(std::move(p));
    }
  }

  for (const auto& d : m.defs) env.defs[d.name] = d;
  return env;
}

std::vector<TermPtr> initial_futures(const ModelFile& m, const Environment& env,
                                     const std::vector<std::int64_t>* values) {
  const int n = env.size_n;
  if (values && static_cast<int>(values->size()) != n)
    fail(Errc::SortError, "expected " + std::to_string(n) + " values, got " +
                              std::to_string(values->size()));
  std::vector<TermPtr> out;
  for (int r = 0; r < n; ++r) {
    TermPtr init = m.init_all ? m.init_all : m.init_ranks[static_cast<std::size_t>(r)].second;
    auto frees = free_vars(init);
    if (frees.count("value") && values == nullptr)
      fail(Errc::SortError, "the init clause uses 'value'; per-rank values are required");
    Bindings b;
    b.emplace("rank", Value::rank(r));
    if (values) b.emplace("value", Value::integer((*values)[static_cast<std::size_t>(r)]));
    out.push_back(substitute_partial(init, b));
    for (const auto& v : free_vars(out.back()))
      fail(Errc::UnboundVariable, "init clause has unbound variable '" + v + "'");
  }
  return out;
}

}  // namespace futv
