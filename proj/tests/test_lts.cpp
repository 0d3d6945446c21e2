// Transition-system tests: process menus against hand-computed oracles, the
// environment system's menus and admission check, and derivation runs that
// exercise the re-derivation pipeline end to end.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperpill/deriv_lts.hpp"
#include "hyperpill/parser.hpp"

using namespace hyperpill;

namespace {

struct Menu {
  std::vector<ProcTransition> ts;

  int count(ActTag tag) const {
    int n = 0;
    for (const auto& t : ts)
      if (t.label.kind == Label::Kind::Action && t.label.a.tag == tag) ++n;
    return n;
  }
  int countKind(Label::Kind k) const {
    int n = 0;
    for (const auto& t : ts)
      if (t.label.kind == k) ++n;
    return n;
  }
  int countRule(const std::string& r) const {
    int n = 0;
    for (const auto& t : ts)
      if (t.rule == r) ++n;
    return n;
  }
  const ProcTransition* byRule(const std::string& r) const {
    for (const auto& t : ts)
      if (t.rule == r) return &t;
    return nullptr;
  }
  std::vector<std::string> rules() const {
    std::vector<std::string> out;
    for (const auto& t : ts) out.push_back(t.rule);
    std::sort(out.begin(), out.end());
    return out;
  }
};

Menu menuOf(const Sigma& sigma, const Proc& p, FreshNames& fresh) {
  return Menu{procStep(sigma, p, fresh)};
}

// Follow the tau transition with the given rule. Concurrent cuts can enable
// several silent steps at once, so selection is by rule, not uniqueness.
Proc stepTau(const Sigma& sigma, const Proc& p, FreshNames& fresh, const std::string& rule) {
  auto m = menuOf(sigma, p, fresh);
  INFO("state: " << showProc(p));
  for (const auto& t : m.ts)
    if (t.label.kind == Label::Kind::Tau && t.rule == rule) {
      REQUIRE(t.target);
      return t.target;
    }
  INFO("missing silent rule: " << rule);
  REQUIRE(false);
  return p;
}

}  // namespace

TEST_CASE("parallel sends on the same name stay separate") {
  // Two closes on the same channel: both move individually, and no pair
  // label forms because the two actions are indistinguishable.
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("x[].0 | x[].0");
  auto m = menuOf(sigma, p, fresh);
  CHECK(m.ts.size() == 2);
  CHECK(m.count(ActTag::Close) == 2);
  CHECK(m.countKind(Label::Kind::Pair) == 0);
}

TEST_CASE("parallel actions on distinct names also move together") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("x[].0 | y[].0");
  auto m = menuOf(sigma, p, fresh);
  CHECK(m.ts.size() == 3);
  CHECK(m.count(ActTag::Close) == 2);
  CHECK(m.countKind(Label::Kind::Pair) == 1);
  CHECK(m.countRule("sync") == 1);
}

TEST_CASE("a forwarder answers to both of its names") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("x <-> y");
  auto m = menuOf(sigma, p, fresh);
  REQUIRE(m.ts.size() == 2);
  std::set<std::pair<Name, Name>> seen;
  for (const auto& t : m.ts) {
    REQUIRE(t.label.kind == Label::Kind::Fwd);
    seen.insert({t.label.x, t.label.y});
    CHECK(t.target->tag == ProcTag::Nil);
  }
  CHECK(seen == std::set<std::pair<Name, Name>>{{"x", "y"}, {"y", "x"}});
}

TEST_CASE("closing a restricted channel is a silent step") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("new (x:1)(y) (x[].0 | y().0)");
  auto m = menuOf(sigma, p, fresh);
  REQUIRE(m.ts.size() == 1);
  CHECK(m.ts[0].rule == "cut-close");
  CHECK(m.ts[0].label.kind == Label::Kind::Tau);
  // The restriction is gone afterwards.
  CHECK(structEquiv(m.ts[0].target, parseProcIn("0 | 0")));
}

TEST_CASE("a forwarder under a restriction renames silently") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("new (x:1)(y) (x <-> z | y().0)");
  auto m = menuOf(sigma, p, fresh);
  REQUIRE(m.ts.size() == 1);
  CHECK(m.ts[0].rule == "cut-forward");
  CHECK(m.ts[0].label.kind == Label::Kind::Tau);
  // The consumed forwarder leaves an inert thread behind.
  CHECK(structEquiv(m.ts[0].target, parseProcIn("z().0")));
}

TEST_CASE("a server offers acceptance, disposal and duplication") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("!x(y). y[].0");
  auto m = menuOf(sigma, p, fresh);
  REQUIRE(m.ts.size() == 3);
  CHECK(m.count(ActTag::CoUse) == 1);
  CHECK(m.count(ActTag::CoDisp) == 1);
  CHECK(m.count(ActTag::CoDup) == 1);
  CHECK(m.countRule("server") == 1);
  CHECK(m.countRule("server-dispose") == 1);
  CHECK(m.countRule("server-duplicate") == 1);

  // Acceptance runs the body on the fresh channel.
  const auto* acc = m.byRule("server");
  REQUIRE(acc);
  Name yp = acc->label.a.arg1;
  CHECK(alphaEq(acc->target, pClose(yp, pNil())));

  // Disposal has no sibling servers to notify here, so it just closes.
  const auto* disp = m.byRule("server-dispose");
  REQUIRE(disp);
  CHECK(alphaEq(disp->target, parseProcIn("x[].0")));

  // Duplication yields two servers wired onto the two copies.
  const auto* dup = m.byRule("server-duplicate");
  REQUIRE(dup);
  Name x1 = dup->label.a.arg1;
  Name x2 = dup->label.a.arg2;
  Proc expect = pSend(x1, x2,
                      pPar(pServer(x1, "a", pClose("a", pNil())),
                           pServer(x2, "b", pClose("b", pNil()))));
  CHECK(alphaEq(dup->target, expect));
}

TEST_CASE("labels drive the process to the menu's target") {
  Sigma sigma;
  Proc p = parseProcIn(
      "new (x : 1 * 1)(y) ( x[w]. (w[].0 | x[].0) | y(v). v(). y(). z[].0 )");
  FreshNames fresh;
  for (const auto& t : procStep(sigma, p, fresh)) {
    if (!t.target) continue;
    FreshNames f2;
    auto got = procStepWithLabel(sigma, p, t.label, f2);
    INFO("label: " << showLabel(t.label));
    REQUIRE(got);
    CHECK(structEquiv(*got, t.target));
  }
}

TEST_CASE("a received type flows into the continuation") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn("x(type X). y[type X]. (x <-> y)");
  auto m = menuOf(sigma, p, fresh);
  REQUIRE(m.ts.size() == 1);
  const auto& t = m.ts[0];
  CHECK(t.rule == "recv-type");
  CHECK(isSchema(t.label));
  REQUIRE(t.withType);
  Proc inst = t.withType(tOne());
  CHECK(alphaEq(inst, parseProcIn("y[type 1]. (x <-> y)")));

  // Driving with a concrete label instantiates the same way.
  Label l = lAct(act(ActTag::RecvType, "x"));
  l.a.type = tBot();
  FreshNames f2;
  auto got = procStepWithLabel(sigma, p, l, f2);
  REQUIRE(got);
  CHECK(alphaEq(*got, parseProcIn("y[type bot]. (x <-> y)")));
}

TEST_CASE("process exchange wraps the receiver in a local definition") {
  Sigma sigma;
  FreshNames fresh;
  // Send a bundled closer to a receiver that immediately invokes it.
  Proc p = parseProcIn(
      "new (u : [| f : 1 |])(v) ( u[(f = a) a[].0]. g().0 | v(Q). Q<f = b> )");
  Proc s1 = stepTau(sigma, p, fresh, "cut-provide");
  REQUIRE(s1->tag == ProcTag::Chop);
  Proc s2 = stepTau(sigma, s1, fresh, "chop-run");
  CHECK(structEquiv(s2, parseProcIn("g().0 | b[].0")));
}

TEST_CASE("the divergent fixture cycles with the expected silent steps") {
  std::ifstream in("pills/omega.pill");
  REQUIRE(in);
  std::string src((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PillFile pill = parsePill(src);
  Proc omega = pill.procByName.at("Omega");

  const std::vector<std::string> cycle = {"cut-duplicate", "cut-send", "cut-use",
                                          "cut-send",      "cut-close", "cut-forward"};
  Proc s = omega;
  for (int lap = 0; lap < 3; ++lap) {
    for (const auto& rule : cycle) s = stepTau(pill.sigma, s, pill.fresh, rule);
    INFO("after lap " << lap);
    CHECK(structEquiv(s, omega));
  }
  // And it keeps going: ten further laps (sixty steps) never get stuck.
  for (int lap = 0; lap < 10; ++lap)
    for (const auto& rule : cycle) s = stepTau(pill.sigma, s, pill.fresh, rule);
  CHECK(structEquiv(s, omega));
}

// ---------------------------------------------------------------------------
// Environment system
// ---------------------------------------------------------------------------

namespace {

EnvState st(const Sigma& sigma, const std::string& env) {
  return EnvState{{}, parseHyperEnvIn(sigma, env)};
}

int countEnvRule(const std::vector<EnvTransition>& ts, const std::string& r) {
  int n = 0;
  for (const auto& t : ts)
    if (t.rule == r) ++n;
  return n;
}

}  // namespace

TEST_CASE("environment menus for the units") {
  Sigma sigma;
  FreshNames fresh;

  auto one = envStep(sigma, st(sigma, "x : 1"), fresh);
  CHECK(countEnvRule(one, "idle") == 1);
  CHECK(countEnvRule(one, "close") == 1);
  CHECK(one.size() == 2);
  for (const auto& t : one)
    if (t.rule == "close") {
      REQUIRE(t.target);
      CHECK(t.target->env.empty());
    }

  // A unit with company cannot close.
  auto busy = envStep(sigma, st(sigma, "x : 1, a : bot"), fresh);
  CHECK(countEnvRule(busy, "close") == 0);
  CHECK(countEnvRule(busy, "wait") == 1);
}

TEST_CASE("the latch environment waits, separately or jointly") {
  Sigma sigma;
  FreshNames fresh;
  auto ts = envStep(sigma, st(sigma, "x : bot, y : bot, z : 1"), fresh);
  CHECK(countEnvRule(ts, "wait") == 2);
  CHECK(countEnvRule(ts, "close") == 0);
  // The two waits can also fire together: the component splits between them
  // and rejoins around the remaining unit.
  REQUIRE(countEnvRule(ts, "sync") == 1);
  for (const auto& t : ts)
    if (t.rule == "sync") {
      REQUIRE(t.label.kind == Label::Kind::Pair);
      REQUIRE(t.target);
      REQUIRE(t.target->env.size() == 1);
      CHECK(eqSigma(sigma, t.target->env[0].at("z"), tOne()));
    }
  // But closing never shares a component, so no pair involves z.
  CHECK(ts.size() == 4);  // idle, two waits, one joint wait
}

TEST_CASE("a tensor splits its component every possible way") {
  Sigma sigma;
  FreshNames fresh;
  auto ts = envStep(sigma, st(sigma, "x : (1 * 1) * 1, a : bot, b : bot"), fresh);
  // Two leftover names, so four ways to divide them.
  CHECK(countEnvRule(ts, "split") == 4);
  for (const auto& t : ts)
    if (t.rule == "split") {
      REQUIRE(t.target);
      CHECK(t.target->env.size() == 2);
    }
}

TEST_CASE("client permissions on a shared channel") {
  Sigma sigma;
  FreshNames fresh;
  auto ts = envStep(sigma, st(sigma, "x : ?1"), fresh);
  CHECK(countEnvRule(ts, "use") == 1);
  CHECK(countEnvRule(ts, "dispose") == 1);
  CHECK(countEnvRule(ts, "duplicate") == 1);
  for (const auto& t : ts)
    if (t.rule == "dispose") {
      REQUIRE(t.label.a.anno);
      CHECK(eqSigma(sigma, t.label.a.anno, tOne()));
      REQUIRE(t.target);
      REQUIRE(t.target->env.size() == 1);
      CHECK(eqSigma(sigma, t.target->env[0].at("x"), tBot()));
    }
}

TEST_CASE("server permissions need client company") {
  Sigma sigma;
  FreshNames fresh;

  // Alone with a client-typed companion: everything is available, and the
  // two dual names can also just be wired together.
  auto ts = envStep(sigma, st(sigma, "x : !1, g : ?bot"), fresh);
  CHECK(countEnvRule(ts, "server") == 1);
  CHECK(countEnvRule(ts, "server-duplicate") == 1);
  CHECK(countEnvRule(ts, "server-dispose") == 1);
  CHECK(countEnvRule(ts, "forward") == 2);

  // With a linear companion, acceptance and duplication are blocked;
  // disposal is not.
  auto lin = envStep(sigma, st(sigma, "x : !1, g : bot"), fresh);
  CHECK(countEnvRule(lin, "server") == 0);
  CHECK(countEnvRule(lin, "server-duplicate") == 0);
  CHECK(countEnvRule(lin, "server-dispose") == 1);
}

TEST_CASE("the environment system admits matching moves") {
  Sigma sigma;
  EnvState s{{}, parseHyperEnvIn(sigma, "x : 1 | z : bot")};

  // Silent moves loop in place.
  CHECK(envAdmits(sigma, s, lTau(), s));

  // A single close drops the unit component.
  Label close = lAct(act(ActTag::Close, "x"));
  EnvState after{{}, parseHyperEnvIn(sigma, "z : bot")};
  CHECK(envAdmits(sigma, s, close, after));
  CHECK_FALSE(envAdmits(sigma, s, close, s));

  // Both actions can fire together, emptying the judgement.
  Label both = lAct(act(ActTag::Close, "x"));
  both.kind = Label::Kind::Pair;
  both.b = act(ActTag::Wait, "z");
  CHECK(envAdmits(sigma, s, both, EnvState{{}, {}}));
}

// ---------------------------------------------------------------------------
// Derivation system
// ---------------------------------------------------------------------------

namespace {

Derivation follow(const Sigma& sigma, const Derivation& d, FreshNames& fresh,
                  const std::string& rule, const Name& subject = "") {
  std::vector<std::string> issues;
  auto ts = derStep(sigma, d, fresh, &issues);
  INFO("state: " << showJudgement(d));
  for (const auto& i : issues) INFO("issue: " << i);
  CHECK(issues.empty());
  for (const auto& t : ts) {
    if (t.rule != rule || !t.target) continue;
    if (!subject.empty() &&
        !(t.label.kind == Label::Kind::Action && t.label.a.subject == subject))
      continue;
    return *t.target;
  }
  INFO("missing rule: " << rule);
  REQUIRE(false);
  return d;
}

}  // namespace

TEST_CASE("the latch runs to the empty judgement") {
  std::ifstream in("pills/latch.pill");
  REQUIRE(in);
  std::string src((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PillFile pill = parsePill(src);
  Proc latch = pill.procByName.at("Latch");
  Derivation d = checkProc(pill.sigma, latch,
                           parseHyperEnvIn(pill.sigma, "x : bot, y : bot, z : 1"));

  d = follow(pill.sigma, d, pill.fresh, "wait");       // x goes
  d = follow(pill.sigma, d, pill.fresh, "cut-close");  // first internal latch
  d = follow(pill.sigma, d, pill.fresh, "wait");       // y goes
  d = follow(pill.sigma, d, pill.fresh, "cut-close");  // second internal latch
  CHECK(eqSigma(pill.sigma, d.env, parseHyperEnvIn(pill.sigma, "z : 1")));
  d = follow(pill.sigma, d, pill.fresh, "close");      // z fires
  CHECK(d.env.empty());
}

TEST_CASE("derivation steps report their judgements along a replay") {
  Sigma sigma;
  FreshNames fresh;
  Proc p = parseProcIn(
      "new (x : 1 * 1)(y) ( x[w]. (g().x[].0 | w[].0) | y(v). z().y().v().0 )");
  HyperEnv goal = parseHyperEnvIn(sigma, "g : bot, z : bot");
  Derivation d = checkProc(sigma, p, goal);

  // First step: the restricted pair exchanges a channel, silently. The
  // judgement's conclusion is untouched.
  d = follow(sigma, d, fresh, "cut-send");
  CHECK(eqSigma(sigma, d.env, goal));
  REQUIRE(d.term->tag == ProcTag::Cut);

  // Second step: the observable wait on z discharges it.
  d = follow(sigma, d, fresh, "wait", "z");
  CHECK(eqSigma(sigma, d.env, parseHyperEnvIn(sigma, "g : bot")));
}

TEST_CASE("the divergent fixture cycles at the derivation level") {
  std::ifstream in("pills/omega.pill");
  REQUIRE(in);
  std::string src((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PillFile pill = parsePill(src);
  Proc omega = pill.procByName.at("Omega");
  Derivation d = checkProc(pill.sigma, omega, {});

  const std::vector<std::string> cycle = {"cut-duplicate", "cut-send", "cut-use",
                                          "cut-send",      "cut-close", "cut-forward"};
  for (const auto& rule : cycle) d = follow(pill.sigma, d, pill.fresh, rule);
  CHECK(structEquiv(d.term, omega));
  CHECK(d.env.empty());
}
