// Type checker tests: golden judgements for the bundled example pills,
// rejection of flipped/mutated environments, and per-rule side conditions.
#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "hyperpill/parser.hpp"
#include "hyperpill/typing.hpp"

using namespace hyperpill;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PillFile load(const std::string& path) { return parsePill(slurp(path)); }

// Run every `check` directive in the file; they must all pass.
void runChecks(const PillFile& f) {
  for (const auto& c : f.checks) {
    INFO("check at line " << c.line << ": " << c.proc);
    Derivation d = checkProc(f.sigma, f.procByName.at(c.proc), c.env);
    CHECK(d.rule.size() > 0);
  }
}

bool rejects(const Sigma& sigma, const Proc& p, const HyperEnv& env) {
  return !typechecks(sigma, p, env);
}

}  // namespace

TEST_CASE("latch pill typechecks against its declared environment") {
  PillFile f = load("pills/latch.pill");
  runChecks(f);

  const Proc& latch = f.procByName.at("Latch");
  // Flipping any endpoint's polarity must be rejected.
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : 1, y : bot, z : 1")));
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : bot, y : 1, z : 1")));
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : bot, y : bot, z : bot")));
  // Splitting the conclusion into parallel components must be rejected:
  // the cuts connect all three threads.
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : bot, y : bot | z : 1")));
  // Missing or extra names must be rejected.
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : bot, y : bot")));
  CHECK(rejects(f.sigma, latch, parseHyperEnvIn(f.sigma, "x : bot, y : bot, z : 1, w : 1")));
}

TEST_CASE("and gate pill typechecks and its derivation uses the expected rules") {
  PillFile f = load("pills/and_gate.pill");
  runChecks(f);

  // The composition's derivation starts with a cut over a mix.
  Derivation d = checkProc(f.sigma, f.procByName.at("AndSystem"),
                           parseHyperEnvIn(f.sigma, "z : Bit"));
  CHECK(d.rule == "cut");
  REQUIRE(d.kids.size() == 1);
  CHECK(d.kids[0].rule == "mix");

  // Dual-flipped environments are rejected.
  const Proc& server = f.procByName.at("AndServer");
  CHECK(rejects(f.sigma, server,
                parseHyperEnvIn(f.sigma, "y : ?(~Bit @ ~Bit @ Bit * 1)")));
  CHECK(rejects(f.sigma, server,
                parseHyperEnvIn(f.sigma, "y : !(Bit @ ~Bit @ Bit * 1)")));
  CHECK(rejects(f.sigma, server,
                parseHyperEnvIn(f.sigma, "y : !(~Bit * ~Bit * Bit @ 1)")));
  const Proc& client = f.procByName.at("AndClient");
  CHECK(rejects(f.sigma, client,
                parseHyperEnvIn(f.sigma, "x : ?(Bit * Bit * (~Bit @ bot)), z : ~Bit")));
  CHECK(rejects(f.sigma, client,
                parseHyperEnvIn(f.sigma, "x : !(Bit * Bit * (~Bit @ bot)), z : Bit")));
}

TEST_CASE("gateway pill typechecks; mutants with broken polymorphism are rejected") {
  PillFile f = load("pills/gateway.pill");
  runChecks(f);

  const Proc& gw = f.procByName.at("Gateway");
  // Dual flip on the offered services.
  CHECK(rejects(f.sigma, gw, parseHyperEnvIn(
      f.sigma, "x : all Xl. all Xr. ?Xl @ ?Xr @ !(Xl & ~Xr)")));
  CHECK(rejects(f.sigma, gw, parseHyperEnvIn(
      f.sigma, "x : all Xl. all Xr. ?Xl @ ?Xr @ ?(~Xl & ~Xr)")));
  // Existentials in place of universals: the term receives types.
  CHECK(rejects(f.sigma, gw, parseHyperEnvIn(
      f.sigma, "x : ex Xl. all Xr. ?Xl @ ?Xr @ !(~Xl & ~Xr)")));
  // Swapping the branch order of the offered choice.
  CHECK(rejects(f.sigma, gw, parseHyperEnvIn(
      f.sigma, "x : all Xl. all Xr. ?Xl @ ?Xr @ !(~Xr & ~Xl)")));
}

TEST_CASE("cloud pill typechecks; code mobility mutants are rejected") {
  PillFile f = load("pills/cloud.pill");
  runChecks(f);

  const Proc& srv = f.procByName.at("CloudServer");
  // Flipping provide/assume on the mobile code is rejected.
  CHECK(rejects(f.sigma, srv, parseHyperEnvIn(f.sigma,
      "cs : !( ( [| f : ~Proto |] @ <| f : Proto |> ) & ( Proto @ <| f : Proto |> ) )")));
  // Flipping the protocol's polarity inside the carried environment.
  CHECK(rejects(f.sigma, srv, parseHyperEnvIn(f.sigma,
      "cs : !( ( <| f : Proto |> @ <| f : Proto |> ) & ( Proto @ <| f : Proto |> ) )")));
  // The whole-system environment is empty, not a dangling endpoint.
  CHECK(rejects(f.sigma, f.procByName.at("CloudSystem"),
                parseHyperEnvIn(f.sigma, "cs : 1")));
}

TEST_CASE("omega pill typechecks under its recursive signature") {
  PillFile f = load("pills/omega.pill");
  runChecks(f);

  // The client side really needs the equirecursive unfolding: the
  // syntactic type ~T is not a query type until unfolded.
  const Proc& use = f.procByName.at("OmegaUse");
  CHECK(typechecks(f.sigma, use, parseHyperEnvIn(f.sigma, "x : ?(T * 1)")));
  CHECK(rejects(f.sigma, use, parseHyperEnvIn(f.sigma, "x : T")));
  CHECK(rejects(f.sigma, use, parseHyperEnvIn(f.sigma, "x : ?(~T * 1)")));

  // Omega inhabits the empty hyperenvironment.
  Derivation d = checkProc(f.sigma, f.procByName.at("Omega"), HyperEnv{});
  CHECK(d.rule == "cut");
}

TEST_CASE("structural rules: mix, cut, and the empty process") {
  Sigma sigma;
  CHECK(typechecks(sigma, parseProcIn("0"), HyperEnv{}));
  CHECK(rejects(sigma, parseProcIn("0"),
                parseHyperEnvIn(sigma, "x : 1")));

  // mix: components line up with parallel threads.
  Proc two = parseProcIn("x[].0 | y[].0");
  CHECK(typechecks(sigma, two, parseHyperEnvIn(sigma, "x : 1 | y : 1")));
  // A single component cannot type two independent threads.
  CHECK(rejects(sigma, two, parseHyperEnvIn(sigma, "x : 1, y : 1")));

  // cut: requires dual endpoint types and an annotation.
  Proc cut = parseProcIn("new (a : 1)(b) (a[].0 | b().0)");
  CHECK(typechecks(sigma, cut, HyperEnv{}));
  Proc cutBad = parseProcIn("new (a : bot)(b) (a[].0 | b().0)");
  CHECK(rejects(sigma, cutBad, HyperEnv{}));

  // cut with both endpoints in one component (self-cut) is rejected.
  Proc selfCut = parseProcIn("new (a : 1)(b) (a[].b().0)");
  CHECK(rejects(sigma, selfCut, HyperEnv{}));

  // Free names must match the environment exactly in both directions.
  Proc wait = parseProcIn("x().0");
  CHECK(typechecks(sigma, wait, parseHyperEnvIn(sigma, "x : bot")));
  CHECK(rejects(sigma, wait, parseHyperEnvIn(sigma, "x : bot, y : bot")));
}

TEST_CASE("multiplicatives: output needs parallel continuations") {
  Sigma sigma;
  // Well-typed output: payload and continuation in separate threads.
  Proc good = parseProcIn("x[y].(y[].0 | x[].0)");
  CHECK(typechecks(sigma, good, parseHyperEnvIn(sigma, "x : 1 * 1")));
  // Payload-first: the flipped tensor is rejected when operands differ.
  Proc mixed = parseProcIn("x[y].(y[].0 | x().0)");
  CHECK(typechecks(sigma, mixed, parseHyperEnvIn(sigma, "x : 1 * bot")));
  CHECK(rejects(sigma, mixed, parseHyperEnvIn(sigma, "x : bot * 1")));
  // Sequential use of payload and subject violates the two-component premise.
  Proc seq = parseProcIn("x[y].y[].x[].0");
  CHECK(rejects(sigma, seq, parseHyperEnvIn(sigma, "x : 1 * 1")));

  // Input joins the payload and subject in one component.
  Proc in = parseProcIn("x(y).(y[].x[].0)");
  CHECK(rejects(sigma, in, parseHyperEnvIn(sigma, "x : 1 @ 1")));
  Proc in2 = parseProcIn("x(y).y().x[].0");
  CHECK(typechecks(sigma, in2, parseHyperEnvIn(sigma, "x : bot @ 1")));

  // close: continuation must be independent of everything.
  CHECK(rejects(sigma, parseProcIn("x[].y[].0"),
                parseHyperEnvIn(sigma, "x : 1, y : 1")));
  CHECK(typechecks(sigma, parseProcIn("x[].new (a : 1)(b) (a[].0 | b().0)"),
                   parseHyperEnvIn(sigma, "x : 1")));
}

TEST_CASE("additives: both branches see the same leftover environment") {
  Sigma sigma;
  Proc p = parseProcIn("x.case(x().y[].0, x().y[].0)");
  CHECK(typechecks(sigma, p, parseHyperEnvIn(sigma, "x : bot & bot, y : 1")));
  // Branches that use the context differently are rejected.
  Proc q = parseProcIn("x.case(x().y[].0, y().x[].0)");
  CHECK(rejects(sigma, q, parseHyperEnvIn(sigma, "x : (bot & 1), y : (1 & bot)")));
  // Selection picks the matching disjunct.
  CHECK(typechecks(sigma, parseProcIn("x[inl].x[].0"),
                   parseHyperEnvIn(sigma, "x : 1 + bot")));
  CHECK(rejects(sigma, parseProcIn("x[inl].x[].0"),
                parseHyperEnvIn(sigma, "x : bot + 1")));
  CHECK(typechecks(sigma, parseProcIn("x[inr].x[].0"),
                   parseHyperEnvIn(sigma, "x : bot + 1")));
}

TEST_CASE("exponentials: promotion context, dereliction, weakening, contraction") {
  Sigma sigma;
  // Promotion requires every other name to be client-typed.
  Proc srv = parseProcIn("!x(y).y().z'[].0");
  CHECK(rejects(sigma, srv, parseHyperEnvIn(sigma, "x : !bot, z' : 1")));
  Proc srvOk = parseProcIn("!x(y).(y().?z'[w].w[].0)");
  CHECK(typechecks(sigma, srvOk, parseHyperEnvIn(sigma, "x : !bot, z' : ?1")));
  // Dereliction.
  CHECK(typechecks(sigma, parseProcIn("?x[y].y[].0"),
                   parseHyperEnvIn(sigma, "x : ?1")));
  // Weakening: the subject must not occur in the continuation.
  CHECK(typechecks(sigma, parseProcIn("?x[].y[].0"),
                   parseHyperEnvIn(sigma, "x : ?bot, y : 1")));
  CHECK(rejects(sigma, parseProcIn("?x[].y[].0"),
                parseHyperEnvIn(sigma, "x : ?bot, y : 1, z : ?1")));
  // Contraction gives both copies the same client type, in one component.
  CHECK(typechecks(sigma, parseProcIn("?x[a,b].?a[u].u().?b[v].v().z[].0"),
                   parseHyperEnvIn(sigma, "x : ?bot, z : 1")));
  // Copies at different types are rejected.
  CHECK(rejects(sigma, parseProcIn("?x[a,b].?a[u].u().?b[v].v[].0"),
                parseHyperEnvIn(sigma, "x : ?bot")));
  // Copies split across parallel components are rejected.
  CHECK(rejects(sigma, parseProcIn("?x[a,b].(?a[u].u[].0 | ?b[v].v[].0)"),
                parseHyperEnvIn(sigma, "x : ?1")));
}

TEST_CASE("quantifiers: instantiation and the escape condition") {
  Sigma sigma;
  // Sending a concrete type instantiates the existential.
  CHECK(typechecks(sigma, parseProcIn("x[type 1].x[].0"),
                   parseHyperEnvIn(sigma, "x : ex X. X")));
  CHECK(typechecks(sigma, parseProcIn("x[type bot].x().0"),
                   parseHyperEnvIn(sigma, "x : ex X. X")));
  CHECK(rejects(sigma, parseProcIn("x[type bot].x[].0"),
                parseHyperEnvIn(sigma, "x : ex X. X")));
  // Receiving a type is parametric: the variable cannot leak into the
  // types of other names in the same component.
  CHECK(typechecks(sigma, parseProcIn("x(type X).x(y).y<->x"),
                   parseHyperEnvIn(sigma, "x : all X. ~X @ X")));
  CHECK(rejects(sigma, parseProcIn("x(type X).y<->x"),
                parseHyperEnvIn(sigma, "y : all X. ~X, x : all X. X")));

  // The forwarder relates dual endpoints only.
  CHECK(typechecks(sigma, parseProcIn("y<->x"),
                   parseHyperEnvIn(sigma, "y : 1 * bot, x : bot @ 1")));
  CHECK(rejects(sigma, parseProcIn("y<->x"),
                parseHyperEnvIn(sigma, "y : 1 * bot, x : 1 @ bot")));
}

TEST_CASE("higher-order rules: abstraction closure, linear process variables") {
  Sigma sigma;
  // provide: the abstraction body must use exactly the record's image.
  Proc prov = parseProcIn("x[(f=a) a[].0].0");
  CHECK(typechecks(sigma, prov, parseHyperEnvIn(sigma, "x : [| f : 1 |]")));
  CHECK(rejects(sigma, prov, parseHyperEnvIn(sigma, "x : [| f : bot |]")));
  CHECK(rejects(sigma, prov, parseHyperEnvIn(sigma, "x : <| f : 1 |>")));
  // Abstraction with a free name outside its record is rejected.
  Proc leaky = parseProcIn("x[(f=a) a().b[].0].0");
  CHECK(rejects(sigma, leaky, parseHyperEnvIn(sigma, "x : [| f : bot |], b : 1")));

  // assume binds a process variable that must be used exactly once.
  Proc once = parseProcIn("x(P). new (z : 1)(w) (P<f=z> | w().0)");
  CHECK(typechecks(sigma, once, parseHyperEnvIn(sigma, "x : <| f : 1 |>")));
  Proc dropped = parseProcIn("x(P).0");
  CHECK(rejects(sigma, dropped, parseHyperEnvIn(sigma, "x : <| f : 1 |>")));

  // A multi-component carried environment invokes into a hyperenvironment.
  Proc multi = parseProcIn(
      "x(P). new (z : 1)(w) (P<f=z, g=u> | w().0)");
  CHECK(typechecks(sigma, multi,
                   parseHyperEnvIn(sigma, "x : <| f : 1 | g : 1 |>, u : 1")));
  // Invocation records must be injective.
  CHECK(rejects(sigma, parseProcIn("x(P). new (z : 1)(w) (P<f=z, g=z> | w().0)"),
                parseHyperEnvIn(sigma, "x : <| f : 1 | g : 1 |>")));

  // An abstraction can be spawned in place with its own wiring.
  Proc chop = parseProcIn("let P :: { f : 1 } = (f=a) a[].0 in "
                          "new (z : 1)(w) (P<f=z> | w().0)");
  CHECK(typechecks(sigma, chop, HyperEnv{}));
  // The spawned body's environment annotation must match the abstraction.
  Proc chopBad = parseProcIn("let P :: { f : bot } = (f=a) a[].0 in "
                             "new (z : 1)(w) (P<f=z> | w().0)");
  CHECK(rejects(sigma, chopBad, HyperEnv{}));
}

TEST_CASE("derivations record their judgements") {
  Sigma sigma;
  Proc p = parseProcIn("x(y).y().x[].0");
  Derivation d = checkProc(sigma, p, parseHyperEnvIn(sigma, "x : bot @ 1"));
  CHECK(d.rule == "par");
  REQUIRE(d.kids.size() == 1);
  CHECK(d.kids[0].rule == "bot");
  REQUIRE(d.kids[0].kids.size() == 1);
  CHECK(d.kids[0].kids[0].rule == "one");
  CHECK(showHyperEnv(d.env) == "x:bot @ 1");
  CHECK(showJudgement(d) == ". |- x(y).y().x[].0 :: x:bot @ 1");
}
