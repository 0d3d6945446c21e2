// Behavioural equivalence tests: the structural laws of bisimilarity, weak
// versus strong discrimination, distinguishing traces, higher-order payload
// comparison, process-environment similarity, and the erasure/fidelity
// correspondence between the three transition systems.
#include <catch2/catch_amalgamated.hpp>

#include "hyperpill/equivalence.hpp"
#include "hyperpill/parser.hpp"

using namespace hyperpill;

namespace {

const Sigma emptySigma;

Proc P(const std::string& src) { return parseProcIn(src); }
HyperEnv G(const std::string& src) { return parseHyperEnvIn(emptySigma, src); }

}  // namespace

TEST_CASE("parallel unit: P | 0 is strongly bisimilar to P") {
  for (const char* p : {"x[].0", "x().y[].0", "x(y). (y[].0 | x[].0)",
                        "new (a : 1)(b) (a[].0 | b().c[].0)"}) {
    INFO(p);
    Proc lhs = pPar(P(p), pNil());
    CHECK(strongBisim(emptySigma, lhs, P(p)).related());
  }
}

TEST_CASE("parallel composition is commutative up to strong bisimilarity") {
  Proc p = P("x().0"), q = P("y().0");
  auto v = strongBisim(emptySigma, pPar(p, q), pPar(q, p));
  CHECK(v.related());
  // The joint menu of two waiting inputs includes their paired action; the
  // game must align pairs in either orientation.
  Proc r = P("x().0 | y().0");
  FreshNames fresh;
  bool sawPair = false;
  for (const auto& t : procStep(emptySigma, r, fresh))
    sawPair |= t.label.kind == Label::Kind::Pair;
  CHECK(sawPair);
}

TEST_CASE("parallel composition is associative up to strong bisimilarity") {
  Proc p = P("x[].0"), q = P("y().0"), r = P("z().w[].0");
  CHECK(strongBisim(emptySigma, pPar(p, pPar(q, r)), pPar(pPar(p, q), r)).related());
}

TEST_CASE("restriction commutes with parallel when it captures nothing") {
  // new (x y) (P | Q) ~ (new (x y) P) | Q when x, y not free in Q.
  Proc body = P("x[].0 | y().z[].0");
  Proc q = P("w().0");
  Proc lhs = pCut("x", tOne(), "y", pPar(body, q));
  Proc rhs = pPar(pCut("x", tOne(), "y", body), q);
  CHECK(strongBisim(emptySigma, lhs, rhs).related());
}

TEST_CASE("adjacent restrictions commute up to strong bisimilarity") {
  Proc body = P("x[].0 | y().(a[].0 | b().c[].0)");
  Proc lhs = pCut("x", tOne(), "y", pCut("a", tOne(), "b", body));
  Proc rhs = pCut("a", tOne(), "b", pCut("x", tOne(), "y", body));
  CHECK(strongBisim(emptySigma, lhs, rhs).related());
}

TEST_CASE("an output is not bisimilar to an input, with a distinguishing trace") {
  auto v = strongBisim(emptySigma, P("x[].0"), P("x().0"));
  REQUIRE(v.notRelated());
  REQUIRE_FALSE(v.trace.empty());
  CHECK(v.trace.front() == "x[]");
}

TEST_CASE("weak bisimilarity forgets internal steps; strong does not") {
  Proc stepped = P("new (x : 1)(y) (x[].0 | y().z[].0)");
  Proc direct = P("z[].0");
  CHECK(weakBisim(emptySigma, stepped, direct).related());
  CHECK(strongBisim(emptySigma, stepped, direct).notRelated());
}

TEST_CASE("similarity is not symmetric") {
  // The inert process is simulated by anything, but simulates only inert ones.
  CHECK(weakSim(emptySigma, pNil(), P("x[].0")).related());
  CHECK(weakSim(emptySigma, P("x[].0"), pNil()).notRelated());
  CHECK(weakBisim(emptySigma, pNil(), P("x[].0")).notRelated());
}

TEST_CASE("selection branches must both be answered") {
  Proc both = P("x.case(y[].0, y().0)");
  CHECK(strongBisim(emptySigma, both, both).related());
  Proc leftOnly = P("x.case(y[].0, y[].0)");
  auto v = strongBisim(emptySigma, both, leftOnly);
  REQUIRE(v.notRelated());
}

TEST_CASE("type receive is compared over representative instantiations") {
  Proc a = P("x(type X). y[].0");
  Proc b = pPar(P("x(type X). y[].0"), pNil());
  CHECK(strongBisim(emptySigma, a, b).related());
  auto v = strongBisim(emptySigma, a, P("x(type X). z[].0"));
  CHECK(v.notRelated());
}

TEST_CASE("higher-order payloads are compared up to their field names") {
  // The same abstraction over different channel spellings.
  Proc a = P("u[(f = a) a[].0]. 0");
  Proc b = P("u[(f = b) b[].0]. 0");
  CHECK(strongBisim(emptySigma, a, b).related());

  Proc c = P("u[(f = a) a().0]. 0");
  CHECK(strongBisim(emptySigma, a, c).notRelated());
}

TEST_CASE("payload comparison recurses through behavioural equivalence") {
  // Payload bodies differ syntactically but only by a structural law.
  Proc a = P("u[(f = a) a[].0 | 0]. 0");
  Proc b = P("u[(f = b) b[].0]. 0");
  auto v = strongBisim(emptySigma, a, b);
  CHECK(v.related());
}

TEST_CASE("the environment of a well-typed process simulates it") {
  Proc latch = P("x().y().z[].0");
  auto v = weakSimProcEnv(emptySigma, latch, G("x : bot, y : bot, z : 1"));
  CHECK(v.related());
}

TEST_CASE("the environment answers joint actions of cut-connected threads") {
  // Two threads joined by a restriction type at a single component; they can
  // fire their outer inputs jointly, and the environment must admit the
  // paired step within that component.
  Proc p = P("new (a : 1)(b) (x().a[].0 | y().b().z[].0)");
  CHECK(weakSimProcEnv(emptySigma, p, G("x : bot, y : bot, z : 1")).related());
  // Parallel threads without the cut live in separate components.
  Proc q = P("x().z[].0 | y().0");
  CHECK(weakSimProcEnv(emptySigma, q, G("x : bot, z : 1 | y : bot")).related());
  CHECK_FALSE(weakSimProcEnv(emptySigma, q, G("x : bot, y : bot, z : 1")).related());
}

TEST_CASE("typing and similarity agree on typed and on mistyped processes") {
  auto ok = similarityTyping(emptySigma, P("x().y().z[].0"),
                             G("x : bot, y : bot, z : 1"));
  CHECK(ok.viaTyping);
  CHECK(ok.viaSimilarity.related());
  CHECK(ok.agrees);

  auto bad = similarityTyping(emptySigma, P("x[].0"), G("x : bot"));
  CHECK_FALSE(bad.viaTyping);
  CHECK(bad.viaSimilarity.notRelated());
  CHECK(bad.agrees);
}

TEST_CASE("similarity is strictly coarser than typing") {
  // After the output the process deadlocks silently; the environment never
  // sees a difference, but the type system rejects the dead restriction.
  Proc p = P("x[]. new (a : 1)(b) 0");
  auto r = similarityTyping(emptySigma, p, G("x : 1"));
  CHECK_FALSE(r.viaTyping);
  CHECK(r.viaSimilarity.related());
  CHECK_FALSE(r.agrees);
}

TEST_CASE("derivation steps erase to process steps, menu for menu") {
  const std::pair<const char*, const char*> cases[] = {
      {"x().y().z[].0", "x : bot, y : bot, z : 1"},
      {"new (x : 1)(y) (x[].0 | y().z[].0)", "z : 1"},
      {"x[inl]. x[].0", "x : 1 + bot"},
      {"x(type X). x[].0", "x : all X. 1"},
      {"x[y]. (y[].0 | x[].0)", "x : 1 * 1"},
  };
  for (const auto& [src, env] : cases) {
    INFO(src << " :: " << env);
    Derivation d = checkProc(emptySigma, P(src), G(env));
    CHECK(checkErasure(emptySigma, d).related());
  }
}

TEST_CASE("every derivation step is admitted by the environment system") {
  Derivation d = checkProc(emptySigma, P("x().y().z[].0"),
                           G("x : bot, y : bot, z : 1"));
  CHECK(checkFidelity(emptySigma, d).related());

  Derivation d2 = checkProc(
      emptySigma, P("new (x : 1)(y) (x[].0 | y().z[].0)"), G("z : 1"));
  CHECK(checkFidelity(emptySigma, d2).related());
}

TEST_CASE("erasure and fidelity find no fault in a replicated server") {
  // Duplication makes the reachable region infinite, so the walk is bounded:
  // within the budget no divergence between the systems may surface, and the
  // truncated verdict must be reported as unknown rather than as success.
  Sigma sigma;
  Proc p = parseProcIn("!x(y). y[].0");
  HyperEnv g = parseHyperEnvIn(sigma, "x : !1");
  Derivation d = checkProc(sigma, p, g);
  ExploreConfig cfg = defaultExplore();
  cfg.maxStates = 40;
  auto e = checkErasure(sigma, d, cfg);
  CHECK_FALSE(e.notRelated());
  CHECK(e.unknown());
  auto f = checkFidelity(sigma, d, cfg);
  CHECK_FALSE(f.notRelated());
  CHECK(f.unknown());
}

TEST_CASE("verdicts expose their evidence") {
  auto yes = strongBisim(emptySigma, P("x[].0"), P("x[].0 | 0"));
  REQUIRE(yes.related());
  CHECK(yes.pairsExplored >= 1);

  auto no = strongBisim(emptySigma, P("x[].y[].0"), P("x[].z[].0"));
  REQUIRE(no.notRelated());
  REQUIRE(no.trace.size() == 2);
  CHECK(no.trace[0] == "x[]");
  CHECK(no.trace[1] == "y[]");
}
