// Transformation tests: disentanglement and the component shape it exposes,
// packing a derivation onto a single channel and reading it back, forwarder
// expansion and its soundness, the split-explicit multiplicative checker,
// and compiling higher-order processes down to first-order ones.
#include <catch2/catch_amalgamated.hpp>

#include "hyperpill/equivalence.hpp"
#include "hyperpill/parser.hpp"
#include "hyperpill/transform.hpp"

using namespace hyperpill;

namespace {

const Sigma emptySigma;

Proc P(const std::string& src) { return parseProcIn(src); }
HyperEnv G(const std::string& src) { return parseHyperEnvIn(emptySigma, src); }
Type T(const std::string& src) { return parseTypeIn(emptySigma, src); }

}  // namespace

// ---------------------------------------------------------------------------
// Disentanglement.

TEST_CASE("disentangling pushes a restriction to its two using pieces") {
  Proc p = P("new (y1 : 1)(y2) (x(). x1[]. 0 | y(). y1[]. 0 | x2(). y2(). z[]. 0)");
  Disentangled d = disentangle(p);
  CHECK_FALSE(d.residual);
  Proc want = P("x(). x1[]. 0 | new (y1 : 1)(y2) (y(). y1[]. 0 | x2(). y2(). z[]. 0)");
  CHECK(alphaEq(d.proc, want));
}

TEST_CASE("disentangling drops inert parallel units") {
  CHECK(alphaEq(disentangle(pPar(P("x[].0"), pNil())).proc, P("x[].0")));
  CHECK(alphaEq(disentangle(pPar(pNil(), P("x[].0"))).proc, P("x[].0")));
  CHECK(alphaEq(disentangle(pPar(pNil(), pNil())).proc, pNil()));
}

TEST_CASE("disentangling preserves strong bisimilarity") {
  for (const char* src :
       {"new (y1 : 1)(y2) (x(). x1[]. 0 | y(). y1[]. 0 | x2(). y2(). z[]. 0)",
        "new (a : 1)(b) (x(). a[]. 0 | y(). b(). z[]. 0)",
        "w(). new (a : 1)(b) (a[]. 0 | b(). z[]. 0)",
        "new (a : 1 * 1)(b) (a[u]. (u[]. 0 | a[]. 0) | b(v). v(). b(). c[]. 0 | d(). 0)"}) {
    INFO(src);
    Proc p = P(src);
    CHECK(strongBisim(emptySigma, p, disentangle(p).proc).related());
  }
}

TEST_CASE("a well-typed process disentangles into one piece per component") {
  struct C {
    const char* p;
    const char* g;
  };
  for (const C& c :
       {C{"new (y1 : 1)(y2) (x(). x1[]. 0 | y(). y1[]. 0 | x2(). y2(). z[]. 0)",
          "x : bot, x1 : 1 | y : bot, x2 : bot, z : 1"},
        C{"x[]. 0 | y(). 0 | z(). w[]. 0", "x : 1 | y : bot | z : bot, w : 1"},
        C{"new (a : 1)(b) (x(). a[]. 0 | y(). b(). z[]. 0)",
          "x : bot, y : bot, z : 1"}}) {
    INFO(c.p);
    Derivation d = checkProc(emptySigma, P(c.p), G(c.g));
    std::vector<Proc> pieces = detail::disPieces(d.term, "the test subject");
    REQUIRE(pieces.size() == d.env.size());
    detail::PieceAlignment al = detail::alignPieces(pieces, d.env);
    CHECK(al.spare.empty());
    for (std::size_t i = 0; i < d.env.size(); ++i) {
      INFO(showProc(al.aligned[i]));
      CHECK(typechecks(emptySigma, al.aligned[i], {d.env[i]}));
    }
  }
}

TEST_CASE("a restriction whose endpoints share a piece is flagged") {
  Proc p = P("new (x : 1)(y) w(). x[]. y(). 0");
  Disentangled d = disentangle(p);
  CHECK(d.residual);
  CHECK(alphaEq(d.proc, p));
}

TEST_CASE("a restriction whose endpoints occur nowhere is flagged") {
  Disentangled d = disentangle(pCut("x", tOne(), "y", pNil()));
  CHECK(d.residual);
}

// ---------------------------------------------------------------------------
// Packing.

TEST_CASE("packing a one-component derivation lays down the full spine") {
  Derivation d = checkProc(emptySigma, P("z(). 0"), G("z : bot"));
  Proc packed = pack(d, "x");
  CHECK(alphaEq(packed, P("x[y]. (x[]. 0 | y(z). y(). z(). 0)")));
  Type t = packTensor(d.env, detail::defaultOrders(d.env), "x").type;
  CHECK(eqSigma(emptySigma, t, T("(bot @ bot) * 1")));
  CHECK(typechecks(emptySigma, packed, {{{"x", t}}}));
  CHECK(typechecksMCP(emptySigma, packed, {{"x", t}}));
}

TEST_CASE("packing the empty derivation is a bare close") {
  Derivation d = checkProc(emptySigma, pNil(), {});
  Proc packed = pack(d, "x");
  CHECK(alphaEq(packed, P("x[]. 0")));
  CHECK(typechecksMCP(emptySigma, packed, {{"x", tOne()}}));
}

TEST_CASE("packing internalises every component of a hyperenvironment") {
  Derivation d =
      checkProc(emptySigma, P("x(). z[]. 0 | y(). 0"), G("x : bot, z : 1 | y : bot"));
  Proc packed = pack(d, "w");
  Type t = packTensor(d.env, detail::defaultOrders(d.env), "w").type;
  CHECK(eqSigma(emptySigma, t, T("(bot @ (1 @ bot)) * ((bot @ bot) * 1)")));
  CHECK(typechecks(emptySigma, packed, {{{"w", t}}}));
  CHECK(typechecksMCP(emptySigma, packed, {{"w", t}}));
}

TEST_CASE("packing refuses a channel that is already in use") {
  Derivation d = checkProc(emptySigma, P("z(). 0"), G("z : bot"));
  CHECK_THROWS_AS(pack(d, "z"), Error);
}

TEST_CASE("reading a packed derivation back restores the components") {
  Derivation d =
      checkProc(emptySigma, P("x(). z[]. 0 | y(). 0"), G("x : bot, z : 1 | y : bot"));
  Proc packed = pack(d, "w");
  Type t = packTensor(d.env, detail::defaultOrders(d.env), "w").type;
  Derivation dp = checkProc(emptySigma, packed, {{{"w", t}}});
  Derivation back = psi(emptySigma, dp);
  CHECK(eqSigma(emptySigma, back.env, d.env));
  REQUIRE(back.env.size() == 2);
  CHECK(back.env[0].count("x"));
  CHECK(back.env[1].count("y"));
  CHECK(alphaEq(back.term, P("x(). z[]. 0 | y(). 0")));
}

TEST_CASE("reading back the empty packing gives the empty derivation") {
  Derivation d = checkProc(emptySigma, P("x[]. 0"), G("x : 1"));
  Derivation back = psi(emptySigma, d);
  CHECK(back.env.empty());
  CHECK(back.term->tag == ProcTag::Nil);
}

TEST_CASE("reading back rejects derivations that are not packings") {
  Derivation latch =
      checkProc(emptySigma, P("x(). y(). z[]. 0"), G("x : bot, y : bot, z : 1"));
  CHECK_THROWS_AS(psi(emptySigma, latch), Error);
  Derivation send =
      checkProc(emptySigma, P("x[y]. (y[]. 0 | x[]. 0)"), G("x : 1 * 1"));
  CHECK_THROWS_AS(psi(emptySigma, send), Error);
}

// ---------------------------------------------------------------------------
// The split-explicit multiplicative checker.

TEST_CASE("the split-explicit checker accepts the multiplicative forms") {
  CHECK(typechecksMCP(emptySigma, P("x[]. 0"), {{"x", tOne()}}));
  CHECK(typechecksMCP(emptySigma, P("new (a : 1)(b) (a[]. 0 | b(). x[]. 0)"),
                      {{"x", tOne()}}));
  CHECK(typechecksMCP(emptySigma, P("x[y]. (y[]. 0 | x(). 0)"),
                      {{"x", T("1 * bot")}}));
  // A closed pair of endpoints types against the empty environment.
  CHECK(typechecksMCP(emptySigma, P("new (a : 1)(b) (a[]. 0 | b(). 0)"), {}));
}

TEST_CASE("the split-explicit checker rejects a restriction that does not split") {
  Proc p = P("new (x : 1)(y) x[]. y(). 0");
  CHECK_THROWS_AS(typecheckMCP(emptySigma, p, {}), TypeCheckError);
  CHECK_FALSE(typechecksMCP(emptySigma, p, {}));
}

TEST_CASE("the split-explicit checker rejects foreign constructs and bad types") {
  CHECK_FALSE(typechecksMCP(emptySigma, P("x <-> y"),
                            {{"x", tBot()}, {"y", tOne()}}));
  CHECK_FALSE(typechecksMCP(emptySigma, P("x[]. y[]. 0"),
                            {{"x", tOne()}, {"y", tOne()}}));
  CHECK_FALSE(typechecksMCP(emptySigma, P("x[]. 0 | y[]. 0"),
                            {{"x", tOne()}, {"y", tOne()}}));
  // Well-shaped but ill-typed: the wait is on a channel of type 1.
  CHECK_FALSE(typechecksMCP(emptySigma,
                            P("new (x : 1)(y) (x[]. 0 | y(). z(). 0)"),
                            {{"z", tOne()}}));
}

// ---------------------------------------------------------------------------
// Forwarder expansion.

TEST_CASE("forwarder expansion at unit, dual unit and quantifier types") {
  CHECK(alphaEq(etaExpandForwarder(emptySigma, tOne(), "x", "y"), P("x(). y[]. 0")));
  CHECK(alphaEq(etaExpandForwarder(emptySigma, tBot(), "x", "y"), P("y(). x[]. 0")));
  CHECK(alphaEq(etaExpandForwarder(emptySigma, T("ex X. X"), "x", "y"),
                P("x(type X). y[type X]. x <-> y")));
  CHECK(alphaEq(etaExpandForwarder(emptySigma, tVar("A"), "x", "y"), P("x <-> y")));
  CHECK(alphaEq(etaExpandForwarder(emptySigma, T("~A"), "x", "y"), P("x <-> y")));
}

TEST_CASE("forwarder expansions typecheck at dual endpoints") {
  for (const char* ts :
       {"1", "bot", "1 * bot", "bot @ 1", "1 + bot", "1 & bot", "!1", "?bot",
        "ex X. X", "all X. X", "(1 @ bot) * (1 + bot)", "ex X. (X * ~X)"}) {
    INFO(ts);
    Type a = T(ts);
    Proc e = etaExpandForwarder(emptySigma, a, "x", "y");
    CHECK(typechecks(emptySigma, e, {{{"x", dual(a)}, {"y", a}}}));
  }
}

TEST_CASE("cutting against an expanded forwarder is weakly bisimilar to the link") {
  struct C {
    const char* ty;
    const char* proc;  // uses x at the named type
  };
  for (const C& c : {C{"1", "x[]. 0"}, C{"bot", "x(). w[]. 0"},
                     C{"1 * 1", "x[u]. (u[]. 0 | x[]. 0)"},
                     C{"bot @ 1", "x(u). u(). x[]. 0"},
                     C{"1 + bot", "x[inl]. x[]. 0"},
                     C{"1 & bot", "x.case(x[]. 0, x(). w[]. 0)"},
                     C{"ex X. X", "x[type 1]. x[]. 0"}}) {
    INFO(c.ty);
    Type a = T(c.ty);
    Proc p = P(c.proc);
    Proc viaEta =
        pCut("x", a, "y", pPar(p, etaExpandForwarder(emptySigma, a, "y", "z")));
    Proc viaLink = pCut("x", a, "y", pPar(p, pFwd("y", "z")));
    CHECK(weakBisim(emptySigma, viaEta, viaLink).related());
  }
}

TEST_CASE("forwarder expansion reports abstraction and unbounded types") {
  CHECK_THROWS_AS(etaExpandForwarder(emptySigma, T("[| f : 1 |]"), "x", "y"), Error);
  Sigma rec;
  rec.define("T", tTensor(tOne(), tDef("T")));
  CHECK_THROWS_AS(etaExpandForwarder(rec, tDef("T"), "x", "y"), Error);
  // A definition that bottoms out expands through its unfolding.
  Sigma fin;
  fin.define("U", tTensor(tOne(), tOne()));
  CHECK(typechecks(fin, etaExpandForwarder(fin, tDef("U"), "x", "y"),
                   {{{"x", dual(tDef("U"))}, {"y", tDef("U")}}}));
}

// ---------------------------------------------------------------------------
// Compiling higher-order processes away.

TEST_CASE("the encoding is the identity on first-order processes") {
  struct C {
    const char* p;
    const char* g;
  };
  for (const C& c : {C{"x(). y(). z[]. 0", "x : bot, y : bot, z : 1"},
                     C{"x[inl]. x[]. 0", "x : 1 + bot"},
                     C{"x(type X). x[]. 0", "x : all X. 1"},
                     C{"!x(y). y[]. 0", "x : !1"},
                     C{"new (a : 1)(b) (a[]. 0 | b(). z[]. 0)", "z : 1"},
                     C{"x <-> y", "x : 1, y : bot"}}) {
    INFO(c.p);
    Derivation d = checkProc(emptySigma, P(c.p), G(c.g));
    Encoded e = encodeHO(emptySigma, d);
    CHECK(alphaEq(e.proc, P(c.p)));
    CHECK(eqSigma(emptySigma, e.env, G(c.g)));
  }
}

TEST_CASE("interface types become bundles of plain sessions") {
  Derivation d =
      checkProc(emptySigma, P("u[(f = a) a[]. 0]. 0"), G("u : [| f : 1 |]"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(alphaEq(e.proc, P("u[y]. (u[]. 0 | y(a). y(). a[]. 0)")));
  CHECK(eqSigma(emptySigma, e.env, G("u : (1 @ bot) * 1")));
  CHECK(typechecks(emptySigma, e.proc, e.env));
}

TEST_CASE("receiving an abstraction becomes receiving its bundle") {
  Derivation d =
      checkProc(emptySigma, P("u(P). P<f = c>"), G("u : <| f : 1 |>, c : 1"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(alphaEq(e.proc, P("u(p_1). u(). p_1[w]. (c <-> w | p_1[]. 0)")));
  CHECK(eqSigma(emptySigma, e.env,
                G("u : (bot * 1) @ bot, c : 1")));
  CHECK(typechecks(emptySigma, e.proc, e.env));
}

TEST_CASE("a free process variable becomes channels named after it") {
  Theta th{{"P", G("f : 1")}};
  Derivation d = checkProc(emptySigma, th, P("P<f = a>"), G("a : 1"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(alphaEq(e.proc, P("p_1[w]. (a <-> w | p_1[]. 0)")));
  CHECK(eqSigma(emptySigma, e.env, G("a : 1, p_1 : bot * 1")));
  CHECK(typechecks(emptySigma, e.proc, e.env));
}

TEST_CASE("the encoded provide/assume cut behaves like its source") {
  const char* src =
      "new (u : [| f : 1 |])(v) (u[(f = a) a[]. 0]. 0 | v(P). P<f = c>)";
  Derivation d = checkProc(emptySigma, P(src), G("c : 1"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(typechecks(emptySigma, e.proc, e.env));
  CHECK(eqSigma(emptySigma, e.env, G("c : 1")));
  CHECK(weakBisim(emptySigma, e.proc, P("c[]. 0")).related());
  CHECK(weakBisim(emptySigma, P(src), P("c[]. 0")).related());
}

TEST_CASE("a definition compiles to a cut against its packed body") {
  const char* src = "let P :: {f : 1} = (f = a) a[]. 0 in P<f = c>";
  Derivation d = checkProc(emptySigma, P(src), G("c : 1"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(typechecks(emptySigma, e.proc, e.env));
  CHECK(eqSigma(emptySigma, e.env, G("c : 1")));
  CHECK(alphaEq(e.proc,
                P("new (p_x1 : 1 @ bot)(p_y1) "
                  "(p_x1(a). p_x1(). a[]. 0 | p_y1[w]. (c <-> w | p_y1[]. 0))")));
  CHECK(weakBisim(emptySigma, e.proc, P("c[]. 0")).related());
  CHECK(weakBisim(emptySigma, P(src), P("c[]. 0")).related());
}

TEST_CASE("the encoding preserves and reflects behavioural difference") {
  // Two providers that differ only in a bound parameter name are equivalent,
  // before and after encoding.
  Derivation da =
      checkProc(emptySigma, P("u[(f = a) a[]. 0]. 0"), G("u : [| f : 1 |]"));
  Derivation db =
      checkProc(emptySigma, P("u[(f = b) b[]. 0]. 0"), G("u : [| f : 1 |]"));
  CHECK(weakBisim(emptySigma, da.term, db.term).related());
  CHECK(weakBisim(emptySigma, encodeHO(emptySigma, da).proc,
                  encodeHO(emptySigma, db).proc)
            .related());
  // Providers whose payloads pick different branches are not equivalent,
  // before and after encoding.
  Derivation dl = checkProc(emptySigma, P("u[(f = a) a[inl]. a[]. 0]. 0"),
                            G("u : [| f : 1 + 1 |]"));
  Derivation dr = checkProc(emptySigma, P("u[(f = a) a[inr]. a[]. 0]. 0"),
                            G("u : [| f : 1 + 1 |]"));
  CHECK(weakBisim(emptySigma, dl.term, dr.term).notRelated());
  CHECK(weakBisim(emptySigma, encodeHO(emptySigma, dl).proc,
                  encodeHO(emptySigma, dr).proc)
            .notRelated());
}

TEST_CASE("encoding handles a multi-component interface") {
  const char* src = "u[(f = a, g = b) (a[]. 0 | b(). 0)]. 0";
  Derivation d = checkProc(emptySigma, P(src), G("u : [| f : 1 | g : bot |]"));
  Encoded e = encodeHO(emptySigma, d);
  CHECK(typechecks(emptySigma, e.proc, e.env));
  CHECK(eqSigma(emptySigma, e.env,
                G("u : (1 @ bot) * ((bot @ bot) * 1)")));
}
