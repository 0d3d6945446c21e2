// Labelled transition system on processes.
//
// procStep enumerates the transition menu of a term: every action, forwarder,
// pair and substitution label the term can emit, plus the internal (tau)
// steps that cuts and chops unlock by consuming synchronised pairs. Entries
// whose label has a hole (a type receive, or an invocation waiting for its
// payload) are schematic and carry an instantiation closure instead of a
// concrete successor.
//
// The menu is defined on arbitrary terms, typed or not; annotations on cuts
// and chops are transformed when present and simply dropped when absent.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hyperpill/labels.hpp"
#include "hyperpill/process.hpp"
#include "hyperpill/types.hpp"

namespace hyperpill {

// ---------------------------------------------------------------------------
// Type substitution inside a process (needed when a type receive fires).

inline Proc substTypeProc(const Proc& p, const Name& X, const Type& A) {
  if (!p) return p;
  auto sub = [&](const Type& t) { return t ? substTypeVar(t, X, A) : t; };
  auto subEnv = [&](const std::optional<HyperEnv>& g) -> std::optional<HyperEnv> {
    if (!g) return g;
    return substTypeVar(*g, X, A);
  };
  auto subAbs = [&](const std::optional<Abstraction>& a) -> std::optional<Abstraction> {
    if (!a) return a;
    return Abstraction{a->rho, substTypeProc(a->body, X, A)};
  };
  if (p->tag == ProcTag::RecvType && p->tyvar == X) return p;  // shadowed
  ProcNode n = *p;
  n.type = sub(n.type);
  n.anno = subEnv(n.anno);
  n.abs = subAbs(n.abs);
  if (n.left) n.left = substTypeProc(n.left, X, A);
  if (n.right) n.right = substTypeProc(n.right, X, A);
  return mk(std::move(n));
}

// Capture-avoiding renaming of a free process variable.
inline Proc renameProcVar(const Proc& p, const Name& from, const Name& to) {
  if (!p) return p;
  switch (p->tag) {
    case ProcTag::Invoke: {
      if (p->pvar != from) return p;
      ProcNode n = *p;
      n.pvar = to;
      return mk(std::move(n));
    }
    case ProcTag::HoRecv: {
      if (p->pvar == from) return p;  // shadowed below
      ProcNode n = *p;
      n.left = renameProcVar(p->left, from, to);
      return mk(std::move(n));
    }
    case ProcTag::Chop: {
      ProcNode n = *p;
      n.abs = Abstraction{p->abs->rho, renameProcVar(p->abs->body, from, to)};
      if (p->pvar != from) n.left = renameProcVar(p->left, from, to);
      return mk(std::move(n));
    }
    case ProcTag::HoSend: {
      ProcNode n = *p;
      n.abs = Abstraction{p->abs->rho, renameProcVar(p->abs->body, from, to)};
      n.left = renameProcVar(p->left, from, to);
      return mk(std::move(n));
    }
    default: {
      if (!p->left && !p->right) return p;
      ProcNode n = *p;
      if (n.left) n.left = renameProcVar(n.left, from, to);
      if (n.right) n.right = renameProcVar(n.right, from, to);
      return mk(std::move(n));
    }
  }
}

// ---------------------------------------------------------------------------

struct ProcTransition {
  Label label;
  Proc target;       // concrete successor; null when the label is schematic
  std::string rule;  // rule family that justifies the step, for reports
  // Schematic instantiation: a type receive takes the sent type; an
  // invocation takes the abstraction substituted for the process variable.
  std::function<Proc(const Type&)> withType;
  std::function<std::optional<Proc>(const Abstraction&)> withPayload;
};

namespace detail {

// Apply f to every successor of t, concrete or schematic.
inline void mapTarget(ProcTransition& t, std::function<Proc(const Proc&)> f) {
  if (t.target) t.target = f(t.target);
  if (t.withType) {
    auto g = t.withType;
    t.withType = [g, f](const Type& a) { return f(g(a)); };
  }
  if (t.withPayload) {
    auto g = t.withPayload;
    t.withPayload = [g, f](const Abstraction& a) -> std::optional<Proc> {
      auto r = g(a);
      if (!r) return std::nullopt;
      return f(*r);
    };
  }
}

// Rename bound names / bound process variables of the label away from the
// given avoid sets. The renamed name is free in the successor, so the
// successor is renamed along.
inline void avoidClashes(ProcTransition& t, const NameSet& avoidNames,
                         const NameSet& avoidPvars, FreshNames& fresh) {
  NameSet bns = boundNames(t.label);
  for (const auto& b : bns) {
    if (!avoidNames.count(b)) continue;
    NameSet avoid = avoidNames;
    avoid.merge(controlNames(t.label));
    if (t.target) {
      NameSet tf = freeNames(t.target);
      avoid.merge(tf);
    }
    Name nb = fresh.fresh(b, avoid);
    renameBound(t.label, b, nb);
    FreshNames fr;
    mapTarget(t, [b, nb, fr](const Proc& p) mutable { return substName(p, b, nb, fr); });
  }
  NameSet bpv = boundProcVars(t.label);
  for (const auto& q : bpv) {
    if (!avoidPvars.count(q)) continue;
    NameSet avoid = avoidPvars;
    if (t.target) avoid.merge(freeProcVars(t.target));
    Name nq = fresh.fresh(q, avoid);
    if (t.label.kind == Label::Kind::Action || t.label.kind == Label::Kind::Pair) {
      if (t.label.a.tag == ActTag::HoRecv && t.label.a.pvar == q) t.label.a.pvar = nq;
      if (t.label.kind == Label::Kind::Pair && t.label.b.tag == ActTag::HoRecv &&
          t.label.b.pvar == q)
        t.label.b.pvar = nq;
    }
    mapTarget(t, [q, nq](const Proc& p) { return renameProcVar(p, q, nq); });
  }
}

}  // namespace detail

inline std::vector<ProcTransition> procStep(const Sigma& sigma, const Proc& p,
                                            FreshNames& fresh);

namespace detail {

inline ProcTransition axiom(Act a, Proc target, std::string rule) {
  ProcTransition t;
  t.label = lAct(std::move(a));
  t.target = std::move(target);
  t.rule = std::move(rule);
  return t;
}

// --- Parallel composition: lift both sides, then synchronise pairs. -------

inline void stepPar(const Sigma& sigma, const Proc& p, FreshNames& fresh,
                    std::vector<ProcTransition>& out) {
  Proc L = p->left, R = p->right;
  NameSet fnL = freeNames(L), fnR = freeNames(R);
  NameSet fpL = freeProcVars(L), fpR = freeProcVars(R);
  std::vector<ProcTransition> ls = procStep(sigma, L, fresh);
  std::vector<ProcTransition> rs = procStep(sigma, R, fresh);

  for (auto& t : ls) {
    ProcTransition u = t;
    avoidClashes(u, fnR, fpR, fresh);
    mapTarget(u, [R](const Proc& s) { return pPar(s, R); });
    out.push_back(std::move(u));
  }
  for (auto& t : rs) {
    ProcTransition u = t;
    avoidClashes(u, fnL, fpL, fresh);
    mapTarget(u, [L](const Proc& s) { return pPar(L, s); });
    out.push_back(std::move(u));
  }

  // Synchronisation composes one single action from each side into a pair.
  // Identical labels do not pair (two copies of the same emission are
  // separate transitions, not a synchronisation), and at most one side may
  // be schematic: the concrete side fills the other side's hole when the
  // subjects say so (a type send meeting a type receive), otherwise the
  // hole survives into the pair.
  for (const auto& ta : ls) {
    if (ta.label.kind != Label::Kind::Action) continue;
    for (const auto& tb : rs) {
      if (tb.label.kind != Label::Kind::Action) continue;
      bool sa = isSchema(ta.label.a), sb = isSchema(tb.label.a);
      if (sa && sb) continue;
      if (!sa && !sb && labelEq(sigma, ta.label, tb.label)) continue;

      ProcTransition a = ta, b = tb;
      // Hygiene: bound names of each side clear of the other side's free
      // names and of the sibling label's names.
      NameSet avoidA = fnR;
      avoidA.merge(controlNames(b.label));
      if (b.target) avoidA.merge(freeNames(b.target));
      avoidClashes(a, avoidA, fpR, fresh);
      NameSet avoidB = fnL;
      avoidB.merge(controlNames(a.label));
      if (a.target) avoidB.merge(freeNames(a.target));
      avoidClashes(b, avoidB, fpL, fresh);

      ProcTransition u;
      u.label.kind = Label::Kind::Pair;
      u.label.a = a.label.a;
      u.label.b = b.label.a;
      u.rule = "sync";
      if (!sa && !sb) {
        u.target = pPar(a.target, b.target);
      } else {
        // One slot is a type hole; it survives into the pair and is filled
        // either by a cut (from the opposite slot's concrete type) or by
        // whoever drives the step.
        ProcTransition& hole = sa ? a : b;
        ProcTransition& full = sa ? b : a;
        if (!hole.withType) continue;  // nothing else is schematic here
        Proc ft = full.target;
        auto w = hole.withType;
        bool holeLeft = sa;
        u.withType = [w, ft, holeLeft](const Type& A) {
          return holeLeft ? pPar(w(A), ft) : pPar(ft, w(A));
        };
      }
      out.push_back(std::move(u));
    }
  }
}

// --- Cut: lift past the restriction or consume a synchronised pair. -------

// Which of the pair's two actions sits on which cut name; null if the pair
// is not exactly on {x, y}.
struct PairOnCut {
  const Act* onX = nullptr;
  const Act* onY = nullptr;
};
inline std::optional<PairOnCut> pairOnCut(const Label& l, const Name& x, const Name& y) {
  if (l.kind != Label::Kind::Pair) return std::nullopt;
  PairOnCut r;
  if (l.a.subject == x && l.b.subject == y) {
    r.onX = &l.a;
    r.onY = &l.b;
  } else if (l.a.subject == y && l.b.subject == x) {
    r.onX = &l.b;
    r.onY = &l.a;
  } else {
    return std::nullopt;
  }
  return r;
}

inline void stepCut(const Sigma& sigma, const Proc& p, FreshNames& fresh,
                    std::vector<ProcTransition>& out) {
  const Name x = p->a, y = p->b;
  const Type anno = p->type;  // type of x; may be null
  std::vector<ProcTransition> body = procStep(sigma, p->left, fresh);

  // Head-normalise the annotation once; all communication rules look at it.
  Type head = nullptr;
  if (anno) {
    try {
      head = sigma.headNormal(anno);
    } catch (const Error&) {
      head = nullptr;  // ill-formed annotation: treat as absent
    }
  }

  auto dedupPush = [&](ProcTransition&& t) {
    for (const auto& u : out)
      if (u.target && t.target && labelEq(sigma, u.label, t.label) &&
          alphaEq(u.target, t.target))
        return;
    out.push_back(std::move(t));
  };

  for (auto& t : body) {
    const Label& l = t.label;

    // Forwarder with exactly one endpoint bound here: the cut collapses and
    // the surviving partner is renamed to the far endpoint.
    if (l.kind == Label::Kind::Fwd) {
      bool endX = l.x == x || l.x == y, endY = l.y == x || l.y == y;
      if (endX && endY) continue;  // both ends bound: stuck
      if (endX || endY) {
        const Name bound = endX ? l.x : l.y;
        const Name far = endX ? l.y : l.x;
        const Name partner = bound == x ? y : x;
        ProcTransition u;
        u.label = lTau();
        u.rule = "cut-forward";
        FreshNames fr;
        u.target = substName(t.target, partner, far, fr);
        dedupPush(std::move(u));
        continue;
      }
      // Neither end here: lift through the restriction.
    }

    // Pair exactly on {x, y}: a communication rule may consume it.
    if (auto po = pairOnCut(l, x, y)) {
      const Act& ax = *po->onX;
      const Act& ay = *po->onY;
      auto tags = [&](ActTag a, ActTag b) {
        return (ax.tag == a && ay.tag == b) || (ax.tag == b && ay.tag == a);
      };
      ProcTransition u;
      u.label = lTau();

      if (tags(ActTag::Close, ActTag::Wait)) {
        u.rule = "cut-close";
        u.target = t.target;  // the restriction is gone
        out.push_back(std::move(u));
      } else if (tags(ActTag::Send, ActTag::Recv)) {
        u.rule = "cut-send";
        const Act& send = ax.tag == ActTag::Send ? ax : ay;
        const Act& recv = ax.tag == ActTag::Send ? ay : ax;
        bool sendOnX = &send == po->onX;
        Type outer = nullptr, inner = nullptr;
        if (head && (head->tag == TypeTag::Tensor || head->tag == TypeTag::Parr)) {
          outer = head->right;
          inner = head->tag == TypeTag::Tensor ? head->left : dual(head->left);
          if (head->tag == TypeTag::Tensor ? !sendOnX : sendOnX) {
            // Annotation shape disagrees with who sent: drop the annos.
            outer = inner = nullptr;
          }
        }
        u.target = pCut(x, outer, y, pCut(send.arg1, inner, recv.arg1, t.target));
        out.push_back(std::move(u));
      } else if (tags(ActTag::Inl, ActTag::CoInl)) {
        u.rule = "cut-select-left";
        Type a = nullptr;
        if (head && (head->tag == TypeTag::Plus || head->tag == TypeTag::With))
          a = head->left;
        u.target = pCut(x, a, y, t.target);
        out.push_back(std::move(u));
      } else if (tags(ActTag::Inr, ActTag::CoInr)) {
        u.rule = "cut-select-right";
        Type a = nullptr;
        if (head && (head->tag == TypeTag::Plus || head->tag == TypeTag::With))
          a = head->right;
        u.target = pCut(x, a, y, t.target);
        out.push_back(std::move(u));
      } else if (tags(ActTag::SendType, ActTag::RecvType)) {
        u.rule = "cut-send-type";
        const Act& st = ax.tag == ActTag::SendType ? ax : ay;
        Type instance = st.type;
        Proc succ = t.target;
        if (!succ && t.withType && instance) succ = t.withType(instance);
        if (!succ) continue;
        Type a = nullptr;
        if (head && (head->tag == TypeTag::Exists || head->tag == TypeTag::Forall) && instance)
          a = substTypeVar(head->body, head->var, instance);
        u.target = pCut(x, a, y, succ);
        out.push_back(std::move(u));
      } else if (tags(ActTag::Use, ActTag::CoUse)) {
        u.rule = "cut-use";
        const Act& use = ax.tag == ActTag::Use ? ax : ay;
        const Act& co = ax.tag == ActTag::Use ? ay : ax;
        bool useOnX = &use == po->onX;
        Type a = nullptr;
        if (head && head->tag == TypeTag::Query && useOnX) a = head->body;
        if (head && head->tag == TypeTag::Bang && !useOnX) a = dual(head->body);
        u.target = pCut(use.arg1, a, co.arg1, t.target);
        out.push_back(std::move(u));
      } else if (tags(ActTag::Disp, ActTag::CoDisp)) {
        u.rule = "cut-dispose";
        const Act& disp = ax.tag == ActTag::Disp ? ax : ay;
        bool dispOnX = &disp == po->onX;
        Type a = nullptr;
        if (head && head->tag == TypeTag::Query && dispOnX) a = tBot();
        if (head && head->tag == TypeTag::Bang && !dispOnX) a = tOne();
        u.target = pCut(x, a, y, t.target);
        out.push_back(std::move(u));
      } else if (tags(ActTag::Dup, ActTag::CoDup)) {
        u.rule = "cut-duplicate";
        const Act& dup = ax.tag == ActTag::Dup ? ax : ay;
        const Act& co = ax.tag == ActTag::Dup ? ay : ax;
        bool dupOnX = &dup == po->onX;
        Type a = nullptr;
        if (head && head->tag == TypeTag::Query && dupOnX)
          a = tParr(tQuery(head->body), tQuery(head->body));
        if (head && head->tag == TypeTag::Bang && !dupOnX)
          a = tParr(tQuery(dual(head->body)), tQuery(dual(head->body)));
        u.target = pCut(dup.arg1, a, co.arg1, t.target);
        out.push_back(std::move(u));
      } else if (tags(ActTag::HoSend, ActTag::HoRecv)) {
        u.rule = "cut-provide";
        const Act& send = ax.tag == ActTag::HoSend ? ax : ay;
        const Act& recv = ax.tag == ActTag::HoSend ? ay : ax;
        if (!send.payload) continue;
        std::optional<HyperEnv> g;
        if (head && (head->tag == TypeTag::Provide || head->tag == TypeTag::Assume))
          g = head->henv;
        u.target = pChop(recv.pvar, *send.payload, t.target, g);
        out.push_back(std::move(u));
      }
      continue;  // pairs on the cut never lift
    }

    // Anything else lifts through the restriction when the cut names stay
    // out of the label.
    NameSet cn = controlNames(l);
    if (cn.count(x) || cn.count(y)) {
      // A bound-name clash is repairable; a free occurrence is not.
      NameSet fn = freeNames(l);
      if (fn.count(x) || fn.count(y)) continue;
      ProcTransition u = t;
      avoidClashes(u, {x, y}, {}, fresh);
      mapTarget(u, [x, y, anno](const Proc& s) { return pCut(x, anno, y, s); });
      out.push_back(std::move(u));
      continue;
    }
    ProcTransition u = t;
    mapTarget(u, [x, y, anno](const Proc& s) { return pCut(x, anno, y, s); });
    out.push_back(std::move(u));
  }
}

// --- Chop: run, export a payload mentioning the variable, or lift. --------

inline void stepChop(const Sigma& sigma, const Proc& p, FreshNames& fresh,
                     std::vector<ProcTransition>& out) {
  const Name q = p->pvar;
  const Abstraction& abs = *p->abs;
  std::vector<ProcTransition> body = procStep(sigma, p->left, fresh);

  for (auto& t : body) {
    const Label& l = t.label;

    if (l.kind == Label::Kind::Subst && l.pvar == q) {
      // Run: the chop supplies its own abstraction to the invocation.
      if (!t.withPayload) continue;
      if (l.subsAnno && p->anno && !eqSigma(sigma, *l.subsAnno, *p->anno)) continue;
      auto succ = t.withPayload(abs);
      if (!succ) continue;
      ProcTransition u;
      u.label = lTau();
      u.rule = "chop-run";
      u.target = pChop(q, abs, *succ, p->anno);
      // The definition survives only while the body still mentions it; a
      // linear use is consumed by the run.
      if (!freeProcVars(*succ).count(q)) u.target = *succ;
      out.push_back(std::move(u));
      continue;
    }

    if (l.kind == Label::Kind::Action && l.a.tag == ActTag::HoSend && l.a.payload &&
        freeProcVars(l.a.payload->body).count(q)) {
      // Export: the definition moves into the outgoing payload.
      ProcTransition u;
      u.label = t.label;
      u.rule = "chop-export";
      u.label.a.payload = std::make_shared<const Abstraction>(Abstraction{
          l.a.payload->rho, pChop(q, abs, l.a.payload->body, p->anno)});
      u.target = t.target;
      out.push_back(std::move(u));
      continue;
    }

    // Lift: the label must not mention the variable.
    if (freeProcVars(l).count(q)) continue;
    ProcTransition u = t;
    avoidClashes(u, {}, {q}, fresh);
    Name pv = p->pvar;
    Abstraction a = abs;
    auto anno = p->anno;
    mapTarget(u, [pv, a, anno](const Proc& s) {
      if (!freeProcVars(s).count(pv)) return s;
      return pChop(pv, a, s, anno);
    });
    out.push_back(std::move(u));
  }
}

}  // namespace detail

inline std::vector<ProcTransition> procStep(const Sigma& sigma, const Proc& p,
                                            FreshNames& fresh) {
  using namespace detail;
  std::vector<ProcTransition> out;
  if (!p) return out;
  switch (p->tag) {
    case ProcTag::Nil:
      return out;
    case ProcTag::Send:
      out.push_back(axiom(act1(ActTag::Send, p->a, p->b), p->left, "send"));
      return out;
    case ProcTag::Recv:
      out.push_back(axiom(act1(ActTag::Recv, p->a, p->b), p->left, "recv"));
      return out;
    case ProcTag::Close:
      out.push_back(axiom(act(ActTag::Close, p->a), p->left, "close"));
      return out;
    case ProcTag::Wait:
      out.push_back(axiom(act(ActTag::Wait, p->a), p->left, "wait"));
      return out;
    case ProcTag::Inl:
      out.push_back(axiom(act(ActTag::Inl, p->a), p->left, "select-left"));
      return out;
    case ProcTag::Inr:
      out.push_back(axiom(act(ActTag::Inr, p->a), p->left, "select-right"));
      return out;
    case ProcTag::Case:
      out.push_back(axiom(act(ActTag::CoInl, p->a), p->left, "offer-left"));
      out.push_back(axiom(act(ActTag::CoInr, p->a), p->right, "offer-right"));
      return out;
    case ProcTag::SendType: {
      Act a = act(ActTag::SendType, p->a);
      a.type = p->type;
      out.push_back(axiom(std::move(a), p->left, "send-type"));
      return out;
    }
    case ProcTag::RecvType: {
      ProcTransition t;
      Act a = act(ActTag::RecvType, p->a);  // type hole: schematic
      t.label = lAct(std::move(a));
      t.rule = "recv-type";
      Proc body = p->left;
      Name X = p->tyvar;
      t.withType = [body, X](const Type& A) { return substTypeProc(body, X, A); };
      out.push_back(std::move(t));
      return out;
    }
    case ProcTag::Use:
      out.push_back(axiom(act1(ActTag::Use, p->a, p->b), p->left, "use"));
      return out;
    case ProcTag::Server: {
      // Accept one client.
      out.push_back(axiom(act1(ActTag::CoUse, p->a, p->b), p->left, "server"));
      // Disposal: every other resource the body holds is disposed too, then
      // the server closes.
      NameSet zs = freeNames(p->left);
      zs.erase(p->b);
      zs.erase(p->a);
      {
        Proc t = pClose(p->a, pNil());
        for (auto it = zs.rbegin(); it != zs.rend(); ++it) t = pDisp(*it, t);
        out.push_back(axiom(act(ActTag::CoDisp, p->a), std::move(t), "server-dispose"));
      }
      // Duplication: two renamed copies behind a fresh session each, with
      // every shared resource duplicated first.
      {
        NameSet avoid = freeNames(p->left);
        avoid.insert(p->a);
        std::map<Name, Name> s1, s2;
        for (const auto& z : zs) {
          s1[z] = fresh.fresh(z, avoid);
          avoid.insert(s1[z]);
          s2[z] = fresh.fresh(z, avoid);
          avoid.insert(s2[z]);
        }
        s1[p->b] = fresh.fresh(p->b, avoid);
        avoid.insert(s1[p->b]);
        s2[p->b] = fresh.fresh(p->b, avoid);
        avoid.insert(s2[p->b]);
        Name x1 = fresh.fresh(p->a, avoid);
        avoid.insert(x1);
        Name x2 = fresh.fresh(p->a, avoid);
        avoid.insert(x2);
        FreshNames fr;
        Proc c1 = pServer(x1, s1[p->b], substNames(p->left, s1, fr));
        Proc c2 = pServer(x2, s2[p->b], substNames(p->left, s2, fr));
        Proc t = pSend(x1, x2, pPar(std::move(c1), std::move(c2)));
        for (auto it = zs.rbegin(); it != zs.rend(); ++it) t = pDup(*it, s1[*it], s2[*it], t);
        out.push_back(axiom(act2(ActTag::CoDup, p->a, x1, x2), std::move(t), "server-duplicate"));
      }
      return out;
    }
    case ProcTag::Dup:
      out.push_back(axiom(act2(ActTag::Dup, p->a, p->b, p->c),
                          pRecv(p->b, p->c, p->left), "duplicate"));
      return out;
    case ProcTag::Disp:
      out.push_back(axiom(act(ActTag::Disp, p->a), pWait(p->a, p->left), "dispose"));
      return out;
    case ProcTag::Fwd: {
      ProcTransition t1;
      t1.label = lFwd(p->a, p->b);
      t1.target = pNil();
      t1.rule = "forward";
      out.push_back(std::move(t1));
      ProcTransition t2;
      t2.label = lFwd(p->b, p->a);
      t2.target = pNil();
      t2.rule = "forward";
      out.push_back(std::move(t2));
      return out;
    }
    case ProcTag::HoSend: {
      Act a = act(ActTag::HoSend, p->a);
      a.payload = std::make_shared<const Abstraction>(*p->abs);
      out.push_back(axiom(std::move(a), p->left, "send-process"));
      return out;
    }
    case ProcTag::HoRecv: {
      Act a = act(ActTag::HoRecv, p->a);
      a.pvar = p->pvar;
      out.push_back(axiom(std::move(a), p->left, "recv-process"));
      return out;
    }
    case ProcTag::Invoke: {
      ProcTransition t;
      t.label.kind = Label::Kind::Subst;
      t.label.pvar = p->pvar;
      if (p->anno) t.label.subsAnno = p->anno;
      t.rule = "invoke";
      Record use = p->record;
      t.withPayload = [use](const Abstraction& abs) -> std::optional<Proc> {
        // The payload's formals must cover exactly the invocation's fields;
        // each body channel rho(f) is renamed to the use site's sigma(f).
        if (abs.rho.size() != use.size()) return std::nullopt;
        std::map<Name, Name> ren;
        for (const auto& [f, bodyName] : abs.rho) {
          auto it = use.find(f);
          if (it == use.end()) return std::nullopt;
          ren[bodyName] = it->second;
        }
        FreshNames fr;
        return substNames(abs.body, ren, fr);
      };
      out.push_back(std::move(t));
      return out;
    }
    case ProcTag::Par:
      detail::stepPar(sigma, p, fresh, out);
      return out;
    case ProcTag::Cut:
      detail::stepCut(sigma, p, fresh, out);
      return out;
    case ProcTag::Chop:
      detail::stepChop(sigma, p, fresh, out);
      return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Follow one given label. Bound names in the label pick the caller's
// preferred names: the matching menu entry is renamed to agree.

namespace detail {

// Rename the bound names / bound process variable of `from` to those of `to`
// inside entry u. Fails if shapes differ or a rename would capture a name
// already free in the successor.
inline bool alignAct(const Sigma& sigma, ProcTransition& u, Act& ua, const Act& to) {
  if (ua.tag != to.tag || ua.subject != to.subject) return false;
  std::map<Name, Name> ren;
  auto want = [&](const Name& from, const Name& toN) {
    if (from == toN) return true;
    if (from.empty() || toN.empty()) return false;
    ren[from] = toN;
    return true;
  };
  if (!want(ua.arg1, to.arg1) || !want(ua.arg2, to.arg2)) return false;
  if (!ren.empty()) {
    if (u.target) {
      NameSet tf = freeNames(u.target);
      for (const auto& [f, t2] : ren)
        if (tf.count(t2) && !ren.count(t2)) return false;  // capture
    }
    FreshNames fr;
    std::map<Name, Name> r = ren;
    mapTarget(u, [r, fr](const Proc& s) mutable { return substNames(s, r, fr); });
    // One simultaneous renaming on the label too: the requested names may
    // overlap the menu's own mints (e.g. b#1->b#2 alongside b#2->b#3), and
    // renaming one pair at a time would chain through the overlap.
    auto applyAct = [&](Act& x) {
      auto i1 = ren.find(x.arg1);
      if (i1 != ren.end()) x.arg1 = i1->second;
      auto i2 = ren.find(x.arg2);
      if (i2 != ren.end()) x.arg2 = i2->second;
    };
    applyAct(u.label.a);
    if (u.label.kind == Label::Kind::Pair) applyAct(u.label.b);
  }
  if (ua.tag == ActTag::HoRecv && ua.pvar != to.pvar && !to.pvar.empty()) {
    if (u.target && freeProcVars(u.target).count(to.pvar)) return false;
    Name from = ua.pvar, toP = to.pvar;
    mapTarget(u, [from, toP](const Proc& s) { return renameProcVar(s, from, toP); });
    ua.pvar = toP;
  }
  if (!typeEq(sigma, ua.type, to.type)) return false;
  return true;
}

}  // namespace detail

inline std::optional<Proc> procStepWithLabel(const Sigma& sigma, const Proc& p,
                                             const Label& l, FreshNames& fresh) {
  auto menu = procStep(sigma, p, fresh);
  for (auto& t : menu) {
    if (t.label.kind != l.kind) continue;

    // Schematic entries are instantiated from the concrete label.
    if (isSchema(t.label) && !isSchema(l)) {
      if (t.label.kind == Label::Kind::Action && t.withType &&
          l.a.tag == ActTag::RecvType && t.label.a.subject == l.a.subject && l.a.type) {
        return t.withType(l.a.type);
      }
      if (t.label.kind == Label::Kind::Subst && t.withPayload && l.pvar == t.label.pvar &&
          l.payload) {
        if (auto r = t.withPayload(*l.payload)) return r;
        continue;
      }
      if (t.label.kind == Label::Kind::Pair && t.withType) {
        const Act& hole = isSchema(t.label.a) ? t.label.a : t.label.b;
        const Act& solid = isSchema(t.label.a) ? t.label.b : t.label.a;
        const Act* lHole = nullptr;
        const Act* lSolid = nullptr;
        if (l.a.tag == ActTag::RecvType && l.a.subject == hole.subject) {
          lHole = &l.a;
          lSolid = &l.b;
        } else if (l.b.tag == ActTag::RecvType && l.b.subject == hole.subject) {
          lHole = &l.b;
          lSolid = &l.a;
        }
        if (!lHole || !lHole->type) continue;
        if (!actEq(sigma, solid, *lSolid)) continue;
        return t.withType(lHole->type);
      }
      continue;
    }

    if (labelEq(sigma, t.label, l)) {
      if (t.target) return t.target;
      continue;
    }

    // Match modulo the choice of bound names.
    if (l.kind == Label::Kind::Action) {
      ProcTransition u = t;
      if (detail::alignAct(sigma, u, u.label.a, l.a) && labelEq(sigma, u.label, l))
        if (u.target) return u.target;
    } else if (l.kind == Label::Kind::Pair) {
      for (int flip = 0; flip < 2; ++flip) {
        ProcTransition u = t;
        const Act& la = flip ? l.b : l.a;
        const Act& lb = flip ? l.a : l.b;
        if (detail::alignAct(sigma, u, u.label.a, la) &&
            detail::alignAct(sigma, u, u.label.b, lb) &&
            labelEq(sigma, u.label, l)) {
          if (u.target) return u.target;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace hyperpill
