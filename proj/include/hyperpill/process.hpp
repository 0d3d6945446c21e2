// Process syntax for the whole language family: the multiplicative core,
// additives/exponentials/quantifiers/forwarders, and the higher-order layer
// (abstraction output/input, invocation, explicit substitution "chop").
//
// Conventions:
//   - restriction `new (x:A)(y) P` binds x and y in P; the annotation types
//     the x side and may be absent on terms that are only executed, never
//     checked;
//   - an abstraction (rho)P binds the image of rho in P and is closed with
//     respect to channels: image(rho) must equal fn(P);
//   - record keys (formal parameter names) are constants, untouched by
//     alpha-renaming.
#ifndef HYPERPILL_PROCESS_HPP
#define HYPERPILL_PROCESS_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hyperpill/base.hpp"
#include "hyperpill/types.hpp"

namespace hyperpill {

struct ProcNode;
using Proc = std::shared_ptr<const ProcNode>;

// Record mapping formal parameter names to channel names. std::map keeps the
// keys sorted, which is also the canonical printing order.
using Record = std::map<Name, Name>;

enum class ProcTag {
  Nil,       // 0
  Par,       // P | Q
  Cut,       // new (x:A)(y) P
  Send,      // x[y].P      (binds y)
  Recv,      // x(y).P      (binds y)
  Close,     // x[].P
  Wait,      // x().P
  Inl,       // x[inl].P
  Inr,       // x[inr].P
  Case,      // x.case(P, Q)
  SendType,  // x[type A].P
  RecvType,  // x(type X).P (binds type variable X)
  Server,    // !x(y).P     (binds y)
  Use,       // ?x[y].P     (binds y)
  Dup,       // ?x[y,z].P   (binds y and z)
  Disp,      // ?x[].P
  Fwd,       // x<->y
  HoSend,    // x[(rho)R].Q
  HoRecv,    // x(p).P      (binds process variable p)
  Invoke,    // p<sigma>    (optionally annotated with p's hyperenvironment)
  Chop,      // let p = (rho)R in Q   (binds p in Q; optional annotation)
};

struct Abstraction {
  Record rho;  // formal parameter -> channel free in body
  Proc body;
};

struct ProcNode {
  ProcTag tag{};
  Name a{}, b{}, c{};             // channel names / binder names (see tags)
  Proc left{}, right{};           // subterms
  Type type{};                    // SendType payload; Cut annotation
  std::string tyvar{};            // RecvType binder
  std::optional<Abstraction> abs{};  // HoSend / Chop
  std::string pvar{};             // HoRecv / Invoke / Chop process variable
  Record record{};                // Invoke actual parameters
  std::optional<HyperEnv> anno{}; // Invoke / Chop annotation
};

inline Proc mk(ProcNode n) { return std::make_shared<const ProcNode>(std::move(n)); }

inline Proc pNil() { static Proc p = mk({ProcTag::Nil}); return p; }
inline Proc pPar(Proc p, Proc q) {
  ProcNode n{ProcTag::Par};
  n.left = std::move(p);
  n.right = std::move(q);
  return mk(std::move(n));
}
inline Proc pCut(Name x, Type a, Name y, Proc p) {
  ProcNode n{ProcTag::Cut};
  n.a = std::move(x);
  n.b = std::move(y);
  n.type = std::move(a);  // may be null when unannotated
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pSend(Name x, Name y, Proc p) {
  ProcNode n{ProcTag::Send};
  n.a = std::move(x);
  n.b = std::move(y);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pRecv(Name x, Name y, Proc p) {
  ProcNode n{ProcTag::Recv};
  n.a = std::move(x);
  n.b = std::move(y);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pClose(Name x, Proc p) {
  ProcNode n{ProcTag::Close};
  n.a = std::move(x);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pWait(Name x, Proc p) {
  ProcNode n{ProcTag::Wait};
  n.a = std::move(x);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pInl(Name x, Proc p) {
  ProcNode n{ProcTag::Inl};
  n.a = std::move(x);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pInr(Name x, Proc p) {
  ProcNode n{ProcTag::Inr};
  n.a = std::move(x);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pCase(Name x, Proc p, Proc q) {
  ProcNode n{ProcTag::Case};
  n.a = std::move(x);
  n.left = std::move(p);
  n.right = std::move(q);
  return mk(std::move(n));
}
inline Proc pSendType(Name x, Type a, Proc p) {
  ProcNode n{ProcTag::SendType};
  n.a = std::move(x);
  n.type = std::move(a);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pRecvType(Name x, std::string tv, Proc p) {
  ProcNode n{ProcTag::RecvType};
  n.a = std::move(x);
  n.tyvar = std::move(tv);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pServer(Name x, Name y, Proc p) {
  ProcNode n{ProcTag::Server};
  n.a = std::move(x);
  n.b = std::move(y);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pUse(Name x, Name y, Proc p) {
  ProcNode n{ProcTag::Use};
  n.a = std::move(x);
  n.b = std::move(y);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pDup(Name x, Name y, Name z, Proc p) {
  ProcNode n{ProcTag::Dup};
  n.a = std::move(x);
  n.b = std::move(y);
  n.c = std::move(z);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pDisp(Name x, Proc p) {
  ProcNode n{ProcTag::Disp};
  n.a = std::move(x);
  n.left = std::move(p);
  return mk(std::move(n));
}
inline Proc pFwd(Name x, Name y) {
  ProcNode n{ProcTag::Fwd};
  n.a = std::move(x);
  n.b = std::move(y);
  return mk(std::move(n));
}
inline Proc pHoSend(Name x, Abstraction abs, Proc q) {
  ProcNode n{ProcTag::HoSend};
  n.a = std::move(x);
  n.abs = std::move(abs);
  n.left = std::move(q);
  return mk(std::move(n));
}
inline Proc pHoRecv(Name x, std::string p, Proc body) {
  ProcNode n{ProcTag::HoRecv};
  n.a = std::move(x);
  n.pvar = std::move(p);
  n.left = std::move(body);
  return mk(std::move(n));
}
inline Proc pInvoke(std::string p, Record sigma, std::optional<HyperEnv> anno = std::nullopt) {
  ProcNode n{ProcTag::Invoke};
  n.pvar = std::move(p);
  n.record = std::move(sigma);
  n.anno = std::move(anno);
  return mk(std::move(n));
}
inline Proc pChop(std::string p, Abstraction abs, Proc q, std::optional<HyperEnv> anno = std::nullopt) {
  ProcNode n{ProcTag::Chop};
  n.pvar = std::move(p);
  n.abs = std::move(abs);
  n.left = std::move(q);
  n.anno = std::move(anno);
  return mk(std::move(n));
}

// ---------------------------------------------------------------------------
// Free channel names, free process variables.

inline NameSet freeNames(const Proc& p);

// Free output x^[y].P: sugar for sending a fresh endpoint that is forwarded
// to the already-known name y.
inline Proc pFreeSend(const Name& x, const Name& y, Proc p, FreshNames& fresh) {
  NameSet avoid = freeNames(p);
  avoid.insert(x);
  avoid.insert(y);
  Name z = fresh.fresh(x, avoid);
  return pSend(x, z, pPar(pFwd(y, z), std::move(p)));
}

inline void freeNamesInto(const Proc& p, NameSet& out);

inline void freeNamesLess(const Proc& p, std::initializer_list<Name> bound, NameSet& out) {
  NameSet inner;
  freeNamesInto(p, inner);
  for (const auto& b : bound) inner.erase(b);
  out.insert(inner.begin(), inner.end());
}

inline void freeNamesInto(const Proc& p, NameSet& out) {
  switch (p->tag) {
    case ProcTag::Nil: return;
    case ProcTag::Par:
      freeNamesInto(p->left, out);
      freeNamesInto(p->right, out);
      return;
    case ProcTag::Cut:
      freeNamesLess(p->left, {p->a, p->b}, out);
      return;
    case ProcTag::Send:
    case ProcTag::Recv:
    case ProcTag::Server:
    case ProcTag::Use:
      out.insert(p->a);
      freeNamesLess(p->left, {p->b}, out);
      return;
    case ProcTag::Close:
    case ProcTag::Wait:
    case ProcTag::Inl:
    case ProcTag::Inr:
    case ProcTag::SendType:
    case ProcTag::RecvType:
    case ProcTag::Disp:
      out.insert(p->a);
      freeNamesInto(p->left, out);
      return;
    case ProcTag::Case:
      out.insert(p->a);
      freeNamesInto(p->left, out);
      freeNamesInto(p->right, out);
      return;
    case ProcTag::Dup:
      out.insert(p->a);
      freeNamesLess(p->left, {p->b, p->c}, out);
      return;
    case ProcTag::Fwd:
      out.insert(p->a);
      out.insert(p->b);
      return;
    case ProcTag::HoSend:
      // The abstraction is closed: image(rho) is bound in its body.
      out.insert(p->a);
      freeNamesInto(p->left, out);
      return;
    case ProcTag::HoRecv:
      out.insert(p->a);
      freeNamesInto(p->left, out);
      return;
    case ProcTag::Invoke:
      for (const auto& [f, x] : p->record) out.insert(x);
      return;
    case ProcTag::Chop:
      freeNamesInto(p->left, out);
      return;
  }
}

inline NameSet freeNames(const Proc& p) {
  NameSet out;
  freeNamesInto(p, out);
  return out;
}

inline void freeProcVarsInto(const Proc& p, NameSet& out) {
  switch (p->tag) {
    case ProcTag::Invoke:
      out.insert(p->pvar);
      return;
    case ProcTag::HoRecv: {
      NameSet inner;
      freeProcVarsInto(p->left, inner);
      inner.erase(p->pvar);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcTag::Chop: {
      freeProcVarsInto(p->abs->body, out);
      NameSet inner;
      freeProcVarsInto(p->left, inner);
      inner.erase(p->pvar);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcTag::HoSend:
      freeProcVarsInto(p->abs->body, out);
      freeProcVarsInto(p->left, out);
      return;
    default:
      if (p->left) freeProcVarsInto(p->left, out);
      if (p->right) freeProcVarsInto(p->right, out);
      return;
  }
}

inline NameSet freeProcVars(const Proc& p) {
  NameSet out;
  freeProcVarsInto(p, out);
  return out;
}

// All channel names occurring anywhere in the term, bound or free. Useful for
// choosing safe fresh names without a shared counter.
inline void allNamesInto(const Proc& p, NameSet& out) {
  if (!p) return;
  out.insert(p->a);
  out.insert(p->b);
  out.insert(p->c);
  if (p->abs) {
    for (const auto& [f, x] : p->abs->rho) out.insert(x);
    allNamesInto(p->abs->body, out);
  }
  for (const auto& [f, x] : p->record) out.insert(x);
  allNamesInto(p->left, out);
  allNamesInto(p->right, out);
  out.erase("");
}

inline NameSet allNames(const Proc& p) {
  NameSet out;
  allNamesInto(p, out);
  return out;
}

// ---------------------------------------------------------------------------
// Printing, in the same surface syntax the parser accepts.

inline std::string showProc(const Proc& p);

namespace detail {

inline void showRecord(const Record& r, std::ostream& os) {
  bool first = true;
  for (const auto& [f, x] : r) {
    if (!first) os << ", ";
    first = false;
    os << f << "=" << x;
  }
}

// level 0: may be a bare parallel composition; level 1: parallel needs parens.
inline void showProcInto(const Proc& p, int level, std::ostream& os) {
  switch (p->tag) {
    case ProcTag::Nil: os << "0"; return;
    case ProcTag::Par: {
      if (level > 0) os << "(";
      showProcInto(p->left, 1, os);
      os << " | ";
      // Right operand prints at level 0 so chains stay flat: a | b | c.
      showProcInto(p->right, 0, os);
      if (level > 0) os << ")";
      return;
    }
    case ProcTag::Cut:
      os << "new (" << p->a;
      if (p->type) os << ":" << showType(p->type);
      os << ")(" << p->b << ") ";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Send:
      os << p->a << "[" << p->b << "].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Recv:
      os << p->a << "(" << p->b << ").";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Close:
      os << p->a << "[].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Wait:
      os << p->a << "().";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Inl:
      os << p->a << "[inl].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Inr:
      os << p->a << "[inr].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Case:
      os << p->a << ".case(";
      showProcInto(p->left, 0, os);
      os << ", ";
      showProcInto(p->right, 0, os);
      os << ")";
      return;
    case ProcTag::SendType:
      os << p->a << "[type " << showType(p->type) << "].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::RecvType:
      os << p->a << "(type " << p->tyvar << ").";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Server:
      os << "!" << p->a << "(" << p->b << ").";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Use:
      os << "?" << p->a << "[" << p->b << "].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Dup:
      os << "?" << p->a << "[" << p->b << ", " << p->c << "].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Disp:
      os << "?" << p->a << "[].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Fwd:
      os << p->a << "<->" << p->b;
      return;
    case ProcTag::HoSend:
      os << p->a << "[(";
      showRecord(p->abs->rho, os);
      os << ") ";
      showProcInto(p->abs->body, 0, os);
      os << "].";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::HoRecv:
      os << p->a << "(" << p->pvar << ").";
      showProcInto(p->left, 1, os);
      return;
    case ProcTag::Invoke:
      os << p->pvar << "<";
      showRecord(p->record, os);
      os << ">";
      if (p->anno) os << "::{" << showHyperEnv(*p->anno) << "}";
      return;
    case ProcTag::Chop:
      // The continuation extends to the right, so the whole form needs
      // parentheses anywhere a parallel composition would.
      if (level > 0) os << "(";
      os << "let " << p->pvar;
      if (p->anno) os << "::{" << showHyperEnv(*p->anno) << "}";
      os << " = (";
      showRecord(p->abs->rho, os);
      os << ") ";
      showProcInto(p->abs->body, 1, os);
      os << " in ";
      showProcInto(p->left, 0, os);
      if (level > 0) os << ")";
      return;
  }
}

}  // namespace detail

inline std::string showProc(const Proc& p) {
  std::ostringstream os;
  detail::showProcInto(p, 0, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Renaming of free channel names. The map is applied simultaneously; binders
// are renamed on the fly when they would capture an incoming name.

inline Proc substNames(const Proc& p, const std::map<Name, Name>& sub, FreshNames& fresh);

namespace detail {

inline Name applySub(const std::map<Name, Name>& sub, const Name& x) {
  auto it = sub.find(x);
  return it == sub.end() ? x : it->second;
}

// Handle the binders introduced by one node together: shadow them in `sub`,
// then rename any of them that would capture a name the substitution
// introduces into the body (or that would collide with each other's new
// names). Returns the new binder names in order.
inline std::vector<Name> refreshBinders(const std::vector<Name>& binders, const Proc& body,
                                        std::map<Name, Name>& sub, FreshNames& fresh) {
  for (const auto& b : binders) sub.erase(b);
  NameSet fns = freeNames(body);
  for (const auto& b : binders) fns.erase(b);
  NameSet incoming;
  for (const auto& x : fns) incoming.insert(applySub(sub, x));
  NameSet taken = incoming;
  for (const auto& b : binders) taken.insert(b);
  std::vector<Name> out;
  for (const auto& b : binders) {
    if (incoming.count(b)) {
      Name nb = fresh.fresh(b, taken);
      taken.insert(nb);
      sub[b] = nb;
      out.push_back(nb);
    } else {
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace detail

inline Proc substNames(const Proc& p, const std::map<Name, Name>& sub0, FreshNames& fresh) {
  using detail::applySub;
  if (sub0.empty()) return p;
  const std::map<Name, Name>& sub = sub0;
  switch (p->tag) {
    case ProcTag::Nil: return p;
    case ProcTag::Par:
      return pPar(substNames(p->left, sub, fresh), substNames(p->right, sub, fresh));
    case ProcTag::Cut: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->a, p->b}, p->left, s, fresh);
      return pCut(bs[0], p->type, bs[1], substNames(p->left, s, fresh));
    }
    case ProcTag::Send: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->b}, p->left, s, fresh);
      return pSend(applySub(sub, p->a), bs[0], substNames(p->left, s, fresh));
    }
    case ProcTag::Recv: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->b}, p->left, s, fresh);
      return pRecv(applySub(sub, p->a), bs[0], substNames(p->left, s, fresh));
    }
    case ProcTag::Close:
      return pClose(applySub(sub, p->a), substNames(p->left, sub, fresh));
    case ProcTag::Wait:
      return pWait(applySub(sub, p->a), substNames(p->left, sub, fresh));
    case ProcTag::Inl:
      return pInl(applySub(sub, p->a), substNames(p->left, sub, fresh));
    case ProcTag::Inr:
      return pInr(applySub(sub, p->a), substNames(p->left, sub, fresh));
    case ProcTag::Case:
      return pCase(applySub(sub, p->a), substNames(p->left, sub, fresh),
                   substNames(p->right, sub, fresh));
    case ProcTag::SendType:
      return pSendType(applySub(sub, p->a), p->type, substNames(p->left, sub, fresh));
    case ProcTag::RecvType:
      return pRecvType(applySub(sub, p->a), p->tyvar, substNames(p->left, sub, fresh));
    case ProcTag::Server: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->b}, p->left, s, fresh);
      return pServer(applySub(sub, p->a), bs[0], substNames(p->left, s, fresh));
    }
    case ProcTag::Use: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->b}, p->left, s, fresh);
      return pUse(applySub(sub, p->a), bs[0], substNames(p->left, s, fresh));
    }
    case ProcTag::Dup: {
      std::map<Name, Name> s = sub;
      auto bs = detail::refreshBinders({p->b, p->c}, p->left, s, fresh);
      return pDup(applySub(sub, p->a), bs[0], bs[1], substNames(p->left, s, fresh));
    }
    case ProcTag::Disp:
      return pDisp(applySub(sub, p->a), substNames(p->left, sub, fresh));
    case ProcTag::Fwd:
      return pFwd(applySub(sub, p->a), applySub(sub, p->b));
    case ProcTag::HoSend:
      // Abstraction bodies are channel-closed; only the continuation and the
      // subject are affected.
      return pHoSend(applySub(sub, p->a), *p->abs, substNames(p->left, sub, fresh));
    case ProcTag::HoRecv:
      return pHoRecv(applySub(sub, p->a), p->pvar, substNames(p->left, sub, fresh));
    case ProcTag::Invoke: {
      Record r;
      for (const auto& [f, x] : p->record) r[f] = applySub(sub, x);
      return pInvoke(p->pvar, std::move(r), p->anno);
    }
    case ProcTag::Chop:
      return pChop(p->pvar, *p->abs, substNames(p->left, sub, fresh), p->anno);
  }
  throw Error("substNames: unknown tag");
}

inline Proc substName(const Proc& p, const Name& from, const Name& to, FreshNames& fresh) {
  return substNames(p, {{from, to}}, fresh);
}

// Substitution of a type for a type variable throughout a process (used by
// the type-input transition).
inline Proc substTypeInProc(const Proc& p, const Name& x, const Type& a) {
  if (!p) return p;
  if (p->tag == ProcTag::RecvType && p->tyvar == x) return p;  // shadowed
  ProcNode n = *p;
  if (n.type) n.type = substTypeVar(n.type, x, a);
  if (n.anno) n.anno = substTypeVar(*n.anno, x, a);
  if (n.left) n.left = substTypeInProc(n.left, x, a);
  if (n.right) n.right = substTypeInProc(n.right, x, a);
  if (n.abs) n.abs = Abstraction{n.abs->rho, substTypeInProc(n.abs->body, x, a)};
  return mk(std::move(n));
}

// ---------------------------------------------------------------------------
// Alpha-equivalence via canonical renaming of binders. Bound channels are
// renamed to positional names in traversal order; free names and record keys
// keep their identity; bound type and process variables are canonicalised the
// same way.

namespace detail {

struct AlphaState {
  int next = 0;
  std::map<Name, Name> chan;    // in-scope renaming of bound channels
  std::map<Name, Name> tyv;     // bound type variables
  std::map<Name, Name> pv;      // bound process variables

  Name bindChan(const Name& x) { return chan[x] = "%" + std::to_string(next++); }
  Name bindTyv(const Name& x) { return tyv[x] = "%T" + std::to_string(next++); }
  Name bindPv(const Name& x) { return pv[x] = "%p" + std::to_string(next++); }
  Name lookChan(const Name& x) const {
    auto it = chan.find(x);
    return it == chan.end() ? x : it->second;
  }
  Name lookPv(const Name& x) const {
    auto it = pv.find(x);
    return it == pv.end() ? x : it->second;
  }
};

inline Type alphaType(const Type& t, const AlphaState& st) {
  if (!t) return t;
  switch (t->tag) {
    case TypeTag::Var: {
      auto it = st.tyv.find(t->var);
      if (it == st.tyv.end()) return t;
      return tVar(it->second, t->dualised);
    }
    case TypeTag::Tensor: return tTensor(alphaType(t->left, st), alphaType(t->right, st));
    case TypeTag::Parr: return tParr(alphaType(t->left, st), alphaType(t->right, st));
    case TypeTag::Plus: return tPlus(alphaType(t->left, st), alphaType(t->right, st));
    case TypeTag::With: return tWith(alphaType(t->left, st), alphaType(t->right, st));
    case TypeTag::Exists:
    case TypeTag::Forall: {
      // Type binders inside types are canonicalised locally (scope does not
      // leak into the process term).
      AlphaState inner = st;
      Name nb = inner.bindTyv(t->var);
      Type body = alphaType(t->body, inner);
      return t->tag == TypeTag::Exists ? tExists(nb, body) : tForall(nb, body);
    }
    case TypeTag::Query: return tQuery(alphaType(t->body, st));
    case TypeTag::Bang: return tBang(alphaType(t->body, st));
    case TypeTag::Provide:
    case TypeTag::Assume: {
      HyperEnv g;
      for (const auto& env : t->henv) {
        Env e;
        for (const auto& [x, ty] : env) e.emplace(x, alphaType(ty, st));
        g.push_back(std::move(e));
      }
      return t->tag == TypeTag::Provide ? tProvide(std::move(g)) : tAssume(std::move(g));
    }
    default: return t;
  }
}

inline void flattenParInto(const Proc& p, std::vector<Proc>& out) {
  if (p->tag == ProcTag::Par) {
    flattenParInto(p->left, out);
    flattenParInto(p->right, out);
  } else if (p->tag != ProcTag::Nil) {
    out.push_back(p);
  }
}

// `canonical` additionally sorts parallel components, drops inert nils,
// orients every cut pair and forwarder, making the result invariant under
// alpha-renaming and the structural laws; with the flag off this is a pure
// renaming of binders.
inline Proc alphaProc(const Proc& p, AlphaState st, bool canonical);

inline Proc alphaProc(const Proc& p, AlphaState st, bool canonical) {
  switch (p->tag) {
    case ProcTag::Nil: return p;
    case ProcTag::Par: {
      if (!canonical) {
        AlphaState l = st;
        Proc pl = alphaProc(p->left, l, canonical);
        Proc pr = alphaProc(p->right, st, canonical);
        return pPar(pl, pr);
      }
      // Each component is canonicalised against a copy of the state, so its
      // form does not depend on its siblings; sorting is then well defined.
      std::vector<Proc> comps;
      flattenParInto(p, comps);
      std::vector<std::pair<std::string, Proc>> keyed;
      for (const auto& c : comps) {
        Proc cc = alphaProc(c, st, true);
        keyed.emplace_back(showProc(cc), cc);
      }
      std::sort(keyed.begin(), keyed.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (keyed.empty()) return pNil();
      Proc acc = keyed.back().second;
      for (std::size_t i = keyed.size() - 1; i-- > 0;) acc = pPar(keyed[i].second, acc);
      return acc;
    }
    case ProcTag::Cut: {
      if (!canonical) {
        Name nx = st.bindChan(p->a);
        Name ny = st.bindChan(p->b);
        Type ann = alphaType(p->type, st);
        Proc body = alphaProc(p->left, st, canonical);
        return pCut(nx, ann, ny, body);
      }
      Proc best;
      std::string bestKey;
      for (int flip = 0; flip < 2; ++flip) {
        AlphaState c = st;
        Name n1 = c.bindChan(flip ? p->b : p->a);
        Name n2 = c.bindChan(flip ? p->a : p->b);
        Type ann = p->type ? (flip ? dual(p->type) : p->type) : Type();
        ann = alphaType(ann, c);
        Proc cand = pCut(n1, ann, n2, alphaProc(p->left, c, true));
        std::string k = showProc(cand);
        if (!best || k < bestKey) {
          best = cand;
          bestKey = k;
        }
      }
      return best;
    }
    case ProcTag::Send: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindChan(p->b);
      Proc body = alphaProc(p->left, st, canonical);
      return pSend(subj, nb, body);
    }
    case ProcTag::Recv: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindChan(p->b);
      Proc body = alphaProc(p->left, st, canonical);
      return pRecv(subj, nb, body);
    }
    case ProcTag::Close: {
      Name subj = st.lookChan(p->a);
      return pClose(subj, alphaProc(p->left, st, canonical));
    }
    case ProcTag::Wait: {
      Name subj = st.lookChan(p->a);
      return pWait(subj, alphaProc(p->left, st, canonical));
    }
    case ProcTag::Inl: {
      Name subj = st.lookChan(p->a);
      return pInl(subj, alphaProc(p->left, st, canonical));
    }
    case ProcTag::Inr: {
      Name subj = st.lookChan(p->a);
      return pInr(subj, alphaProc(p->left, st, canonical));
    }
    case ProcTag::Case: {
      Name subj = st.lookChan(p->a);
      AlphaState l = st;
      Proc pl = alphaProc(p->left, l, canonical);
      Proc pr = alphaProc(p->right, st, canonical);
      return pCase(subj, pl, pr);
    }
    case ProcTag::SendType: {
      Name subj = st.lookChan(p->a);
      Type ty = alphaType(p->type, st);
      return pSendType(subj, ty, alphaProc(p->left, st, canonical));
    }
    case ProcTag::RecvType: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindTyv(p->tyvar);
      Proc body = alphaProc(p->left, st, canonical);
      return pRecvType(subj, nb, body);
    }
    case ProcTag::Server: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindChan(p->b);
      Proc body = alphaProc(p->left, st, canonical);
      return pServer(subj, nb, body);
    }
    case ProcTag::Use: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindChan(p->b);
      Proc body = alphaProc(p->left, st, canonical);
      return pUse(subj, nb, body);
    }
    case ProcTag::Dup: {
      Name subj = st.lookChan(p->a);
      Name nb = st.bindChan(p->b);
      Name nc = st.bindChan(p->c);
      Proc body = alphaProc(p->left, st, canonical);
      return pDup(subj, nb, nc, body);
    }
    case ProcTag::Disp: {
      Name subj = st.lookChan(p->a);
      return pDisp(subj, alphaProc(p->left, st, canonical));
    }
    case ProcTag::Fwd: {
      Name na = st.lookChan(p->a);
      Name nb = st.lookChan(p->b);
      if (canonical && nb < na) std::swap(na, nb);
      return pFwd(na, nb);
    }
    case ProcTag::HoSend: {
      Name subj = st.lookChan(p->a);
      AlphaState absSt = st;
      Record r;
      for (const auto& [f, x] : p->abs->rho) r[f] = absSt.bindChan(x);
      Proc absBody = alphaProc(p->abs->body, absSt, canonical);
      Proc cont = alphaProc(p->left, st, canonical);
      return pHoSend(subj, Abstraction{std::move(r), absBody}, cont);
    }
    case ProcTag::HoRecv: {
      Name subj = st.lookChan(p->a);
      Name np = st.bindPv(p->pvar);
      Proc body = alphaProc(p->left, st, canonical);
      return pHoRecv(subj, np, body);
    }
    case ProcTag::Invoke: {
      Record r;
      for (const auto& [f, x] : p->record) r[f] = st.lookChan(x);
      std::optional<HyperEnv> anno;
      if (p->anno) {
        HyperEnv g;
        for (const auto& env : *p->anno) {
          Env e;
          for (const auto& [x, ty] : env) e.emplace(x, alphaType(ty, st));
          g.push_back(std::move(e));
        }
        anno = std::move(g);
      }
      return pInvoke(st.lookPv(p->pvar), std::move(r), std::move(anno));
    }
    case ProcTag::Chop: {
      AlphaState absSt = st;
      Record r;
      for (const auto& [f, x] : p->abs->rho) r[f] = absSt.bindChan(x);
      Proc absBody = alphaProc(p->abs->body, absSt, canonical);
      Name np = st.bindPv(p->pvar);
      Proc cont = alphaProc(p->left, st, canonical);
      return pChop(np, Abstraction{std::move(r), absBody}, cont, p->anno);
    }
  }
  throw Error("alphaProc: unknown tag");
}

}  // namespace detail

// Canonical renaming of bound names; two terms are alpha-equivalent iff their
// alpha-normal forms print identically.
inline Proc alphaNormal(const Proc& p) {
  return detail::alphaProc(p, detail::AlphaState{}, false);
}

inline bool alphaEq(const Proc& p, const Proc& q) {
  return showProc(alphaNormal(p)) == showProc(alphaNormal(q));
}

// ---------------------------------------------------------------------------
// Equivalence up to the structural laws the behavioural theory proves sound:
// alpha-renaming, parallel composition as a commutative monoid with unit 0,
// and symmetry of the restriction pair (new (x)(y) against new (y)(x); the
// communication rules treat the two sides symmetrically). Decided by a
// backtracking matcher; sizes at the desk scale keep this cheap.

namespace detail {

struct EquivCtx {
  std::map<Name, Name> chan;  // bound-name correspondence left -> right
  std::map<Name, Name> tyv;
  std::map<Name, Name> pv;

  // Rebinding must retire any stale pair whose right side is now shadowed,
  // otherwise an outer left name could keep matching the rebound right name.
  static void bindIn(std::map<Name, Name>& m, const Name& l, const Name& r) {
    for (auto it = m.begin(); it != m.end();) {
      if (it->second == r) it = m.erase(it);
      else ++it;
    }
    m[l] = r;
  }
  void bindChan(const Name& l, const Name& r) { bindIn(chan, l, r); }
  void bindTyv(const Name& l, const Name& r) { bindIn(tyv, l, r); }
  void bindPv(const Name& l, const Name& r) { bindIn(pv, l, r); }
};

inline bool equivName(const EquivCtx& ctx, const Name& a, const Name& b) {
  auto it = ctx.chan.find(a);
  if (it != ctx.chan.end()) return it->second == b;
  // a is free on the left: b must be the same free name (not a bound one).
  for (const auto& [l, r] : ctx.chan)
    if (r == b) return false;
  return a == b;
}

inline bool structEquivRec(const Proc& p, const Proc& q, EquivCtx ctx);

inline bool matchComponents(const std::vector<Proc>& ls, std::vector<Proc> rs, std::size_t i,
                            std::vector<bool>& used, const EquivCtx& ctx) {
  if (i == ls.size()) return true;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    if (used[j]) continue;
    if (structEquivRec(ls[i], rs[j], ctx)) {
      used[j] = true;
      if (matchComponents(ls, rs, i + 1, used, ctx)) return true;
      used[j] = false;
    }
  }
  return false;
}

inline bool structEquivRec(const Proc& p0, const Proc& q0, EquivCtx ctx) {
  // Normalise both to component lists first so Nil/Par structure is ignored.
  std::vector<Proc> ls, rs;
  flattenParInto(p0, ls);
  flattenParInto(q0, rs);
  if (ls.size() != rs.size()) return false;
  if (ls.empty()) return true;
  if (ls.size() > 1) {
    std::vector<bool> used(rs.size(), false);
    return matchComponents(ls, rs, 0, used, ctx);
  }
  Proc p = ls[0], q = rs[0];

  if (p->tag == ProcTag::Cut && q->tag == ProcTag::Cut) {
    // Try both orientations of the right-hand pair.
    for (int flip = 0; flip < 2; ++flip) {
      EquivCtx c = ctx;
      c.bindChan(p->a, flip ? q->b : q->a);
      c.bindChan(p->b, flip ? q->a : q->b);
      if (structEquivRec(p->left, q->left, c)) return true;
    }
    return false;
  }
  if (p->tag != q->tag) return false;

  switch (p->tag) {
    case ProcTag::Nil: return true;
    case ProcTag::Par:
    case ProcTag::Cut: return false;  // handled above
    case ProcTag::Send:
    case ProcTag::Recv:
    case ProcTag::Server:
    case ProcTag::Use: {
      if (!equivName(ctx, p->a, q->a)) return false;
      EquivCtx c = ctx;
      c.bindChan(p->b, q->b);
      return structEquivRec(p->left, q->left, c);
    }
    case ProcTag::Close:
    case ProcTag::Wait:
    case ProcTag::Inl:
    case ProcTag::Inr:
    case ProcTag::Disp:
      return equivName(ctx, p->a, q->a) && structEquivRec(p->left, q->left, ctx);
    case ProcTag::Case:
      return equivName(ctx, p->a, q->a) && structEquivRec(p->left, q->left, ctx) &&
             structEquivRec(p->right, q->right, ctx);
    case ProcTag::SendType: {
      if (!equivName(ctx, p->a, q->a)) return false;
      // Payload types compared syntactically (bound proc-type vars rare in
      // practice; the tyv correspondence covers them).
      Type ta = p->type, tb = q->type;
      AlphaState s;
      s.tyv = ctx.tyv;
      if (!typeEqual(alphaType(ta, s), tb)) return false;
      return structEquivRec(p->left, q->left, ctx);
    }
    case ProcTag::RecvType: {
      if (!equivName(ctx, p->a, q->a)) return false;
      EquivCtx c = ctx;
      c.bindTyv(p->tyvar, q->tyvar);
      return structEquivRec(p->left, q->left, c);
    }
    case ProcTag::Dup: {
      if (!equivName(ctx, p->a, q->a)) return false;
      EquivCtx c = ctx;
      c.bindChan(p->b, q->b);
      c.bindChan(p->c, q->c);
      return structEquivRec(p->left, q->left, c);
    }
    case ProcTag::Fwd:
      // x<->y is symmetric in behaviour but we keep it directional here; the
      // forwarder emits both orders as labels, so matching directionally is
      // enough for state comparison.
      return (equivName(ctx, p->a, q->a) && equivName(ctx, p->b, q->b)) ||
             (equivName(ctx, p->a, q->b) && equivName(ctx, p->b, q->a));
    case ProcTag::HoSend: {
      if (!equivName(ctx, p->a, q->a)) return false;
      const auto& ra = p->abs->rho;
      const auto& rb = q->abs->rho;
      if (ra.size() != rb.size()) return false;
      EquivCtx c = ctx;
      auto ia = ra.begin();
      auto ib = rb.begin();
      for (; ia != ra.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        c.bindChan(ia->second, ib->second);
      }
      return structEquivRec(p->abs->body, q->abs->body, c) &&
             structEquivRec(p->left, q->left, ctx);
    }
    case ProcTag::HoRecv: {
      if (!equivName(ctx, p->a, q->a)) return false;
      EquivCtx c = ctx;
      c.bindPv(p->pvar, q->pvar);
      return structEquivRec(p->left, q->left, c);
    }
    case ProcTag::Invoke: {
      auto it = ctx.pv.find(p->pvar);
      Name want = it == ctx.pv.end() ? p->pvar : it->second;
      if (want != q->pvar) return false;
      if (p->record.size() != q->record.size()) return false;
      auto ia = p->record.begin();
      auto ib = q->record.begin();
      for (; ia != p->record.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        if (!equivName(ctx, ia->second, ib->second)) return false;
      }
      return true;
    }
    case ProcTag::Chop: {
      const auto& ra = p->abs->rho;
      const auto& rb = q->abs->rho;
      if (ra.size() != rb.size()) return false;
      EquivCtx ca = ctx;
      auto ia = ra.begin();
      auto ib = rb.begin();
      for (; ia != ra.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        ca.bindChan(ia->second, ib->second);
      }
      if (!structEquivRec(p->abs->body, q->abs->body, ca)) return false;
      EquivCtx cc = ctx;
      cc.bindPv(p->pvar, q->pvar);
      return structEquivRec(p->left, q->left, cc);
    }
  }
  return false;
}

}  // namespace detail

// P and Q equal up to alpha, the parallel monoid laws, cut-pair symmetry and
// forwarder symmetry.
inline bool structEquiv(const Proc& p, const Proc& q) {
  return detail::structEquivRec(p, q, detail::EquivCtx{});
}

// ---------------------------------------------------------------------------
// Deterministic normal form modulo the structural laws: canonical binder
// names, sorted parallel components, oriented cut pairs and forwarders. Two
// terms related by structEquiv get the same key whenever their cut bodies
// flatten the same way; the key is used for memoisation and cycle detection,
// with structEquiv as the exact check.

inline Proc canonicalForm(const Proc& p) {
  return detail::alphaProc(p, detail::AlphaState{}, true);
}

inline std::string canonicalKey(const Proc& p) { return showProc(canonicalForm(p)); }

}  // namespace hyperpill

#endif  // HYPERPILL_PROCESS_HPP
