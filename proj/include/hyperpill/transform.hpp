#pragma once

// Source-to-source transformations.
//
//   - disentangle: push restrictions inward until the process exposes one
//     parallel piece per component of its typing.
//   - packParr / packTensor / pack: internalise a whole hyperenvironment
//     into a single channel carrying one packet per component.
//   - psi: read a packed derivation back into the parallel composition of
//     the component derivations it packs.
//   - etaExpandForwarder: expand a link into the protocol its type dictates.
//   - encodeHO: compile away abstraction passing, turning a higher-order
//     derivation into a first-order process together with its typing.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "typing.hpp"

namespace hyperpill {

// ---------------------------------------------------------------------------
// Disentanglement.

struct Disentangled {
  Proc proc;
  // Set when some restriction could not be pushed between two distinct
  // parallel pieces: its endpoints sit in a single piece, or one of them
  // occurs nowhere.  The restriction is kept in place at that site.
  bool residual = false;
};

namespace detail {

inline Proc foldPar(const std::vector<Proc>& ps) {
  if (ps.empty()) return pNil();
  Proc out = ps.front();
  for (std::size_t i = 1; i < ps.size(); ++i) out = pPar(out, ps[i]);
  return out;
}

inline Proc disGo(const Proc& p, bool& residual);

inline std::optional<Abstraction> disAbs(const std::optional<Abstraction>& abs,
                                         bool& residual) {
  if (!abs) return std::nullopt;
  return Abstraction{abs->rho, disGo(abs->body, residual)};
}

inline Proc disGo(const Proc& p, bool& residual) {
  switch (p->tag) {
    case ProcTag::Nil:
    case ProcTag::Fwd:
    case ProcTag::Invoke:
      return p;
    case ProcTag::Par: {
      Proc l = disGo(p->left, residual);
      Proc r = disGo(p->right, residual);
      if (l->tag == ProcTag::Nil) return r;
      if (r->tag == ProcTag::Nil) return l;
      return pPar(l, r);
    }
    case ProcTag::Case: {
      ProcNode n = *p;
      n.left = disGo(p->left, residual);
      n.right = disGo(p->right, residual);
      return mk(std::move(n));
    }
    case ProcTag::Cut: {
      Proc body = disGo(p->left, residual);
      std::vector<Proc> pieces;
      flattenParInto(body, pieces);
      pieces.erase(std::remove_if(pieces.begin(), pieces.end(),
                                  [](const Proc& q) { return q->tag == ProcTag::Nil; }),
                   pieces.end());
      std::optional<std::size_t> ix, iy;
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        NameSet fn = freeNames(pieces[i]);
        if (fn.count(p->a)) ix = i;
        if (fn.count(p->b)) iy = i;
      }
      if (!ix || !iy) {
        residual = true;
        return pCut(p->a, p->type, p->b, body);
      }
      if (*ix == *iy) {
        residual = true;
        pieces[*ix] = pCut(p->a, p->type, p->b, pieces[*ix]);
        return foldPar(pieces);
      }
      // Re-scope around exactly the two pieces that use the endpoints, at
      // the position of the earlier one; the endpoint bound first comes
      // first inside the restriction.
      std::size_t lo = std::min(*ix, *iy), hi = std::max(*ix, *iy);
      Proc node = pCut(p->a, p->type, p->b, pPar(pieces[*ix], pieces[*iy]));
      std::vector<Proc> out;
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        if (k == hi) continue;
        out.push_back(k == lo ? node : pieces[k]);
      }
      return foldPar(out);
    }
    default: {
      // Every remaining construct is a prefix over `left` (plus possibly an
      // abstraction); recurse underneath it.
      ProcNode n = *p;
      n.abs = disAbs(p->abs, residual);
      n.left = disGo(p->left, residual);
      return mk(std::move(n));
    }
  }
}

}  // namespace detail

inline Disentangled disentangle(const Proc& p) {
  Disentangled out;
  out.proc = detail::disGo(p, out.residual);
  return out;
}

// ---------------------------------------------------------------------------
// Packing.

namespace detail {

// Mint a readable name not in `avoid`, and reserve it.
inline Name mintName(const Name& base, NameSet& avoid) {
  Name cand = base;
  for (int k = 2; avoid.count(cand); ++k) cand = base + std::to_string(k);
  avoid.insert(cand);
  return cand;
}

inline void requireOrder(const Env& comp, const std::vector<Name>& order) {
  if (order.size() != comp.size())
    throw Error("packing order lists " + std::to_string(order.size()) +
                " names for a component of " + std::to_string(comp.size()));
  NameSet seen;
  for (const Name& z : order) {
    if (!comp.count(z)) throw Error("packing order names '" + z + "' which is not typed");
    if (!seen.insert(z).second) throw Error("packing order repeats '" + z + "'");
  }
}

}  // namespace detail

// The one-channel type of a component, read in the given entry order: the
// first entry becomes the outermost connective.
inline Type parrTypeOf(const Env& comp, const std::vector<Name>& order) {
  detail::requireOrder(comp, order);
  Type t = tBot();
  for (auto it = order.rbegin(); it != order.rend(); ++it) t = tParr(comp.at(*it), t);
  return t;
}

// A process context with numbered holes, produced by the packing builders.
struct PackingContext {
  Name subject;
  std::size_t holes = 0;
  Type type;  // the type the subject gets once the holes are filled suitably
  // Fill the holes in component order.  `residue` is placed under the final
  // close; it must not use any typed name (pass pNil() when unused).
  std::function<Proc(const std::vector<Proc>&, const Proc&)> plugWith;

  Proc plug(const std::vector<Proc>& ps) const { return plugWith(ps, pNil()); }
};

// Receive every entry of `comp` over `y` in the given order, then wait on y;
// the single hole follows the wait.
inline PackingContext packParr(const Env& comp, const std::vector<Name>& order,
                               const Name& y) {
  detail::requireOrder(comp, order);
  PackingContext ctx;
  ctx.subject = y;
  ctx.holes = 1;
  ctx.type = parrTypeOf(comp, order);
  ctx.plugWith = [order, y](const std::vector<Proc>& ps, const Proc& residue) {
    if (ps.size() != 1) throw Error("this packing context has exactly one hole");
    if (residue->tag != ProcTag::Nil)
      throw Error("a receive packing has no place for a residue");
    Proc out = pWait(y, ps[0]);
    for (auto it = order.rbegin(); it != order.rend(); ++it) out = pRecv(y, *it, out);
    return out;
  };
  return ctx;
}

// Send one fresh packet channel per component of `g` over `x`, each packet
// receiving its component's entries in the given order; one hole per
// component.  The first component's packet is sent first.
inline PackingContext packTensor(const HyperEnv& g,
                                 const std::vector<std::vector<Name>>& orders,
                                 const Name& x) {
  if (orders.size() != g.size())
    throw Error("packing needs one order per component, got " +
                std::to_string(orders.size()) + " for " + std::to_string(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) detail::requireOrder(g[i], orders[i]);
  PackingContext ctx;
  ctx.subject = x;
  ctx.holes = g.size();
  Type t = tOne();
  for (std::size_t i = g.size(); i-- > 0;) t = tTensor(parrTypeOf(g[i], orders[i]), t);
  ctx.type = t;
  ctx.plugWith = [g, orders, x](const std::vector<Proc>& ps, const Proc& residue) {
    if (ps.size() != g.size())
      throw Error("this packing context has " + std::to_string(g.size()) + " holes, got " +
                  std::to_string(ps.size()) + " fillers");
    NameSet avoid = {x};
    for (const auto& comp : g)
      for (const auto& [z, ty] : comp) avoid.insert(z);
    for (const auto& q : ps) {
      NameSet an = allNames(q);
      avoid.insert(an.begin(), an.end());
    }
    {
      NameSet an = allNames(residue);
      avoid.insert(an.begin(), an.end());
    }
    Proc out = pClose(x, residue);
    for (std::size_t i = g.size(); i-- > 0;) {
      Name y = detail::mintName("y", avoid);
      Proc packet = pWait(y, ps[i]);
      for (auto it = orders[i].rbegin(); it != orders[i].rend(); ++it)
        packet = pRecv(y, *it, packet);
      out = pSend(x, y, pPar(out, packet));
    }
    return out;
  };
  return ctx;
}

namespace detail {

// Distribute parallel pieces over the components of a hyperenvironment by
// free names.  Pieces touching no typed name at all are returned separately.
struct PieceAlignment {
  std::vector<Proc> aligned;
  std::vector<Proc> spare;
};

inline PieceAlignment alignPieces(const std::vector<Proc>& pieces, const HyperEnv& comps) {
  PieceAlignment out;
  out.aligned.resize(comps.size());
  std::vector<bool> used(comps.size(), false);
  for (const Proc& piece : pieces) {
    NameSet fn = freeNames(piece);
    std::optional<std::size_t> home;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      bool touches = false;
      for (const auto& [z, ty] : comps[i])
        if (fn.count(z)) {
          touches = true;
          break;
        }
      if (!touches) continue;
      if (home) throw Error("a parallel piece spans two components: " + showProc(piece));
      home = i;
    }
    if (!home) {
      out.spare.push_back(piece);
      continue;
    }
    if (used[*home])
      throw Error("two parallel pieces claim the component " + showHyperEnv({comps[*home]}));
    out.aligned[*home] = piece;
    used[*home] = true;
  }
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (!used[i])
      throw Error("no parallel piece provides the component " + showHyperEnv({comps[i]}));
  return out;
}

inline std::vector<Proc> disPieces(const Proc& p, const std::string& what) {
  Disentangled d = disentangle(p);
  if (d.residual)
    throw Error("a restriction in " + what + " cannot be pushed between two pieces");
  std::vector<Proc> pieces;
  flattenParInto(d.proc, pieces);
  pieces.erase(std::remove_if(pieces.begin(), pieces.end(),
                              [](const Proc& q) { return q->tag == ProcTag::Nil; }),
               pieces.end());
  return pieces;
}

inline std::vector<std::vector<Name>> defaultOrders(const HyperEnv& g) {
  std::vector<std::vector<Name>> orders;
  for (const auto& comp : g) {
    std::vector<Name> o;
    for (const auto& [z, ty] : comp) o.push_back(z);
    orders.push_back(std::move(o));
  }
  return orders;
}

}  // namespace detail

// Pack a whole derivation onto the single fresh channel x: disentangle the
// subject, route each piece into the packet for its component, and close x
// last.  Entry orders default to the components' name order.
inline Proc pack(const Derivation& d, const Name& x) {
  if (freeNames(d.term).count(x))
    throw Error("'" + x + "' already occurs freely in the process being packed");
  std::vector<Proc> pieces = detail::disPieces(d.term, "the packed process");
  detail::PieceAlignment al = detail::alignPieces(pieces, d.env);
  PackingContext ctx = packTensor(d.env, detail::defaultOrders(d.env), x);
  return ctx.plugWith(al.aligned, detail::foldPar(al.spare));
}

// ---------------------------------------------------------------------------
// Reading a packed derivation back: the inverse direction of pack.

// Recognise the send/receive spine a packing lays down and return the
// derivation of the parallel composition of the packed pieces, typed by one
// component per packet in spine order.  Anything else raises an error.
inline Derivation psi(const Sigma& sigma, const Derivation& d) {
  if (!d.theta.empty())
    throw Error("a packed derivation cannot assume process variables");
  if (d.rule != "one" && d.rule != "tensor")
    throw Error("not a packed derivation: the subject must start by sending or closing");
  Name x = d.term->a;
  std::vector<Proc> terms;
  HyperEnv env;
  const Derivation* cur = &d;
  while (true) {
    if (cur->rule == "one") {
      if (cur->term->a != x)
        throw Error("not a packed derivation: the close is not on '" + x + "'");
      if (cur->kids.at(0).term->tag != ProcTag::Nil)
        terms.push_back(cur->kids.at(0).term);
      break;
    }
    if (cur->rule != "tensor" || cur->term->a != x)
      throw Error("not a packed derivation: expected a send on '" + x + "'");
    const Derivation& body = cur->kids.at(0);
    if (body.rule != "mix")
      throw Error("not a packed derivation: a packing send splits into a parallel pair");
    Name y = cur->term->b;
    const Derivation* packet = &body.kids.at(1);
    while (packet->rule == "par" && packet->term->a == y) packet = &packet->kids.at(0);
    if (packet->rule != "bot" || packet->term->a != y)
      throw Error("not a packed derivation: packet '" + y +
                  "' must be received entry by entry and then waited on");
    const Derivation& piece = packet->kids.at(0);
    if (piece.env.size() != 1)
      throw Error("not a packed derivation: a packed piece types one component");
    terms.push_back(piece.term);
    env.push_back(piece.env[0]);
    cur = &body.kids.at(0);
  }
  return checkProc(sigma, detail::foldPar(terms), env);
}

// ---------------------------------------------------------------------------
// Eta-expansion of forwarders.

namespace detail {

inline Proc etaGo(const Sigma& s, const Type& a0, const Name& x, const Name& y,
                  NameSet& avoid, int depth) {
  if (depth <= 0)
    throw Error("forwarder expansion exceeds the nesting limit; is the type recursive?");
  Type a = s.headNormal(a0);
  switch (a->tag) {
    case TypeTag::Var:
      return pFwd(x, y);
    case TypeTag::One:
      return pWait(x, pClose(y, pNil()));
    case TypeTag::Tensor: {
      Name u = mintName("u", avoid);
      Name v = mintName("v", avoid);
      return pRecv(x, u,
                   pSend(y, v,
                         pPar(etaGo(s, a->left, u, v, avoid, depth - 1),
                              etaGo(s, a->right, x, y, avoid, depth - 1))));
    }
    case TypeTag::Plus:
      return pCase(x, pInl(y, etaGo(s, a->left, x, y, avoid, depth - 1)),
                   pInr(y, etaGo(s, a->right, x, y, avoid, depth - 1)));
    case TypeTag::Bang: {
      Name u = mintName("u", avoid);
      Name v = mintName("v", avoid);
      return pServer(y, u, pUse(x, v, etaGo(s, a->body, v, u, avoid, depth - 1)));
    }
    case TypeTag::Exists:
      return pRecvType(x, a->var,
                       pSendType(y, tVar(a->var), etaGo(s, a->body, x, y, avoid, depth - 1)));
    // A link at a negative type is the mirror image of the link at its dual.
    case TypeTag::Bot:
    case TypeTag::Parr:
    case TypeTag::With:
    case TypeTag::Query:
    case TypeTag::Forall:
      return etaGo(s, dual(a), y, x, avoid, depth - 1);
    case TypeTag::Provide:
    case TypeTag::Assume:
      throw Error("forwarder expansion is not defined at abstraction types");
    case TypeTag::DefName:
      break;  // headNormal unfolds definitions; reaching this is a logic error
  }
  throw Error("forwarder expansion cannot handle this type: " + showType(a));
}

}  // namespace detail

// The protocol a link performs, spelled out: a process behaving like x<->y,
// with x playing the dual role, built by recursion on the type of y.
inline Proc etaExpandForwarder(const Sigma& sigma, const Type& a, const Name& x,
                               const Name& y) {
  NameSet avoid = {x, y};
  return detail::etaGo(sigma, a, x, y, avoid, 64);
}

// ---------------------------------------------------------------------------
// Compiling abstraction passing away.

struct Encoded {
  Proc proc;
  HyperEnv env;
};

namespace detail {

// The one-channel type of a parameter-keyed component: parameters are read
// in name order, giving a spelling that renamings cannot disturb.
inline Type encodeType(const Type& t);

inline Type packetTypeOf(const Env& comp) {
  Type a = tBot();
  for (auto it = comp.rbegin(); it != comp.rend(); ++it)
    a = tParr(encodeType(it->second), a);
  return a;
}

inline Type bundleTypeOf(const HyperEnv& g) {
  Type t = tOne();
  for (auto it = g.rbegin(); it != g.rend(); ++it) t = tTensor(packetTypeOf(*it), t);
  return t;
}

inline Type encodeType(const Type& t) {
  switch (t->tag) {
    case TypeTag::One:
    case TypeTag::Bot:
    case TypeTag::Var:
    case TypeTag::DefName:  // definitions are taken to be first-order
      return t;
    case TypeTag::Tensor:
      return tTensor(encodeType(t->left), encodeType(t->right));
    case TypeTag::Parr:
      return tParr(encodeType(t->left), encodeType(t->right));
    case TypeTag::Plus:
      return tPlus(encodeType(t->left), encodeType(t->right));
    case TypeTag::With:
      return tWith(encodeType(t->left), encodeType(t->right));
    case TypeTag::Bang:
      return tBang(encodeType(t->body));
    case TypeTag::Query:
      return tQuery(encodeType(t->body));
    case TypeTag::Exists:
      return tExists(t->var, encodeType(t->body));
    case TypeTag::Forall:
      return tForall(t->var, encodeType(t->body));
    case TypeTag::Provide:
      return bundleTypeOf(t->henv);
    case TypeTag::Assume:
      return dual(bundleTypeOf(t->henv));
  }
  throw Error("cannot encode this type: " + showType(t));
}

class Encoder {
 public:
  Encoder(const Sigma& sigma, const Derivation& root) : sigma_(sigma) {
    NameSet an = allNames(root.term);
    avoid_.insert(an.begin(), an.end());
    for (const auto& comp : root.env)
      for (const auto& [z, ty] : comp) avoid_.insert(z);
  }

  Encoded run(const Derivation& d) {
    for (const auto& [q, g] : d.theta) pchan_[q] = mintChannels(q, g.size());
    Proc proc = term(d);
    TypeMap m;
    for (const auto& comp : d.env)
      for (const auto& [z, ty] : comp) m[z] = encodeType(ty);
    for (const auto& [q, g] : d.theta)
      for (std::size_t i = 0; i < g.size(); ++i)
        m[pchan_.at(q)[i]] = dual(packetTypeOf(g[i]));
    Checker ch(sigma_);
    Derivation out = ch.infer({}, proc, m);
    return {proc, out.env};
  }

 private:
  // One stable channel per component of the variable's interface.
  std::vector<Name> mintChannels(const Name& pvar, std::size_t n) {
    std::string base;
    for (char c : pvar) base += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<Name> out;
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(mintName(base + "_" + std::to_string(i + 1), avoid_));
    return out;
  }

  Type subjectType(const Derivation& d, const Name& x) {
    for (const auto& comp : d.env) {
      auto it = comp.find(x);
      if (it != comp.end()) return it->second;
    }
    throw Error("'" + x + "' is not typed at this point of the derivation");
  }

  // Send `x`'s entries along the channel `c` in parameter order, then close.
  Proc unpackOn(const Name& c, const Env& comp, const Record& actual) {
    Proc u = pClose(c, pNil());
    for (auto it = comp.rbegin(); it != comp.rend(); ++it)
      u = pFreeSend(c, actual.at(it->first), u, fresh_);
    return u;
  }

  Proc idCase(const Derivation& d) {
    const Proc& p = d.term;
    const HyperEnv& g = d.theta.at(p->pvar);
    const std::vector<Name>& names = pchan_.at(p->pvar);
    std::vector<Proc> us;
    for (std::size_t i = 0; i < g.size(); ++i)
      us.push_back(unpackOn(names[i], g[i], p->record));
    return foldPar(us);
  }

  Proc assumeCase(const Derivation& d) {
    const Proc& p = d.term;
    Type head = sigma_.headNormal(subjectType(d, p->a));
    const HyperEnv& g = head->henv;
    pchan_[p->pvar] = mintChannels(p->pvar, g.size());
    Proc out = pWait(p->a, term(d.kids.at(0)));
    const std::vector<Name>& names = pchan_.at(p->pvar);
    for (std::size_t i = g.size(); i-- > 0;) out = pRecv(p->a, names[i], out);
    pchan_.erase(p->pvar);
    return out;
  }

  // Orders for a renamed interface: parameters in name order, transported to
  // the channels a record assigns them.
  static std::vector<std::vector<Name>> transportedOrders(const HyperEnv& g,
                                                          const Record& rho) {
    std::vector<std::vector<Name>> orders;
    for (const auto& comp : g) {
      std::vector<Name> o;
      for (const auto& [f, ty] : comp) o.push_back(rho.at(f));
      orders.push_back(std::move(o));
    }
    return orders;
  }

  Proc provideCase(const Derivation& d) {
    const Proc& p = d.term;
    Type head = sigma_.headNormal(subjectType(d, p->a));
    const HyperEnv& g = head->henv;
    Proc body = term(d.kids.at(0));
    std::vector<Proc> pieces = disPieces(body, "a sent abstraction");
    const HyperEnv& grho = d.kids.at(0).env;
    PieceAlignment al = alignPieces(pieces, grho);
    PackingContext ctx = packTensor(grho, transportedOrders(g, p->abs->rho), p->a);
    Proc packed = ctx.plugWith(al.aligned, foldPar(al.spare));
    Proc q = term(d.kids.at(1));
    return q->tag == ProcTag::Nil ? packed : pPar(packed, q);
  }

  Proc chopCase(const Derivation& d) {
    const Proc& p = d.term;
    const HyperEnv& h = *p->anno;
    Proc body = term(d.kids.at(0));
    std::vector<Proc> pieces = disPieces(body, "a definition body");
    const HyperEnv& hrho = d.kids.at(0).env;
    PieceAlignment al = alignPieces(pieces, hrho);
    std::vector<std::vector<Name>> orders = transportedOrders(h, p->abs->rho);
    std::string base;
    for (char c : p->pvar) base += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<Name> xs, ys;
    for (std::size_t i = 0; i < h.size(); ++i) {
      xs.push_back(mintName(base + "_x" + std::to_string(i + 1), avoid_));
      ys.push_back(mintName(base + "_y" + std::to_string(i + 1), avoid_));
    }
    pchan_[p->pvar] = ys;
    Proc q = term(d.kids.at(1));
    pchan_.erase(p->pvar);
    std::vector<Proc> all;
    for (std::size_t i = 0; i < h.size(); ++i)
      all.push_back(packParr(hrho[i], orders[i], xs[i]).plug({al.aligned[i]}));
    for (const Proc& s : al.spare) all.push_back(s);
    all.push_back(q);
    Proc out = foldPar(all);
    for (std::size_t i = h.size(); i-- > 0;)
      out = pCut(xs[i], packetTypeOf(h[i]), ys[i], out);
    return out;
  }

  Proc term(const Derivation& d) {
    const Proc& p = d.term;
    if (d.rule == "id") return idCase(d);
    if (d.rule == "assume") return assumeCase(d);
    if (d.rule == "provide") return provideCase(d);
    if (d.rule == "chop") return chopCase(d);
    if (d.rule == "mix0") return pNil();
    if (d.rule == "mix") return pPar(term(d.kids.at(0)), term(d.kids.at(1)));
    if (d.rule == "cut")
      return pCut(p->a, encodeType(p->type), p->b, term(d.kids.at(0)));
    if (d.rule == "tensor") return pSend(p->a, p->b, term(d.kids.at(0)));
    if (d.rule == "par") return pRecv(p->a, p->b, term(d.kids.at(0)));
    if (d.rule == "one") return pClose(p->a, term(d.kids.at(0)));
    if (d.rule == "bot") return pWait(p->a, term(d.kids.at(0)));
    if (d.rule == "plus-1") return pInl(p->a, term(d.kids.at(0)));
    if (d.rule == "plus-2") return pInr(p->a, term(d.kids.at(0)));
    if (d.rule == "with") return pCase(p->a, term(d.kids.at(0)), term(d.kids.at(1)));
    if (d.rule == "exists") return pSendType(p->a, encodeType(p->type), term(d.kids.at(0)));
    if (d.rule == "forall") return pRecvType(p->a, p->tyvar, term(d.kids.at(0)));
    if (d.rule == "bang") return pServer(p->a, p->b, term(d.kids.at(0)));
    if (d.rule == "query") return pUse(p->a, p->b, term(d.kids.at(0)));
    if (d.rule == "contract") return pDup(p->a, p->b, p->c, term(d.kids.at(0)));
    if (d.rule == "weaken") return pDisp(p->a, term(d.kids.at(0)));
    if (d.rule == "axiom") return pFwd(p->a, p->b);
    throw Error("unrecognised derivation rule: " + d.rule);
  }

  const Sigma& sigma_;
  NameSet avoid_;
  std::map<Name, std::vector<Name>> pchan_;
  FreshNames fresh_;
};

}  // namespace detail

// Translate a derivation into a first-order process: every abstraction an
// interface would carry becomes a bundle of plain sessions on one channel.
// Free process variables turn into free channels named after them, one per
// interface component; the returned environment types the result, including
// those extra channels.
inline Encoded encodeHO(const Sigma& sigma, const Derivation& d) {
  detail::Encoder enc(sigma, d);
  return enc.run(d);
}

}  // namespace hyperpill
