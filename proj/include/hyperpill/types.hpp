// Session types: syntax, duality, substitution, recursive definitions and
// equirecursive (regular-tree) equality.
//
// Types are immutable trees behind shared_ptr. A type name T refers to a
// definition T := E in a definition set Sigma; equality is decided
// coinductively, unfolding names lazily only when the head constructors
// disagree, so 1 * ~T and 1 * (bot @ T) compare equal under T := 1 * ~T.
#ifndef HYPERPILL_TYPES_HPP
#define HYPERPILL_TYPES_HPP

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hyperpill/base.hpp"

namespace hyperpill {

struct TypeNode;
using Type = std::shared_ptr<const TypeNode>;

enum class TypeTag {
  One,      // 1
  Bot,      // bot
  Tensor,   // A * B   (output A, continue as B)
  Parr,     // A @ B   (input A, continue as B)
  Plus,     // A + B   (select)
  With,     // A & B   (offer)
  Var,      // X       (type variable; `dualised` distinguishes ~X)
  Exists,   // ex X. A
  Forall,   // all X. A
  Query,    // ?A      (client request)
  Bang,     // !A      (server accept)
  Provide,  // [| G |] (higher-order: provide a hyperenvironment)
  Assume,   // <| G |> (higher-order: assume a hyperenvironment)
  DefName,  // T       (name defined in Sigma; `dualised` marks ~T)
};

// Environments map channel names to types; hyperenvironments are multisets of
// environments. std::map keeps entries key-sorted, which doubles as the
// canonical printing order.
using Env = std::map<Name, Type>;
using HyperEnv = std::vector<Env>;

struct TypeNode {
  TypeTag tag{};
  Type left{}, right{};   // Tensor/Parr/Plus/With
  std::string var{};      // Var/DefName: the name; Exists/Forall: the binder
  bool dualised = false;  // Var/DefName: ~X / ~T
  Type body{};            // Exists/Forall/Query/Bang
  HyperEnv henv{};        // Provide/Assume
};

inline Type mkType(TypeNode n) { return std::make_shared<const TypeNode>(std::move(n)); }

inline Type tOne() { static Type t = mkType({TypeTag::One}); return t; }
inline Type tBot() { static Type t = mkType({TypeTag::Bot}); return t; }
inline Type tTensor(Type a, Type b) { return mkType({TypeTag::Tensor, std::move(a), std::move(b)}); }
inline Type tParr(Type a, Type b) { return mkType({TypeTag::Parr, std::move(a), std::move(b)}); }
inline Type tPlus(Type a, Type b) { return mkType({TypeTag::Plus, std::move(a), std::move(b)}); }
inline Type tWith(Type a, Type b) { return mkType({TypeTag::With, std::move(a), std::move(b)}); }
inline Type tVar(std::string x, bool dualised = false) {
  TypeNode n{TypeTag::Var};
  n.var = std::move(x);
  n.dualised = dualised;
  return mkType(std::move(n));
}
inline Type tDef(std::string t, bool dualised = false) {
  TypeNode n{TypeTag::DefName};
  n.var = std::move(t);
  n.dualised = dualised;
  return mkType(std::move(n));
}
inline Type tExists(std::string x, Type a) {
  TypeNode n{TypeTag::Exists};
  n.var = std::move(x);
  n.body = std::move(a);
  return mkType(std::move(n));
}
inline Type tForall(std::string x, Type a) {
  TypeNode n{TypeTag::Forall};
  n.var = std::move(x);
  n.body = std::move(a);
  return mkType(std::move(n));
}
inline Type tQuery(Type a) {
  TypeNode n{TypeTag::Query};
  n.body = std::move(a);
  return mkType(std::move(n));
}
inline Type tBang(Type a) {
  TypeNode n{TypeTag::Bang};
  n.body = std::move(a);
  return mkType(std::move(n));
}
inline Type tProvide(HyperEnv g) {
  TypeNode n{TypeTag::Provide};
  n.henv = std::move(g);
  return mkType(std::move(n));
}
inline Type tAssume(HyperEnv g) {
  TypeNode n{TypeTag::Assume};
  n.henv = std::move(g);
  return mkType(std::move(n));
}

// ---------------------------------------------------------------------------
// Duality. An involution: dual(dual(A)) == A structurally. The dual of a
// defined name T is the marked name ~T, whose definition unfolds to the dual
// of T's definition body.

inline HyperEnv dualHyperEnv(const HyperEnv& g);

inline Type dual(const Type& a) {
  switch (a->tag) {
    case TypeTag::One: return tBot();
    case TypeTag::Bot: return tOne();
    case TypeTag::Tensor: return tParr(dual(a->left), dual(a->right));
    case TypeTag::Parr: return tTensor(dual(a->left), dual(a->right));
    case TypeTag::Plus: return tWith(dual(a->left), dual(a->right));
    case TypeTag::With: return tPlus(dual(a->left), dual(a->right));
    case TypeTag::Var: return tVar(a->var, !a->dualised);
    case TypeTag::DefName: return tDef(a->var, !a->dualised);
    case TypeTag::Exists: return tForall(a->var, dual(a->body));
    case TypeTag::Forall: return tExists(a->var, dual(a->body));
    case TypeTag::Query: return tBang(dual(a->body));
    case TypeTag::Bang: return tQuery(dual(a->body));
    case TypeTag::Provide: return tAssume(a->henv);
    case TypeTag::Assume: return tProvide(a->henv);
  }
  throw Error("dual: unknown type tag");
}

// dual(<G>) = [G-dualwise]? No: provide/assume are dual to each other with the
// same hyperenvironment payload, so dualHyperEnv is only needed by callers
// that dualise entry-wise (e.g. tests).
inline HyperEnv dualHyperEnv(const HyperEnv& g) {
  HyperEnv out;
  for (const auto& env : g) {
    Env e;
    for (const auto& [x, t] : env) e.emplace(x, dual(t));
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Printing. Precedence (tightest first): prefixes (~ ! ?), *, @, +, &; all
// binary operators associate to the right; ex/all extend as far right as
// possible.

inline std::string showType(const Type& a);
inline std::string showHyperEnv(const HyperEnv& g);

namespace detail {

inline int typePrec(TypeTag t) {
  switch (t) {
    case TypeTag::With: return 1;
    case TypeTag::Plus: return 2;
    case TypeTag::Parr: return 3;
    case TypeTag::Tensor: return 4;
    case TypeTag::Exists:
    case TypeTag::Forall: return 0;
    default: return 5;
  }
}

inline void showTypeInto(const Type& a, int ctx, std::ostream& os) {
  int p = typePrec(a->tag);
  bool paren = p < ctx;
  if (paren) os << "(";
  switch (a->tag) {
    case TypeTag::One: os << "1"; break;
    case TypeTag::Bot: os << "bot"; break;
    case TypeTag::Tensor:
      showTypeInto(a->left, p + 1, os);
      os << " * ";
      showTypeInto(a->right, p, os);
      break;
    case TypeTag::Parr:
      showTypeInto(a->left, p + 1, os);
      os << " @ ";
      showTypeInto(a->right, p, os);
      break;
    case TypeTag::Plus:
      showTypeInto(a->left, p + 1, os);
      os << " + ";
      showTypeInto(a->right, p, os);
      break;
    case TypeTag::With:
      showTypeInto(a->left, p + 1, os);
      os << " & ";
      showTypeInto(a->right, p, os);
      break;
    case TypeTag::Var:
    case TypeTag::DefName:
      os << (a->dualised ? "~" : "") << a->var;
      break;
    case TypeTag::Exists:
      os << "ex " << a->var << ". ";
      showTypeInto(a->body, 0, os);
      break;
    case TypeTag::Forall:
      os << "all " << a->var << ". ";
      showTypeInto(a->body, 0, os);
      break;
    case TypeTag::Query:
      os << "?";
      showTypeInto(a->body, 5, os);
      break;
    case TypeTag::Bang:
      os << "!";
      showTypeInto(a->body, 5, os);
      break;
    case TypeTag::Provide:
      os << "[| " << showHyperEnv(a->henv) << " |]";
      break;
    case TypeTag::Assume:
      os << "<| " << showHyperEnv(a->henv) << " |>";
      break;
  }
  if (paren) os << ")";
}

}  // namespace detail

inline std::string showType(const Type& a) {
  std::ostringstream os;
  detail::showTypeInto(a, 0, os);
  return os.str();
}

inline std::string showEnv(const Env& e) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [x, t] : e) {
    if (!first) os << ", ";
    first = false;
    os << x << ":" << showType(t);
  }
  return os.str();
}

inline std::string showHyperEnv(const HyperEnv& g) {
  if (g.empty()) return "empty";
  std::ostringstream os;
  bool first = true;
  for (const auto& e : g) {
    if (!first) os << " | ";
    first = false;
    os << (e.empty() ? "()" : showEnv(e));
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural (syntactic) equality, used as a building block and by hashing.

inline bool typeEqual(const Type& a, const Type& b);

inline bool hyperEnvEqualSyntactic(const HyperEnv& g, const HyperEnv& h) {
  if (g.size() != h.size()) return false;
  std::vector<bool> used(h.size(), false);
  for (const auto& env : g) {
    bool found = false;
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (used[j]) continue;
      const auto& other = h[j];
      if (env.size() != other.size()) continue;
      bool same = true;
      auto it = env.begin();
      auto jt = other.begin();
      for (; it != env.end(); ++it, ++jt) {
        if (it->first != jt->first || !typeEqual(it->second, jt->second)) {
          same = false;
          break;
        }
      }
      if (same) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

inline bool typeEqual(const Type& a, const Type& b) {
  if (a.get() == b.get()) return true;
  if (a->tag != b->tag) return false;
  switch (a->tag) {
    case TypeTag::One:
    case TypeTag::Bot: return true;
    case TypeTag::Tensor:
    case TypeTag::Parr:
    case TypeTag::Plus:
    case TypeTag::With:
      return typeEqual(a->left, b->left) && typeEqual(a->right, b->right);
    case TypeTag::Var:
    case TypeTag::DefName:
      return a->var == b->var && a->dualised == b->dualised;
    case TypeTag::Exists:
    case TypeTag::Forall:
      // Alpha-sensitive on purpose here; Sigma-equality below renames.
      return a->var == b->var && typeEqual(a->body, b->body);
    case TypeTag::Query:
    case TypeTag::Bang:
      return typeEqual(a->body, b->body);
    case TypeTag::Provide:
    case TypeTag::Assume:
      return hyperEnvEqualSyntactic(a->henv, b->henv);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Free type variables and capture-avoiding substitution of types for type
// variables. Substituting into ~X applies duality to the replacement.

inline void freeTypeVarsInto(const Type& a, NameSet& out) {
  switch (a->tag) {
    case TypeTag::One:
    case TypeTag::Bot:
    case TypeTag::DefName:
      return;
    case TypeTag::Tensor:
    case TypeTag::Parr:
    case TypeTag::Plus:
    case TypeTag::With:
      freeTypeVarsInto(a->left, out);
      freeTypeVarsInto(a->right, out);
      return;
    case TypeTag::Var:
      out.insert(a->var);
      return;
    case TypeTag::Exists:
    case TypeTag::Forall: {
      NameSet inner;
      freeTypeVarsInto(a->body, inner);
      inner.erase(a->var);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case TypeTag::Query:
    case TypeTag::Bang:
      freeTypeVarsInto(a->body, out);
      return;
    case TypeTag::Provide:
    case TypeTag::Assume:
      for (const auto& env : a->henv)
        for (const auto& [x, t] : env) freeTypeVarsInto(t, out);
      return;
  }
}

inline NameSet freeTypeVars(const Type& a) {
  NameSet out;
  freeTypeVarsInto(a, out);
  return out;
}

inline NameSet freeTypeVars(const HyperEnv& g) {
  NameSet out;
  for (const auto& env : g)
    for (const auto& [x, t] : env) freeTypeVarsInto(t, out);
  return out;
}

// A { B / X }: replace type variable X by B (and ~X by ~B).
inline Type substTypeVar(const Type& a, const Name& x, const Type& b);

inline HyperEnv substTypeVar(const HyperEnv& g, const Name& x, const Type& b) {
  HyperEnv out;
  for (const auto& env : g) {
    Env e;
    for (const auto& [y, t] : env) e.emplace(y, substTypeVar(t, x, b));
    out.push_back(std::move(e));
  }
  return out;
}

inline Type substTypeVar(const Type& a, const Name& x, const Type& b) {
  switch (a->tag) {
    case TypeTag::One:
    case TypeTag::Bot:
    case TypeTag::DefName:
      return a;
    case TypeTag::Tensor: return tTensor(substTypeVar(a->left, x, b), substTypeVar(a->right, x, b));
    case TypeTag::Parr: return tParr(substTypeVar(a->left, x, b), substTypeVar(a->right, x, b));
    case TypeTag::Plus: return tPlus(substTypeVar(a->left, x, b), substTypeVar(a->right, x, b));
    case TypeTag::With: return tWith(substTypeVar(a->left, x, b), substTypeVar(a->right, x, b));
    case TypeTag::Var:
      if (a->var != x) return a;
      return a->dualised ? dual(b) : b;
    case TypeTag::Exists:
    case TypeTag::Forall: {
      if (a->var == x) return a;
      NameSet fvb = freeTypeVars(b);
      Name binder = a->var;
      Type body = a->body;
      if (fvb.count(binder)) {
        // Rename the binder away from b's free variables.
        Name renamed = binder;
        int i = 0;
        NameSet avoid = fvb;
        freeTypeVarsInto(body, avoid);
        do {
          renamed = binder + "#" + std::to_string(++i);
        } while (avoid.count(renamed));
        body = substTypeVar(body, binder, tVar(renamed));
        binder = renamed;
      }
      Type nb = substTypeVar(body, x, b);
      return a->tag == TypeTag::Exists ? tExists(binder, nb) : tForall(binder, nb);
    }
    case TypeTag::Query: return tQuery(substTypeVar(a->body, x, b));
    case TypeTag::Bang: return tBang(substTypeVar(a->body, x, b));
    case TypeTag::Provide: return tProvide(substTypeVar(a->henv, x, b));
    case TypeTag::Assume: return tAssume(substTypeVar(a->henv, x, b));
  }
  throw Error("substTypeVar: unknown tag");
}

// ---------------------------------------------------------------------------
// Definition sets Sigma. Definitions must be contractive: unfolding a name
// must reach a constructor before reaching a bare (possibly dualised) name,
// so T := T or T := ~U, U := T are rejected.

class Sigma {
 public:
  void define(const Name& t, Type body) {
    require(!defs_.count(t), "duplicate type definition: " + t);
    defs_.emplace(t, std::move(body));
  }

  bool defined(const Name& t) const { return defs_.count(t) != 0; }

  // The definition body of T, or of ~T with duality pushed in.
  Type unfold(const Name& t, bool dualised) const {
    auto it = defs_.find(t);
    require(it != defs_.end(), "undefined type name: " + t);
    return dualised ? dual(it->second) : it->second;
  }

  // One-step head normalisation: unfold DefName heads until a constructor
  // appears. Contractivity (checked by validate) guarantees termination.
  Type headNormal(Type a) const {
    int guard = 0;
    while (a->tag == TypeTag::DefName) {
      a = unfold(a->var, a->dualised);
      require(++guard <= 1 + static_cast<int>(defs_.size()) * 2,
              "non-contractive definition involving " + a->var);
    }
    return a;
  }

  // Rejects non-contractive definition sets.
  void validate() const {
    for (const auto& [name, body] : defs_) {
      Type a = tDef(name);
      NameSet seen;
      Type cur = a;
      while (cur->tag == TypeTag::DefName) {
        Name key = (cur->dualised ? "~" : "") + cur->var;
        require(!seen.count(key), "non-contractive type definition: " + name);
        seen.insert(key);
        cur = unfold(cur->var, cur->dualised);
      }
    }
  }

  const std::map<Name, Type>& defs() const { return defs_; }

 private:
  std::map<Name, Type> defs_;
};

// ---------------------------------------------------------------------------
// Equirecursive equality A =_Sigma B: the standard coinductive check over the
// regular trees denoted by the types. Pairs currently being compared are
// assumed equal; names are unfolded lazily only at constructor mismatch.
//
// Quantifiers are compared up to renaming of the bound variable. Because
// definition bodies are closed apart from names, regularity is preserved.

namespace detail {

struct TypeKey {
  std::string repr;
  bool operator<(const TypeKey& o) const { return repr < o.repr; }
};

inline TypeKey keyOf(const Type& a) { return TypeKey{showType(a)}; }

inline bool eqSigmaRec(const Sigma& sigma, Type a, Type b,
                       std::set<std::pair<TypeKey, TypeKey>>& assumed,
                       int depthBudget);

inline bool eqSigmaEnv(const Sigma& sigma, const HyperEnv& g, const HyperEnv& h,
                       std::set<std::pair<TypeKey, TypeKey>>& assumed,
                       int depthBudget) {
  if (g.size() != h.size()) return false;
  std::vector<bool> used(h.size(), false);
  for (const auto& env : g) {
    bool found = false;
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (used[j]) continue;
      const auto& other = h[j];
      if (env.size() != other.size()) continue;
      bool same = true;
      auto it = env.begin();
      auto jt = other.begin();
      for (; it != env.end(); ++it, ++jt) {
        if (it->first != jt->first ||
            !eqSigmaRec(sigma, it->second, jt->second, assumed, depthBudget)) {
          same = false;
          break;
        }
      }
      if (same) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

inline bool eqSigmaRec(const Sigma& sigma, Type a, Type b,
                       std::set<std::pair<TypeKey, TypeKey>>& assumed,
                       int depthBudget) {
  require(depthBudget > 0, "type equality: depth budget exhausted");
  if (typeEqual(a, b)) return true;
  auto key = std::make_pair(keyOf(a), keyOf(b));
  if (assumed.count(key)) return true;
  assumed.insert(key);

  Type ha = sigma.headNormal(a);
  Type hb = sigma.headNormal(b);
  if (ha->tag != hb->tag) return false;
  switch (ha->tag) {
    case TypeTag::One:
    case TypeTag::Bot:
      return true;
    case TypeTag::Tensor:
    case TypeTag::Parr:
    case TypeTag::Plus:
    case TypeTag::With:
      return eqSigmaRec(sigma, ha->left, hb->left, assumed, depthBudget - 1) &&
             eqSigmaRec(sigma, ha->right, hb->right, assumed, depthBudget - 1);
    case TypeTag::Var:
      return ha->var == hb->var && ha->dualised == hb->dualised;
    case TypeTag::DefName:
      throw Error("headNormal left a definition name");
    case TypeTag::Exists:
    case TypeTag::Forall: {
      if (ha->var == hb->var)
        return eqSigmaRec(sigma, ha->body, hb->body, assumed, depthBudget - 1);
      // Rename b's binder to a's.
      NameSet avoid = freeTypeVars(hb->body);
      if (avoid.count(ha->var)) return false;
      Type renamed = substTypeVar(hb->body, hb->var, tVar(ha->var));
      return eqSigmaRec(sigma, ha->body, renamed, assumed, depthBudget - 1);
    }
    case TypeTag::Query:
    case TypeTag::Bang:
      return eqSigmaRec(sigma, ha->body, hb->body, assumed, depthBudget - 1);
    case TypeTag::Provide:
    case TypeTag::Assume:
      return eqSigmaEnv(sigma, ha->henv, hb->henv, assumed, depthBudget - 1);
  }
  return false;
}

}  // namespace detail

inline bool eqSigma(const Sigma& sigma, const Type& a, const Type& b) {
  std::set<std::pair<detail::TypeKey, detail::TypeKey>> assumed;
  return detail::eqSigmaRec(sigma, a, b, assumed, 10000);
}

inline bool eqSigma(const Sigma& sigma, const HyperEnv& g, const HyperEnv& h) {
  std::set<std::pair<detail::TypeKey, detail::TypeKey>> assumed;
  return detail::eqSigmaEnv(sigma, g, h, assumed, 10000);
}

inline bool eqSigma(const Sigma& sigma, const Env& g, const Env& h) {
  return eqSigma(sigma, HyperEnv{g}, HyperEnv{h});
}

// ---------------------------------------------------------------------------
// Environment helpers shared by the checker and the environment transition
// system.

inline NameSet envDomain(const Env& e) {
  NameSet out;
  for (const auto& [x, t] : e) out.insert(x);
  return out;
}

inline NameSet hyperEnvDomain(const HyperEnv& g) {
  NameSet out;
  for (const auto& env : g)
    for (const auto& [x, t] : env) out.insert(x);
  return out;
}

// Flatten a hyperenvironment into one name->type map; names must be distinct
// across components (an invariant of well-formed judgements).
inline Env flattenHyperEnv(const HyperEnv& g) {
  Env out;
  for (const auto& env : g)
    for (const auto& [x, t] : env)
      require(out.emplace(x, t).second, "name occurs twice in hyperenvironment: " + x);
  return out;
}

}  // namespace hyperpill

#endif  // HYPERPILL_TYPES_HPP
