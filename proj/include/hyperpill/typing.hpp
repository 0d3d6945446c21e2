// Type checking of processes against hyperenvironments.
//
// The judgement is Theta |- P :: G, where G is a hyperenvironment (a list of
// disjoint environments, one per independent component of P) and Theta types
// the free process variables of P, each with the hyperenvironment its
// abstraction provides. Theta is linear: a derivation consumes exactly the
// variables that occur free.
//
// Checking is syntax directed. The types of free names flow top-down from
// the goal (each prefix head-normalises its subject's type against Sigma to
// expose the constructor), while the partition of names into components is
// synthesised bottom-up and compared with the goal at the root.
#ifndef HYPERPILL_TYPING_HPP
#define HYPERPILL_TYPING_HPP

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hyperpill/base.hpp"
#include "hyperpill/process.hpp"
#include "hyperpill/types.hpp"

namespace hyperpill {

// Process-variable context.
using Theta = std::map<Name, HyperEnv>;

inline std::string showTheta(const Theta& th) {
  if (th.empty()) return ".";
  std::ostringstream os;
  bool first = true;
  for (const auto& [p, g] : th) {
    if (!first) os << ", ";
    first = false;
    os << p << ":{" << showHyperEnv(g) << "}";
  }
  return os.str();
}

struct Derivation {
  std::string rule;
  Theta theta;
  Proc term;
  HyperEnv env;
  std::vector<Derivation> kids;
};

inline std::string showJudgement(const Derivation& d) {
  return showTheta(d.theta) + " |- " + showProc(d.term) + " :: " + showHyperEnv(d.env);
}

// Typing failures carry the offending subterm for context.
struct TypeCheckError : Error {
  TypeCheckError(const std::string& msg, const Proc& at)
      : Error(msg + "\n  in: " + showProc(at)) {}
};

namespace detail {

using TypeMap = std::map<Name, Type>;

inline Type lookupType(const TypeMap& m, const Name& x, const Proc& at) {
  auto it = m.find(x);
  if (it == m.end()) throw TypeCheckError("name '" + x + "' has no type here", at);
  return it->second;
}

// The component of `env` containing x, removed from `env` and returned.
inline Env takeComponent(HyperEnv& env, const Name& x, const Proc& at) {
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (env[i].count(x)) {
      Env e = std::move(env[i]);
      env.erase(env.begin() + static_cast<long>(i));
      return e;
    }
  }
  throw TypeCheckError("name '" + x + "' not in any component", at);
}

// For the single-component logical rules: the premise types either one
// component or the empty hyperenvironment (an empty Gamma).
inline Env soleComponent(const HyperEnv& env, const Proc& at) {
  if (env.empty()) return {};
  if (env.size() == 1) return env[0];
  throw TypeCheckError("prefix expects a single component, found " +
                           std::to_string(env.size()),
                       at);
}

// Split a record-renamed hyperenvironment: G with its field keys renamed by
// rho into channel names.
inline HyperEnv renameFields(const HyperEnv& g, const Record& rho, const Proc& at) {
  HyperEnv out;
  NameSet used;
  for (const auto& comp : g) {
    Env e;
    for (const auto& [f, ty] : comp) {
      auto it = rho.find(f);
      if (it == rho.end())
        throw TypeCheckError("abstraction is missing parameter '" + f + "'", at);
      if (!used.insert(it->second).second)
        throw TypeCheckError("record maps two parameters to '" + it->second + "'", at);
      e.emplace(it->second, ty);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline NameSet fieldNames(const HyperEnv& g) {
  NameSet out;
  for (const auto& comp : g)
    for (const auto& [f, ty] : comp) out.insert(f);
  return out;
}

class Checker {
 public:
  Checker(const Sigma& sigma) : sigma_(sigma) {}

  Derivation check(const Theta& theta, const Proc& p, const HyperEnv& goal) {
    // Free names and the goal's names must agree exactly: there is no
    // implicit weakening, dispensing is a process construct.
    TypeMap m;
    for (const auto& comp : goal)
      for (const auto& [x, ty] : comp) {
        require(!m.count(x), "name '" + x + "' occurs twice in the goal");
        m.emplace(x, ty);
      }
    NameSet fn = freeNames(p);
    for (const auto& x : fn)
      if (!m.count(x))
        throw TypeCheckError("free name '" + x + "' is not typed by the goal", p);
    for (const auto& [x, ty] : m)
      if (!fn.count(x))
        throw TypeCheckError("goal types '" + x + "' but it does not occur", p);

    Derivation d = infer(theta, p, m);
    if (!eqSigma(sigma_, d.env, goal))
      throw TypeCheckError("components do not match the goal: inferred " +
                               showHyperEnv(d.env) + " but expected " + showHyperEnv(goal),
                           p);
    return d;
  }

  // Bottom-up synthesis of the component structure, with name types given.
  Derivation infer(const Theta& theta, const Proc& p, const TypeMap& m) {
    switch (p->tag) {
      case ProcTag::Nil: {
        requireEmptyTheta(theta, p);
        return done("mix0", theta, p, {});
      }
      case ProcTag::Par: {
        NameSet fnL = freeNames(p->left), fnR = freeNames(p->right);
        for (const auto& x : fnL)
          if (fnR.count(x))
            throw TypeCheckError("'" + x + "' is shared across a parallel composition", p);
        auto [thL, thR] = splitTheta(theta, p->left, p->right, p);
        Derivation l = infer(thL, p->left, restrict(m, fnL));
        Derivation r = infer(thR, p->right, restrict(m, fnR));
        HyperEnv env = l.env;
        env.insert(env.end(), r.env.begin(), r.env.end());
        return done("mix", theta, p, std::move(env), {std::move(l), std::move(r)});
      }
      case ProcTag::Cut: {
        if (!p->type) throw TypeCheckError("restriction needs a type annotation", p);
        TypeMap inner = m;
        inner[p->a] = p->type;
        inner[p->b] = dual(p->type);
        NameSet fn = freeNames(p->left);
        if (!fn.count(p->a) || !fn.count(p->b))
          throw TypeCheckError("restriction binds a name that does not occur", p);
        Derivation k = infer(theta, p->left, restrict(inner, fn));
        HyperEnv env = k.env;
        Env cx = takeComponent(env, p->a, p);
        if (cx.count(p->b))
          throw TypeCheckError("cut endpoints '" + p->a + "' and '" + p->b +
                                   "' are in the same component",
                               p);
        Env cy = takeComponent(env, p->b, p);
        cx.erase(p->a);
        cy.erase(p->b);
        for (auto& [n, t] : cy) {
          require(!cx.count(n), "component merge clashes on " + n);
          cx.emplace(n, t);
        }
        if (!cx.empty()) env.push_back(std::move(cx));
        return done("cut", theta, p, std::move(env), {std::move(k)});
      }
      case ProcTag::Send: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Tensor)
          throw TypeCheckError("'" + p->a + "' must have a tensor type to send", p);
        TypeMap inner = m;
        inner.erase(p->a);
        inner[p->b] = t->left;
        inner[p->a] = t->right;
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        HyperEnv env = k.env;
        if (env.size() != 2)
          throw TypeCheckError("send expects exactly two components underneath, found " +
                                   std::to_string(env.size()),
                               p);
        Env cy = takeComponent(env, p->b, p);
        Env cx = takeComponent(env, p->a, p);
        cy.erase(p->b);
        cx.erase(p->a);
        for (auto& [n, ty] : cx) {
          require(!cy.count(n), "component merge clashes on " + n);
          cy.emplace(n, ty);
        }
        cy.emplace(p->a, lookupType(m, p->a, p));
        return done("tensor", theta, p, {std::move(cy)}, {std::move(k)});
      }
      case ProcTag::Recv: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Parr)
          throw TypeCheckError("'" + p->a + "' must have a par type to receive", p);
        TypeMap inner = m;
        inner.erase(p->a);
        inner[p->b] = t->left;
        inner[p->a] = t->right;
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->b, p);
        needs(c, p->a, p);
        c.erase(p->b);
        c.erase(p->a);
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("par", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Close: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::One)
          throw TypeCheckError("'" + p->a + "' must have type 1 to close", p);
        Derivation k = infer(theta, p->left, restrict(m, freeNames(p->left)));
        if (!k.env.empty())
          throw TypeCheckError("the continuation of a close must be independent", p);
        return done("one", theta, p, {{{p->a, lookupType(m, p->a, p)}}}, {std::move(k)});
      }
      case ProcTag::Wait: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Bot)
          throw TypeCheckError("'" + p->a + "' must have type bot to wait", p);
        TypeMap inner = m;
        inner.erase(p->a);
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        require(!c.count(p->a), "'" + p->a + "' reused after wait");
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("bot", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Inl:
      case ProcTag::Inr: {
        bool left = p->tag == ProcTag::Inl;
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Plus)
          throw TypeCheckError("'" + p->a + "' must have a plus type to select", p);
        TypeMap inner = m;
        inner[p->a] = left ? t->left : t->right;
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->a, p);
        c[p->a] = lookupType(m, p->a, p);
        return done(left ? "plus-1" : "plus-2", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Case: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::With)
          throw TypeCheckError("'" + p->a + "' must have a with type to branch", p);
        TypeMap ml = m, mr = m;
        ml[p->a] = t->left;
        mr[p->a] = t->right;
        Derivation l = infer(theta, p->left, restrict(ml, freeNames(p->left)));
        Derivation r = infer(theta, p->right, restrict(mr, freeNames(p->right)));
        Env cl = soleComponent(l.env, p);
        Env cr = soleComponent(r.env, p);
        needs(cl, p->a, p);
        needs(cr, p->a, p);
        Env gl = cl, gr = cr;
        gl.erase(p->a);
        gr.erase(p->a);
        if (!eqSigma(sigma_, gl, gr))
          throw TypeCheckError("the two branches type different environments", p);
        cl[p->a] = lookupType(m, p->a, p);
        return done("with", theta, p, {std::move(cl)}, {std::move(l), std::move(r)});
      }
      case ProcTag::SendType: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Exists)
          throw TypeCheckError("'" + p->a + "' must have an exists type", p);
        TypeMap inner = m;
        inner[p->a] = substTypeVar(t->body, t->var, p->type);
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->a, p);
        c[p->a] = lookupType(m, p->a, p);
        return done("exists", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::RecvType: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Forall)
          throw TypeCheckError("'" + p->a + "' must have a forall type", p);
        TypeMap inner = m;
        inner[p->a] = substTypeVar(t->body, t->var, tVar(p->tyvar));
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->a, p);
        // The bound variable must not escape into the rest of the component.
        for (const auto& [n, ty] : c) {
          if (n == p->a) continue;
          if (freeTypeVars(ty).count(p->tyvar))
            throw TypeCheckError("type variable '" + p->tyvar + "' escapes via '" + n + "'",
                                 p);
        }
        c[p->a] = lookupType(m, p->a, p);
        return done("forall", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Server: {
        requireEmptyTheta(theta, p);
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Bang)
          throw TypeCheckError("'" + p->a + "' must have a bang type to serve", p);
        TypeMap inner = m;
        inner.erase(p->a);
        inner[p->b] = t->body;
        Derivation k = infer({}, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->b, p);
        c.erase(p->b);
        for (const auto& [n, ty] : c)
          if (sigma_.headNormal(ty)->tag != TypeTag::Query)
            throw TypeCheckError("server environment must be all-query, but '" + n +
                                     "' is not",
                                 p);
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("bang", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Use: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Query)
          throw TypeCheckError("'" + p->a + "' must have a query type to call", p);
        TypeMap inner = m;
        inner.erase(p->a);
        inner[p->b] = t->body;
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->b, p);
        c.erase(p->b);
        require(!c.count(p->a), "'" + p->a + "' reused across a call");
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("query", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Dup: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Query)
          throw TypeCheckError("'" + p->a + "' must have a query type to duplicate", p);
        TypeMap inner = m;
        inner.erase(p->a);
        inner[p->b] = lookupType(m, p->a, p);
        inner[p->c] = lookupType(m, p->a, p);
        Derivation k = infer(theta, p->left, restrict(inner, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        needs(c, p->b, p);
        needs(c, p->c, p);
        c.erase(p->b);
        c.erase(p->c);
        require(!c.count(p->a), "'" + p->a + "' reused across a duplication");
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("contract", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Disp: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Query)
          throw TypeCheckError("'" + p->a + "' must have a query type to dispose", p);
        TypeMap inner = m;
        inner.erase(p->a);
        NameSet fn = freeNames(p->left);
        if (fn.count(p->a))
          throw TypeCheckError("'" + p->a + "' used after being disposed", p);
        Derivation k = infer(theta, p->left, restrict(inner, fn));
        Env c = soleComponent(k.env, p);
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("weaken", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Fwd: {
        requireEmptyTheta(theta, p);
        Type ta = lookupType(m, p->a, p);
        Type tb = lookupType(m, p->b, p);
        if (!eqSigma(sigma_, ta, dual(tb)))
          throw TypeCheckError("forwarder ends '" + p->a + "' and '" + p->b +
                                   "' are not dual: " + showType(ta) + " vs " + showType(tb),
                               p);
        return done("axiom", theta, p, {{{p->a, ta}, {p->b, tb}}});
      }
      case ProcTag::HoSend: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Provide)
          throw TypeCheckError("'" + p->a + "' must have a provide type", p);
        const HyperEnv& g = t->henv;
        checkAbstraction(*p->abs, g, p);
        HyperEnv grho = renameFields(g, p->abs->rho, p);
        Checker sub(sigma_);
        Derivation body = sub.check(theta, p->abs->body, grho);
        NameSet fnq = freeNames(p->left);
        if (!fnq.empty())
          throw TypeCheckError("the continuation of a provide must be independent", p);
        Derivation k = infer({}, p->left, {});
        if (!k.env.empty())
          throw TypeCheckError("the continuation of a provide must be independent", p);
        return done("provide", theta, p, {{{p->a, lookupType(m, p->a, p)}}},
                    {std::move(body), std::move(k)});
      }
      case ProcTag::HoRecv: {
        Type t = sigma_.headNormal(lookupType(m, p->a, p));
        if (t->tag != TypeTag::Assume)
          throw TypeCheckError("'" + p->a + "' must have an assume type", p);
        require(!theta.count(p->pvar),
                "process variable '" + p->pvar + "' shadows an existing one");
        Theta inner = theta;
        inner.emplace(p->pvar, t->henv);
        TypeMap im = m;
        im.erase(p->a);
        Derivation k = infer(inner, p->left, restrict(im, freeNames(p->left)));
        Env c = soleComponent(k.env, p);
        require(!c.count(p->a), "'" + p->a + "' reused after receiving an abstraction");
        c.emplace(p->a, lookupType(m, p->a, p));
        return done("assume", theta, p, {std::move(c)}, {std::move(k)});
      }
      case ProcTag::Invoke: {
        auto it = theta.find(p->pvar);
        if (it == theta.end())
          throw TypeCheckError("process variable '" + p->pvar + "' is not in scope", p);
        if (theta.size() != 1)
          throw TypeCheckError("unused process variables at an invocation", p);
        const HyperEnv& g = it->second;
        if (p->anno && !eqSigma(sigma_, *p->anno, g))
          throw TypeCheckError("invocation annotation disagrees with the context", p);
        NameSet fields = fieldNames(g);
        for (const auto& f : fields)
          if (!p->record.count(f))
            throw TypeCheckError("invocation is missing parameter '" + f + "'", p);
        for (const auto& [f, x] : p->record)
          if (!fields.count(f))
            throw TypeCheckError("invocation has extra parameter '" + f + "'", p);
        HyperEnv env = renameFields(g, p->record, p);
        // The carried environment is the only source of types here, so
        // reconcile it against the expected types of the renamed channels.
        for (const auto& comp : env)
          for (const auto& [x, ty] : comp)
            if (!eqSigma(sigma_, ty, lookupType(m, x, p)))
              throw TypeCheckError("invocation gives '" + x + "' type " +
                                       showType(ty) + ", expected " +
                                       showType(lookupType(m, x, p)),
                                   p);
        return done("id", theta, p, std::move(env));
      }
      case ProcTag::Chop: {
        if (!p->anno)
          throw TypeCheckError("a definition needs its hyperenvironment annotation", p);
        const HyperEnv& h = *p->anno;
        checkAbstraction(*p->abs, h, p);
        HyperEnv hrho = renameFields(h, p->abs->rho, p);
        // Split the context: the body consumes the variables it mentions.
        NameSet fpvBody = freeProcVars(p->abs->body);
        Theta thBody, thCont;
        for (const auto& [v, g] : theta)
          (fpvBody.count(v) ? thBody : thCont).emplace(v, g);
        Checker sub(sigma_);
        Derivation body = sub.check(thBody, p->abs->body, hrho);
        require(!thCont.count(p->pvar),
                "process variable '" + p->pvar + "' shadows an existing one");
        thCont.emplace(p->pvar, h);
        Derivation k = infer(thCont, p->left, m);
        HyperEnv env = k.env;
        return done("chop", theta, p, std::move(env), {std::move(body), std::move(k)});
      }
    }
    throw TypeCheckError("unhandled construct", p);
  }

 private:
  static Derivation done(std::string rule, const Theta& th, const Proc& p, HyperEnv env,
                         std::vector<Derivation> kids = {}) {
    return Derivation{std::move(rule), th, p, std::move(env), std::move(kids)};
  }

  static TypeMap restrict(const TypeMap& m, const NameSet& keep) {
    TypeMap out;
    for (const auto& [x, t] : m)
      if (keep.count(x)) out.emplace(x, t);
    return out;
  }

  static void needs(const Env& c, const Name& x, const Proc& at) {
    if (!c.count(x))
      throw TypeCheckError("'" + x + "' ended up outside its prefix's component", at);
  }

  static void requireEmptyTheta(const Theta& th, const Proc& at) {
    if (!th.empty())
      throw TypeCheckError("unused process variables: " + showTheta(th), at);
  }

  std::pair<Theta, Theta> splitTheta(const Theta& theta, const Proc& l, const Proc& r,
                                     const Proc& at) {
    NameSet fl = freeProcVars(l), fr = freeProcVars(r);
    Theta tl, tr;
    for (const auto& [v, g] : theta) {
      if (fl.count(v) && fr.count(v))
        throw TypeCheckError("process variable '" + v + "' is shared across a parallel", at);
      if (fl.count(v))
        tl.emplace(v, g);
      else if (fr.count(v))
        tr.emplace(v, g);
      else
        throw TypeCheckError("process variable '" + v + "' is never used", at);
    }
    return {std::move(tl), std::move(tr)};
  }

  void checkAbstraction(const Abstraction& abs, const HyperEnv& g, const Proc& at) {
    // The record must cover the fields of g exactly, and the abstraction
    // must be closed: its body's free names are exactly the record's image.
    NameSet fields = fieldNames(g);
    NameSet image;
    for (const auto& [f, x] : abs.rho) {
      if (!fields.count(f))
        throw TypeCheckError("abstraction parameter '" + f + "' is not in the interface", at);
      require(!image.count(x), "record maps two parameters to '" + x + "'");
      image.insert(x);
    }
    for (const auto& f : fields)
      if (!abs.rho.count(f))
        throw TypeCheckError("abstraction is missing parameter '" + f + "'", at);
    NameSet fn = freeNames(abs.body);
    for (const auto& x : image)
      if (!fn.count(x))
        throw TypeCheckError("abstraction parameter '" + x + "' is unused in the body", at);
    for (const auto& x : fn)
      if (!image.count(x))
        throw TypeCheckError("abstraction captures '" + x + "' which is not a parameter", at);
  }

  const Sigma& sigma_;
};

}  // namespace detail

// Check Theta |- P :: G and return the full derivation.
inline Derivation checkProc(const Sigma& sigma, const Theta& theta, const Proc& p,
                            const HyperEnv& goal) {
  detail::Checker c(sigma);
  return c.check(theta, p, goal);
}

inline Derivation checkProc(const Sigma& sigma, const Proc& p, const HyperEnv& goal) {
  return checkProc(sigma, {}, p, goal);
}

// Convenience predicate.
inline bool typechecks(const Sigma& sigma, const Proc& p, const HyperEnv& goal) {
  try {
    checkProc(sigma, p, goal);
    return true;
  } catch (const Error&) {
    return false;
  }
}

namespace detail {

// The multiplicative, single-environment fragment admits only these shapes:
// sends and restrictions splitting into a parallel pair, receives, waits,
// closes with no continuation, and the inert process.
inline void requireSplitShape(const Proc& p) {
  switch (p->tag) {
    case ProcTag::Nil:
      return;
    case ProcTag::Close:
      if (p->left->tag != ProcTag::Nil)
        throw TypeCheckError("a close may not have a continuation here", p);
      return;
    case ProcTag::Wait:
    case ProcTag::Recv:
      return requireSplitShape(p->left);
    case ProcTag::Send:
    case ProcTag::Cut: {
      if (p->left->tag != ProcTag::Par)
        throw TypeCheckError(std::string(p->tag == ProcTag::Cut ? "a restriction"
                                                                : "a send") +
                                 " must split into a parallel pair here",
                             p);
      requireSplitShape(p->left->left);
      requireSplitShape(p->left->right);
      return;
    }
    default:
      throw TypeCheckError(
          "only sends and restrictions over parallel pairs, receives, waits and "
          "bare closes are allowed here",
          p);
  }
}

}  // namespace detail

// Check a process against a single environment in the multiplicative
// fragment where every send and restriction carries its split explicitly.
inline Derivation typecheckMCP(const Sigma& sigma, const Proc& p, const Env& goal) {
  detail::requireSplitShape(p);
  HyperEnv hgoal;
  if (!goal.empty()) hgoal.push_back(goal);
  return checkProc(sigma, p, hgoal);
}

inline bool typechecksMCP(const Sigma& sigma, const Proc& p, const Env& goal) {
  try {
    typecheckMCP(sigma, p, goal);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace hyperpill

#endif  // HYPERPILL_TYPING_HPP
