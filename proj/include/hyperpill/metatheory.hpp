// Random well-typed derivations, and executable checks of the laws that make
// the calculus a model of independent parallel components: the diamond
// property, serialisation of simultaneous pairs, non-interference, and
// readiness. The generator is goal-directed — it picks a rule shape and
// synthesises premises to order — and every output is re-derived through the
// checker, so a generator bug can only ever surface as an honest type error.
#ifndef HYPERPILL_METATHEORY_HPP
#define HYPERPILL_METATHEORY_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hyperpill/deriv_lts.hpp"
#include "hyperpill/equivalence.hpp"
#include "hyperpill/typing.hpp"

namespace hyperpill {

// ---------------------------------------------------------------------------
// Generator configuration.

enum class Fragment { MLL, PiLL, HOPiLL };

inline std::string showFragment(Fragment f) {
  switch (f) {
    case Fragment::MLL: return "mll";
    case Fragment::PiLL: return "pill";
    case Fragment::HOPiLL: return "hopill";
  }
  return "?";
}

inline std::optional<Fragment> parseFragment(const std::string& s) {
  if (s == "mll") return Fragment::MLL;
  if (s == "pill") return Fragment::PiLL;
  if (s == "hopill") return Fragment::HOPiLL;
  return std::nullopt;
}

struct GenConfig {
  std::uint64_t seed = 0;
  int maxDepth = 6;  // bound on the derivation tree's depth
  // Relative frequency of each type connective; missing entries use defaults.
  // Keys: one bot tensor parr plus with bang query exists forall.
  std::map<std::string, double> connectiveWeights;
  Fragment fragment = Fragment::MLL;
  bool allowSigma = false;  // permit recursively defined types
};

namespace detail {

inline int derivDepth(const Derivation& d) {
  int best = 0;
  for (const auto& k : d.kids) best = std::max(best, derivDepth(k));
  return best + 1;
}

inline bool hasExponential(const Type& a) {
  if (!a) return false;
  switch (a->tag) {
    case TypeTag::Bang:
    case TypeTag::Query:
      return true;
    case TypeTag::Tensor:
    case TypeTag::Parr:
    case TypeTag::Plus:
    case TypeTag::With:
      return hasExponential(a->left) || hasExponential(a->right);
    case TypeTag::Exists:
    case TypeTag::Forall:
      return hasExponential(a->body);
    default:
      return false;
  }
}

// Goal-directed construction. A "piece" is a term typed by exactly one
// prescribed component; pieces are composed in a pool by prefixing, merging
// sends and restrictions, and finally mixed into the conclusion.
class Gen {
 public:
  explicit Gen(const GenConfig& cfg)
      : cfg_(cfg), typeFrag_(cfg.fragment), rng_(cfg.seed) {
    static const std::map<std::string, double> defaults = {
        {"one", 1.0},  {"bot", 1.0},   {"tensor", 1.0}, {"parr", 1.0},
        {"plus", 0.7}, {"with", 0.5},  {"bang", 0.25},  {"query", 0.35},
        {"exists", 0.4}, {"forall", 0.3}};
    weights_ = defaults;
    for (const auto& [k, v] : cfg.connectiveWeights) {
      if (!defaults.count(k))
        throw Error("unknown connective weight '" + k + "'");
      if (v < 0) throw Error("connective weight '" + k + "' is negative");
      weights_[k] = v;
    }
    if (weights_["one"] + weights_["bot"] <= 0)
      throw Error("the unit connectives need at least one positive weight");
    if (weights_["tensor"] + weights_["parr"] <= 0)
      throw Error("the binary connectives need at least one positive weight");
    if (cfg.allowSigma) {
      // A recursive session type the generator can sprinkle in: a stream
      // that either stops or emits a unit and repeats. The stop branch is
      // what lets goal-directed construction bottom out.
      sigma_.define("Rep", tPlus(tOne(), tTensor(tOne(), tDef("Rep"))));
    }
  }

  const Sigma& sigma() const { return sigma_; }

  Derivation run() {
    // Retries narrow the ambition (smaller types, fewer pieces) before
    // giving up for good.
    for (int attempt = 0; attempt < 60; ++attempt) {
      int narrow = attempt / 12;
      if (auto d = attemptOnce(narrow)) return *d;
    }
    throw Error("derivation generation failed at depth " +
                std::to_string(cfg_.maxDepth) + " (seed " +
                std::to_string(cfg_.seed) + "): every attempt was rejected");
  }

  // A term whose sole component is exactly `need`; throws when the prescribed
  // component admits no derivation within the effort bound.
  Proc pieceFor(const Env& need) {
    for (int attempt = 0; attempt < 24; ++attempt) {
      int fuel = 48;
      if (auto t = usePiece(need, fuel)) return *t;
    }
    throw Error("no piece found for the component " + showHyperEnv({need}));
  }

  Type randomType(int size) { return genType(size); }

 private:
  struct Elem {
    Proc term;
    HyperEnv env;
  };

  const GenConfig cfg_;
  Fragment typeFrag_;  // fragment the type generator draws from right now
  Sigma sigma_;
  std::mt19937_64 rng_;
  std::map<std::string, double> weights_;
  FreshNames names_;
  int tyvars_ = 0;
  std::vector<Elem> pool_;
  std::vector<std::tuple<Name, Type, Name>> pairs_;  // x:A vs y:~A, cuttable
  Theta theta_;

  // --- dice ---------------------------------------------------------------

  std::size_t below(std::size_t n) {
    return n <= 1 ? 0 : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool coin(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }
  std::size_t pickWeighted(const std::vector<double>& ws) {
    double total = 0;
    for (double w : ws) total += w;
    if (total <= 0) return below(ws.size());
    double at = std::uniform_real_distribution<double>(0.0, total)(rng_);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      at -= ws[i];
      if (at <= 0) return i;
    }
    return ws.size() - 1;
  }

  Name freshChan(const char* stem) { return names_.fresh(stem); }
  Name freshTyVar() { return "X" + std::to_string(++tyvars_); }

  // --- types --------------------------------------------------------------

  Type genType(int size) {
    std::vector<std::string> ks = {"one", "bot"};
    if (size > 1) {
      ks.push_back("tensor");
      ks.push_back("parr");
      if (typeFrag_ != Fragment::MLL) {
        ks.insert(ks.end(), {"plus", "with", "bang", "query", "exists", "forall"});
      }
    }
    std::vector<double> ws;
    for (const auto& k : ks) ws.push_back(weights_.at(k));
    const std::string& k = ks[pickWeighted(ws)];
    if (k == "one") return tOne();
    if (k == "bot") return tBot();
    if (cfg_.allowSigma && typeFrag_ != Fragment::MLL && size > 1 &&
        coin(0.15))
      return coin(0.5) ? tDef("Rep") : dual(tDef("Rep"));
    int lsize = 1 + static_cast<int>(below(static_cast<std::size_t>(size - 1)));
    int rsize = size - lsize;
    if (k == "tensor") return tTensor(genType(lsize), genType(rsize));
    if (k == "parr") return tParr(genType(lsize), genType(rsize));
    if (k == "plus") return tPlus(genType(lsize), genType(rsize));
    if (k == "with") return tWith(genType(lsize), genType(rsize));
    if (k == "bang") return tBang(genType(size - 1));
    if (k == "query") return tQuery(genType(size - 1));
    Name x = freshTyVar();
    Type body = coin(0.5) ? tVar(x) : genType(size - 1);
    return k == "exists" ? tExists(x, body) : tForall(x, body);
  }

  // --- the piece builder --------------------------------------------------

  // A term using every name of `need` at its type, typed by exactly that one
  // component. Returns nothing when the effort bound runs out or the
  // component is a dead end (e.g. two closes and nothing to interleave them).
  std::optional<Proc> usePiece(const Env& need, int& fuel) {
    if (--fuel <= 0) return std::nullopt;
    if (need.empty()) return pNil();

    struct Move {
      Name x;
      Type head;
    };
    std::vector<Move> moves;
    for (const auto& [x, t] : need) moves.push_back({x, sigma_.headNormal(t)});

    // An axiom link closes a two-name component with dual types outright.
    if (cfg_.fragment != Fragment::MLL && need.size() == 2) {
      auto it = need.begin();
      auto jt = std::next(it);
      if (eqSigma(sigma_, it->second, dual(jt->second)) && coin(0.5))
        return pFwd(it->first, jt->first);
    }

    // Try the names in random order until one of their head rules pans out.
    std::shuffle(moves.begin(), moves.end(), rng_);
    for (const Move& mv : moves) {
      auto got = useName(need, mv.x, mv.head, fuel);
      if (got) return got;
      if (fuel <= 0) return std::nullopt;
    }
    return std::nullopt;
  }

  std::optional<Proc> useName(const Env& need, const Name& x, const Type& h,
                              int& fuel) {
    Env rest = need;
    rest.erase(x);
    switch (h->tag) {
      case TypeTag::One: {
        if (!rest.empty()) return std::nullopt;  // a close ends the component
        return pClose(x, pNil());
      }
      case TypeTag::Bot: {
        auto k = usePiece(rest, fuel);
        if (!k) return std::nullopt;
        return pWait(x, *k);
      }
      case TypeTag::Tensor: {
        Name w = freshChan("w");
        // Split the remaining names across the two sides of the send.
        Env ls, rs;
        for (const auto& [n, t] : rest) (coin(0.5) ? ls : rs).emplace(n, t);
        ls.emplace(w, h->left);
        Env rx = rs;
        rx.emplace(x, h->right);
        auto lt = usePiece(ls, fuel);
        if (!lt) return std::nullopt;
        auto rt = usePiece(rx, fuel);
        if (!rt) return std::nullopt;
        return pSend(x, w, pPar(*lt, *rt));
      }
      case TypeTag::Parr: {
        Name w = freshChan("w");
        Env inner = rest;
        inner.emplace(w, h->left);
        inner.emplace(x, h->right);
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return pRecv(x, w, *k);
      }
      case TypeTag::Plus: {
        bool left = coin(0.5);
        Env inner = rest;
        inner.emplace(x, left ? h->left : h->right);
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return left ? pInl(x, *k) : pInr(x, *k);
      }
      case TypeTag::With: {
        Env li = rest, ri = rest;
        li.emplace(x, h->left);
        ri.emplace(x, h->right);
        auto lb = usePiece(li, fuel);
        if (!lb) return std::nullopt;
        auto rb = usePiece(ri, fuel);
        if (!rb) return std::nullopt;
        return pCase(x, *lb, *rb);
      }
      case TypeTag::Query: {
        // One call, a duplication, or a disposal.
        double roll = std::uniform_real_distribution<double>(0, 1)(rng_);
        if (roll < 0.15) {
          auto k = usePiece(rest, fuel);
          if (!k) return std::nullopt;
          return pDisp(x, *k);
        }
        if (roll < 0.3 && fuel > 8) {
          Name y = freshChan("y"), z = freshChan("z");
          Env inner = rest;
          inner.emplace(y, need.at(x));
          inner.emplace(z, need.at(x));
          auto k = usePiece(inner, fuel);
          if (!k) return std::nullopt;
          return pDup(x, y, z, *k);
        }
        Name y = freshChan("y");
        Env inner = rest;
        inner.emplace(y, h->body);
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return pUse(x, y, *k);
      }
      case TypeTag::Bang: {
        // A server needs every companion to be a client.
        for (const auto& [n, t] : rest)
          if (sigma_.headNormal(t)->tag != TypeTag::Query) return std::nullopt;
        Name y = freshChan("y");
        Env inner = rest;
        inner.emplace(y, h->body);
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return pServer(x, y, *k);
      }
      case TypeTag::Exists: {
        Type witness = h->body->tag == TypeTag::Var ? genType(1) : tOne();
        Env inner = rest;
        inner.emplace(x, substTypeVar(h->body, h->var, witness));
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return pSendType(x, witness, *k);
      }
      case TypeTag::Forall: {
        // Only bodies that do not leak the bound variable into the rest of
        // the component are generated, so no escape handling is needed.
        Env inner = rest;
        inner.emplace(x, h->body);
        auto k = usePiece(inner, fuel);
        if (!k) return std::nullopt;
        return pRecvType(x, h->var, *k);
      }
      default:
        // Bare variables are only closed by axiom links (handled a level
        // up); abstraction types never reach the piece builder.
        return std::nullopt;
    }
  }

  // --- pool seeds and composition ----------------------------------------

  bool seedPair(int tsize) {
    Type a = genType(tsize);
    Name x = freshChan("a"), y = freshChan("b");
    Proc tl, tr;
    try {
      tl = pieceFor({{x, a}});
      tr = pieceFor({{y, dual(a)}});
    } catch (const Error&) {
      return false;
    }
    pool_.push_back({tl, {{{x, a}}}});
    pool_.push_back({tr, {{{y, dual(a)}}}});
    if (!hasExponential(a) && !containsDef(a)) pairs_.emplace_back(x, a, y);
    return true;
  }

  bool seedLone(int tsize) {
    Type a = genType(tsize);
    Name x = freshChan("c");
    try {
      pool_.push_back({pieceFor({{x, a}}), {{{x, a}}}});
    } catch (const Error&) {
      return false;
    }
    return true;
  }

  static bool containsDef(const Type& a) {
    if (!a) return false;
    switch (a->tag) {
      case TypeTag::DefName: return true;
      case TypeTag::Tensor:
      case TypeTag::Parr:
      case TypeTag::Plus:
      case TypeTag::With:
        return containsDef(a->left) || containsDef(a->right);
      case TypeTag::Bang:
      case TypeTag::Query:
      case TypeTag::Exists:
      case TypeTag::Forall:
        return containsDef(a->body);
      default: return false;
    }
  }

  // A one-component interface for the higher-order seeds.
  HyperEnv genInterface() {
    Env comp;
    std::size_t n = 1 + below(2);
    for (std::size_t i = 0; i < n; ++i)
      comp.emplace("f" + std::to_string(i + 1), genTypeMLL(2));
    return {comp};
  }

  Type genTypeMLL(int size) {
    Fragment saved = typeFrag_;
    typeFrag_ = Fragment::MLL;
    Type t = genType(size);
    typeFrag_ = saved;
    return t;
  }

  Record transport(const HyperEnv& g, Env& out) {
    Record rho;
    for (const auto& comp : g)
      for (const auto& [f, t] : comp) {
        Name c = freshChan("m");
        rho.emplace(f, c);
        out.emplace(c, t);
      }
    return rho;
  }

  bool seedProvideAssume() {
    HyperEnv g = genInterface();
    Name u = freshChan("u"), v = freshChan("v");
    Env bodyComp;
    Record rho = transport(g, bodyComp);
    Proc body;
    try {
      body = pieceFor(bodyComp);
    } catch (const Error&) {
      return false;
    }
    pool_.push_back({pHoSend(u, Abstraction{rho, body}, pNil()), {{{u, tProvide(g)}}}});
    Env contComp;
    Record rho2 = transport(g, contComp);
    Name pv = names_.fresh("Q");
    Env conc = contComp;
    conc.emplace(v, tAssume(g));
    pool_.push_back({pHoRecv(v, pv, pInvoke(pv, rho2)), {conc}});
    pairs_.emplace_back(u, tProvide(g), v);
    return true;
  }

  bool seedChop() {
    HyperEnv g = genInterface();
    Env bodyComp;
    Record rho = transport(g, bodyComp);
    Proc body;
    try {
      body = pieceFor(bodyComp);
    } catch (const Error&) {
      return false;
    }
    Env contComp;
    Record rho2 = transport(g, contComp);
    Name pv = names_.fresh("P");
    pool_.push_back(
        {pChop(pv, Abstraction{rho, body}, pInvoke(pv, rho2), g), {contComp}});
    return true;
  }

  bool seedFreeInvoke() {
    HyperEnv g = genInterface();
    Env comp;
    Record rho = transport(g, comp);
    Name pv = names_.fresh("R");
    theta_.emplace(pv, g);
    pool_.push_back({pInvoke(pv, rho), {comp}});
    return true;
  }

  // Bind a marked dual pair whose sides live in different pool entries.
  bool opCut() {
    std::vector<std::size_t> order(pairs_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t pi : order) {
      const auto& [x, a, y] = pairs_[pi];
      std::optional<std::size_t> ei, ej;
      for (std::size_t k = 0; k < pool_.size(); ++k)
        for (const auto& comp : pool_[k].env) {
          if (comp.count(x)) ei = k;
          if (comp.count(y)) ej = k;
        }
      if (!ei || !ej || *ei == *ej) continue;
      Env cx, cy;
      HyperEnv restX, restY;
      for (const auto& comp : pool_[*ei].env)
        if (comp.count(x)) cx = comp; else restX.push_back(comp);
      for (const auto& comp : pool_[*ej].env)
        if (comp.count(y)) cy = comp; else restY.push_back(comp);
      if (cx.size() + cy.size() <= 2) continue;  // would leave an empty component
      Env merged = cx;
      merged.erase(x);
      for (const auto& [n, t] : cy)
        if (n != y) merged.emplace(n, t);
      Elem ne;
      ne.term = pCut(x, a, y, pPar(pool_[*ei].term, pool_[*ej].term));
      ne.env = restX;
      ne.env.insert(ne.env.end(), restY.begin(), restY.end());
      ne.env.push_back(std::move(merged));
      std::size_t lo = std::min(*ei, *ej), hi = std::max(*ei, *ej);
      pool_.erase(pool_.begin() + hi);
      pool_.erase(pool_.begin() + lo);
      pool_.push_back(std::move(ne));
      pairs_.erase(pairs_.begin() + pi);
      return true;
    }
    return false;
  }

  bool opWait() {
    std::vector<std::size_t> singles = singleCompElems();
    if (singles.empty()) return false;
    std::size_t k = singles[below(singles.size())];
    Name x = freshChan("d");
    Env comp = pool_[k].env[0];
    comp.emplace(x, tBot());
    pool_[k] = {pWait(x, pool_[k].term), {comp}};
    return true;
  }

  bool opRecv() {
    std::vector<std::size_t> cands;
    for (std::size_t k = 0; k < pool_.size(); ++k)
      if (pool_[k].env.size() == 1 && pool_[k].env[0].size() >= 2)
        cands.push_back(k);
    if (cands.empty()) return false;
    std::size_t k = cands[below(cands.size())];
    Env comp = pool_[k].env[0];
    std::vector<Name> ns;
    for (const auto& [n, t] : comp) ns.push_back(n);
    std::shuffle(ns.begin(), ns.end(), rng_);
    Name w = ns[0], x = ns[1];
    Type tw = comp.at(w), tx = comp.at(x);
    comp.erase(w);
    comp.erase(x);
    comp.emplace(x, tParr(tw, tx));
    dropPairsMentioning({w, x});
    pool_[k] = {pRecv(x, w, pool_[k].term), {comp}};
    return true;
  }

  bool opSend() {
    std::vector<std::size_t> singles = singleCompElems();
    if (singles.size() < 2) return false;
    std::shuffle(singles.begin(), singles.end(), rng_);
    std::size_t i = singles[0], j = singles[1];
    const Env& ci = pool_[i].env[0];
    const Env& cj = pool_[j].env[0];
    Name w = nthKey(ci, below(ci.size()));
    Name x = nthKey(cj, below(cj.size()));
    Env merged;
    for (const auto& [n, t] : ci)
      if (n != w) merged.emplace(n, t);
    for (const auto& [n, t] : cj)
      if (n != x) merged.emplace(n, t);
    merged.emplace(x, tTensor(ci.at(w), cj.at(x)));
    dropPairsMentioning({w, x});
    Elem ne{pSend(x, w, pPar(pool_[i].term, pool_[j].term)), {merged}};
    std::size_t lo = std::min(i, j), hi = std::max(i, j);
    pool_.erase(pool_.begin() + hi);
    pool_.erase(pool_.begin() + lo);
    pool_.push_back(std::move(ne));
    return true;
  }

  bool opSelect() {
    if (cfg_.fragment == Fragment::MLL) return false;
    std::vector<std::size_t> singles = singleCompElems();
    if (singles.empty()) return false;
    std::size_t k = singles[below(singles.size())];
    Env comp = pool_[k].env[0];
    Name x = nthKey(comp, below(comp.size()));
    Type tx = comp.at(x);
    Type other = genType(1);
    bool left = coin(0.5);
    comp.erase(x);
    comp.emplace(x, left ? tPlus(tx, other) : tPlus(other, tx));
    dropPairsMentioning({x});
    pool_[k] = {left ? pInl(x, pool_[k].term) : pInr(x, pool_[k].term), {comp}};
    return true;
  }

  bool opDispose() {
    if (cfg_.fragment == Fragment::MLL) return false;
    std::vector<std::size_t> singles = singleCompElems();
    if (singles.empty()) return false;
    std::size_t k = singles[below(singles.size())];
    Name x = freshChan("e");
    Env comp = pool_[k].env[0];
    comp.emplace(x, tQuery(genType(1)));
    pool_[k] = {pDisp(x, pool_[k].term), {comp}};
    return true;
  }

  std::vector<std::size_t> singleCompElems() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < pool_.size(); ++k)
      if (pool_[k].env.size() == 1) out.push_back(k);
    return out;
  }

  static Name nthKey(const Env& c, std::size_t i) {
    auto it = c.begin();
    std::advance(it, static_cast<long>(i));
    return it->first;
  }

  void dropPairsMentioning(const NameSet& ns) {
    pairs_.erase(std::remove_if(pairs_.begin(), pairs_.end(),
                                [&](const auto& p) {
                                  return ns.count(std::get<0>(p)) ||
                                         ns.count(std::get<2>(p));
                                }),
                 pairs_.end());
  }

  std::optional<Derivation> attemptOnce(int narrow) {
    pool_.clear();
    pairs_.clear();
    theta_.clear();
    // Scale the ambition to the depth bound and the retry pressure.
    int room = std::max(0, cfg_.maxDepth - 1);
    int tsize = std::max(1, std::min(3 - narrow, room / 2));
    int nSeeds = room == 0 ? 0 : std::max(1, std::min(3 - narrow, room));
    int nOps = std::max(0, std::min(3 - narrow, room - 1));

    for (int s = 0; s < nSeeds; ++s) {
      double roll = std::uniform_real_distribution<double>(0, 1)(rng_);
      if (cfg_.fragment == Fragment::HOPiLL && roll < 0.45) {
        if (roll < 0.2) seedProvideAssume();
        else if (roll < 0.35) seedChop();
        else seedFreeInvoke();
      } else if (coin(0.55)) {
        seedPair(tsize);
      } else {
        seedLone(tsize);
      }
    }
    for (int o = 0; o < nOps; ++o) {
      switch (below(6)) {
        case 0: opCut(); break;
        case 1: opWait(); break;
        case 2: opRecv(); break;
        case 3: opSend(); break;
        case 4: opSelect(); break;
        default: opDispose(); break;
      }
    }

    std::shuffle(pool_.begin(), pool_.end(), rng_);
    Proc term = pNil();
    HyperEnv env;
    bool first = true;
    for (const auto& e : pool_) {
      term = first ? e.term : pPar(term, e.term);
      first = false;
      env.insert(env.end(), e.env.begin(), e.env.end());
    }
    Derivation d;
    try {
      d = checkProc(sigma_, theta_, term, env);
    } catch (const Error&) {
      return std::nullopt;  // a generator bug; retrying keeps us honest
    }
    if (derivDepth(d) > cfg_.maxDepth) return std::nullopt;
    return d;
  }
};

}  // namespace detail

// Generate one well-typed derivation per the configuration. Deterministic in
// the seed; throws when no derivation fits the bounds after bounded retries.
inline Derivation genDerivation(const GenConfig& cfg) {
  return detail::Gen(cfg).run();
}

// The recursive-type definitions a configuration generates against (empty
// unless the configuration allows them).
inline Sigma genSigma(const GenConfig& cfg) {
  return detail::Gen(cfg).sigma();
}

// A term whose only component is exactly `need` (used to instantiate law and
// composition templates with concrete processes).
inline Proc genPieceUsing(const GenConfig& cfg, const Env& need) {
  return detail::Gen(cfg).pieceFor(need);
}

inline Type genTypeUsing(const GenConfig& cfg, int size) {
  return detail::Gen(cfg).randomType(size);
}

// Premise substitution: every immediate sub-derivation is itself a valid
// judgement, and a failing check often still fails on one of them.
inline std::vector<Derivation> shrinkCandidates(const Derivation& d) {
  return d.kids;
}

// ---------------------------------------------------------------------------
// The parallelism laws, checked over a derivation's reachable region.

struct MetaBounds {
  std::size_t maxStates = 48;        // distinct states explored per check
  std::size_t maxChecksPerState = 64;  // label pairs examined at one state
};

struct LawReport {
  std::string law;
  bool pass = true;
  bool truncated = false;  // the state bound cut the region short
  std::size_t states = 0;
  std::size_t checksMade = 0;
  std::vector<std::string> failures;
};

inline std::string showLawReport(const LawReport& r) {
  std::ostringstream ss;
  ss << r.law << ": " << (r.pass ? "pass" : "FAIL") << " (" << r.states
     << " states, " << r.checksMade << " checks"
     << (r.truncated ? ", truncated" : "") << ")";
  for (const auto& f : r.failures) ss << "\n  " << f;
  return ss.str();
}

namespace detail {

// Two labels are independent when they share no free names; tau has none and
// is independent of everything.
inline bool labelsIndependent(const Label& l, const Label& m) {
  NameSet a = freeNames(l), b = freeNames(m);
  for (const auto& x : a)
    if (b.count(x)) return false;
  return true;
}

// All successors of `d` under (a label equal to) `l`. Silent steps can be
// multiply enabled under one label, so they are collected from the menu;
// everything else follows the label directly.
inline std::vector<Derivation> succsByLabel(const Sigma& sigma, const Derivation& d,
                                            const Label& l) {
  std::vector<Derivation> out;
  FreshNames fresh;
  if (l.kind == Label::Kind::Tau) {
    for (const auto& t : derStep(sigma, d, fresh))
      if (t.label.kind == Label::Kind::Tau && t.target) out.push_back(*t.target);
    return out;
  }
  if (auto nd = derStepWithLabel(sigma, d, l, fresh)) out.push_back(*nd);
  return out;
}

// Menu entries mint their bound names independently, so two labels of one
// menu may bind the same name, and composing them verbatim would capture.
// Rename the bound channels and process variables of both labels apart from
// each other and from everything free at the state before sequencing them.
inline void freshenBoundApart(Label& l1, Label& l2, const Derivation& d) {
  NameSet avoid = freeNames(d.term);
  for (const auto& comp : d.env)
    for (const auto& [x, t] : comp) avoid.insert(x);
  for (const Label* l : {&l1, &l2}) {
    avoid.merge(freeNames(*l));
    avoid.merge(boundNames(*l));
  }
  // Mint outside the '#' namespace the transition menus draw from, so the
  // renamed labels can never collide with a menu's own internal mints.
  int k = 0;
  auto mintApart = [&](const Name& n) {
    Name stem = n.substr(0, n.find_first_of("#~"));
    if (stem.empty()) stem = "v";
    Name nn;
    do {
      nn = stem + "~" + std::to_string(++k);
    } while (avoid.count(nn));
    return nn;
  };
  for (Label* l : {&l1, &l2})
    for (const Name& n : boundNames(*l)) {
      Name nn = mintApart(n);
      renameBound(*l, n, nn);
      avoid.insert(nn);
    }
  NameSet pv1 = boundProcVars(l1);
  for (const Name& q : boundProcVars(l2)) {
    if (!pv1.count(q)) continue;
    for (Act* a : {&l2.a, &l2.b})
      if (a->pvar == q) a->pvar = q + "~2";
  }
}

template <typename PerState>
inline void walkDerRegion(const Sigma& sigma, const Derivation& d0,
                          std::size_t maxStates, LawReport& rep,
                          PerState&& perState) {
  std::set<std::string> seen{derKey(d0)};
  std::deque<Derivation> queue{d0};
  while (!queue.empty()) {
    if (rep.states >= maxStates) {
      rep.truncated = true;
      return;
    }
    Derivation d = queue.front();
    queue.pop_front();
    ++rep.states;
    FreshNames fresh;
    std::vector<DerTransition> ts = derStep(sigma, d, fresh);
    perState(d, ts);
    for (const auto& t : ts)
      if (t.target && seen.insert(derKey(*t.target)).second)
        queue.push_back(*t.target);
  }
}

inline Act alignedCopy(const Act& from, const Act& to) {
  Act a = from;
  if (!a.arg1.empty() && !to.arg1.empty()) a.arg1 = to.arg1;
  if (!a.arg2.empty() && !to.arg2.empty()) a.arg2 = to.arg2;
  return a;
}

// Read an interface payload back through its field names, so two payloads
// minted with different transport channels can be compared.
inline std::optional<HyperEnv> fieldsView(const EnvAbs& ea) {
  std::map<Name, Name> back;
  for (const auto& [f, n] : ea.rho)
    if (!back.emplace(n, f).second) return std::nullopt;
  HyperEnv out;
  for (const auto& comp : ea.env) {
    Env c;
    for (const auto& [n, t] : comp) {
      auto it = back.find(n);
      if (it == back.end()) return std::nullopt;
      c.emplace(it->second, t);
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Equality of acts up to the names a label binds: positional bound channels,
// the bound process variable of a higher-order receive, and the minted
// transport names inside higher-order payloads.
inline bool actMatchesUpToBound(const Sigma& sigma, const Act& a0, const Act& b) {
  Act a = alignedCopy(a0, b);
  if (!a.pvar.empty() && !b.pvar.empty()) a.pvar = b.pvar;
  if (a.payload && b.payload) {
    std::map<Name, Name> sub;
    bool aligned = a.payload->rho.size() == b.payload->rho.size();
    for (const auto& [f, n] : a.payload->rho) {
      if (!aligned) break;
      auto it = b.payload->rho.find(f);
      if (it == b.payload->rho.end()) {
        aligned = false;
        break;
      }
      if (n != it->second) sub.emplace(n, it->second);
    }
    if (aligned) {
      FreshNames fresh;
      a.payload = std::make_shared<const Abstraction>(
          Abstraction{b.payload->rho, substNames(a.payload->body, sub, fresh)});
    }
  }
  if (a.envPayload && b.envPayload) {
    auto va = fieldsView(*a.envPayload), vb = fieldsView(*b.envPayload);
    if (!va || !vb || !eqSigma(sigma, *va, *vb)) return false;
    a.envPayload = b.envPayload;
  }
  return actEq(sigma, a, b);
}

}  // namespace detail

// Any two independent transitions commute to a common state. Pairing is over
// concrete first-order transitions; schematic labels are left out.
inline LawReport checkDiamond(const Sigma& sigma, const Derivation& d0,
                              const MetaBounds& bounds = {}) {
  LawReport rep;
  rep.law = "diamond";
  detail::walkDerRegion(
      sigma, d0, bounds.maxStates, rep,
      [&](const Derivation& d, const std::vector<DerTransition>& ts) {
        std::vector<const DerTransition*> cs;
        for (const auto& t : ts)
          if (t.target) cs.push_back(&t);
        std::size_t budget = bounds.maxChecksPerState;
        for (std::size_t i = 0; i < cs.size(); ++i)
          for (std::size_t j = i + 1; j < cs.size(); ++j) {
            if (budget == 0) return;
            Label l1 = cs[i]->label, l2 = cs[j]->label;
            if (!detail::labelsIndependent(l1, l2)) continue;
            --budget;
            ++rep.checksMade;
            detail::freshenBoundApart(l1, l2, d);
            // A silent label keeps the specific successor it was paired on;
            // a visible label is unique for its subject, so re-following the
            // freshened copy from the state is deterministic.
            auto startsFor = [&](const Label& lab,
                                 const DerTransition* t) -> std::vector<Derivation> {
              if (lab.kind == Label::Kind::Tau) return {*t->target};
              return detail::succsByLabel(sigma, d, lab);
            };
            std::set<std::string> after12, after21;
            for (const auto& mid : startsFor(l1, cs[i]))
              for (const auto& nd : detail::succsByLabel(sigma, mid, l2))
                after12.insert(detail::derKey(nd));
            for (const auto& mid : startsFor(l2, cs[j]))
              for (const auto& nd : detail::succsByLabel(sigma, mid, l1))
                after21.insert(detail::derKey(nd));
            bool closed = false;
            for (const auto& k : after12)
              if (after21.count(k)) closed = true;
            if (!closed)
              rep.failures.push_back(
                  "open square at " + detail::derKey(d) + " for " + showLabel(l1) +
                  " # " + showLabel(l2) + " (" + std::to_string(after12.size()) +
                  " vs " + std::to_string(after21.size()) + " closing candidates)");
          }
      });
  rep.pass = rep.failures.empty();
  return rep;
}

// Every simultaneous pair of independent actions can be played one at a time,
// in either order, reaching the very same state.
inline LawReport checkSerialisation(const Sigma& sigma, const Derivation& d0,
                                    const MetaBounds& bounds = {}) {
  LawReport rep;
  rep.law = "serialisation";
  detail::walkDerRegion(
      sigma, d0, bounds.maxStates, rep,
      [&](const Derivation& d, const std::vector<DerTransition>& ts) {
        std::size_t budget = bounds.maxChecksPerState;
        for (const auto& t : ts) {
          if (t.label.kind != Label::Kind::Pair || !t.target) continue;
          if (isSchema(t.label)) continue;
          Label l1 = lAct(t.label.a), l2 = lAct(t.label.b);
          if (!detail::labelsIndependent(l1, l2)) continue;
          if (budget == 0) return;
          --budget;
          ++rep.checksMade;
          const std::string want = detail::derKey(*t.target);
          auto serialises = [&](const Label& first, const Label& second) {
            for (const auto& mid : detail::succsByLabel(sigma, d, first))
              for (const auto& end : detail::succsByLabel(sigma, mid, second))
                if (detail::derKey(end) == want) return true;
            return false;
          };
          if (!serialises(l1, l2) || !serialises(l2, l1))
            rep.failures.push_back("pair " + showLabel(t.label) + " at " +
                                   detail::derKey(d) +
                                   " does not serialise to its target");
        }
      });
  rep.pass = rep.failures.empty();
  return rep;
}

// Independent enabled actions never disable each other: their simultaneous
// pair is enabled too.
inline LawReport checkNonInterference(const Sigma& sigma, const Derivation& d0,
                                      const MetaBounds& bounds = {}) {
  LawReport rep;
  rep.law = "non-interference";
  detail::walkDerRegion(
      sigma, d0, bounds.maxStates, rep,
      [&](const Derivation& d, const std::vector<DerTransition>& ts) {
        std::vector<const DerTransition*> acts;
        for (const auto& t : ts)
          if (t.label.kind == Label::Kind::Action && t.target) acts.push_back(&t);
        std::size_t budget = bounds.maxChecksPerState;
        for (std::size_t i = 0; i < acts.size(); ++i)
          for (std::size_t j = i + 1; j < acts.size(); ++j) {
            if (budget == 0) return;
            const Label &l1 = acts[i]->label, &l2 = acts[j]->label;
            if (!detail::labelsIndependent(l1, l2)) continue;
            --budget;
            ++rep.checksMade;
            bool found = false;
            for (const auto& t : ts) {
              if (t.label.kind != Label::Kind::Pair) continue;
              bool straight =
                  detail::actMatchesUpToBound(sigma, t.label.a, l1.a) &&
                  detail::actMatchesUpToBound(sigma, t.label.b, l2.a);
              bool crossed =
                  detail::actMatchesUpToBound(sigma, t.label.a, l2.a) &&
                  detail::actMatchesUpToBound(sigma, t.label.b, l1.a);
              if (straight || crossed) {
                found = true;
                break;
              }
            }
            if (!found)
              rep.failures.push_back("no simultaneous pair for " + showLabel(l1) +
                                     " # " + showLabel(l2) + " at " +
                                     detail::derKey(d));
          }
      });
  rep.pass = rep.failures.empty();
  return rep;
}

// Every component of the conclusion can act on one of its own channels after
// finitely many silent steps; with process variables in context, a pending
// invocation counts as readiness too.
inline LawReport checkReadiness(const Sigma& sigma, const Derivation& d0,
                                const MetaBounds& bounds = {}) {
  LawReport rep;
  rep.law = "readiness";
  // Saturate: collect every label visible from the silent closure of d0.
  std::set<std::string> seen{detail::derKey(d0)};
  std::deque<Derivation> queue{d0};
  std::vector<Label> visible;
  bool sawSubst = false;
  while (!queue.empty()) {
    if (rep.states >= bounds.maxStates) {
      rep.truncated = true;
      break;
    }
    Derivation d = queue.front();
    queue.pop_front();
    ++rep.states;
    FreshNames fresh;
    for (const auto& t : derStep(sigma, d, fresh)) {
      if (t.label.kind == Label::Kind::Subst) sawSubst = true;
      else if (t.label.kind != Label::Kind::Tau) visible.push_back(t.label);
      if (t.label.kind == Label::Kind::Tau && t.target &&
          seen.insert(detail::derKey(*t.target)).second)
        queue.push_back(*t.target);
    }
  }
  for (std::size_t i = 0; i < d0.env.size(); ++i) {
    ++rep.checksMade;
    bool ready = false;
    for (const Label& l : visible) {
      for (const auto& x : freeNames(l))
        if (d0.env[i].count(x)) ready = true;
      if (ready) break;
    }
    if (!ready && !d0.theta.empty() && sawSubst) ready = true;
    if (!ready && !rep.truncated)
      rep.failures.push_back("component " + showHyperEnv({d0.env[i]}) +
                             " has no saturated action of its own");
  }
  rep.pass = rep.failures.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// The batch runner: many seeds, all laws, plus the projection checks.

struct FuzzResult {
  Fragment fragment = Fragment::MLL;
  std::size_t requested = 0;
  std::size_t generated = 0;
  std::map<std::string, std::size_t> passed;
  std::map<std::string, std::size_t> unknown;  // bounded projection verdicts
  std::vector<std::string> failures;           // law name, seed, witness
};

inline std::string showFuzzResult(const FuzzResult& r) {
  std::ostringstream ss;
  ss << "fragment " << showFragment(r.fragment) << ": " << r.generated << "/"
     << r.requested << " derivations";
  for (const auto& [law, n] : r.passed) {
    ss << "\n  " << law << ": " << n << " pass";
    auto u = r.unknown.find(law);
    if (u != r.unknown.end() && u->second) ss << " (" << u->second << " unknown)";
  }
  if (r.failures.empty())
    ss << "\n  no failures";
  else
    for (const auto& f : r.failures) ss << "\n  FAIL " << f;
  return ss.str();
}

// Shrink a failing derivation by premise substitution while the failure is
// reproducible, and render the smallest witness found.
template <typename Fails>
inline Derivation shrinkWhile(const Derivation& d0, Fails&& fails) {
  Derivation cur = d0;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const Derivation& k : shrinkCandidates(cur)) {
      bool bad = false;
      try {
        bad = fails(k);
      } catch (const Error&) {
        bad = false;
      }
      if (bad) {
        cur = k;
        moved = true;
        break;
      }
    }
  }
  return cur;
}

// The exploration budget the fuzzer hands the projection checks. Regions of
// replication-free derivations are finite and small, so a modest bound still
// certifies them outright; servers make the region unbounded and come back
// as honest unknowns either way, so the large default budget would only buy
// time, not verdicts.
inline ExploreConfig fuzzExplore() {
  ExploreConfig c = defaultExplore();
  c.maxStates = 250;
  return c;
}

inline FuzzResult fuzzFragment(const GenConfig& base, std::size_t count,
                               const MetaBounds& bounds = {},
                               const ExploreConfig& explore = fuzzExplore()) {
  FuzzResult res;
  res.fragment = base.fragment;
  res.requested = count;
  Sigma sigma = genSigma(base);
  auto lawFails = [&](const std::string& law, const Derivation& d) -> bool {
    if (law == "diamond") return !checkDiamond(sigma, d, bounds).pass;
    if (law == "serialisation") return !checkSerialisation(sigma, d, bounds).pass;
    if (law == "non-interference")
      return !checkNonInterference(sigma, d, bounds).pass;
    if (law == "readiness") return !checkReadiness(sigma, d, bounds).pass;
    if (law == "erasure") return checkErasure(sigma, d, explore).notRelated();
    return checkFidelity(sigma, d, explore).notRelated();
  };
  auto record = [&](const std::string& law, std::uint64_t seed, bool bad,
                    bool wasUnknown, const Derivation& d) {
    if (!bad) {
      ++res.passed[law];
      if (wasUnknown) ++res.unknown[law];
      return;
    }
    Derivation small =
        shrinkWhile(d, [&](const Derivation& k) { return lawFails(law, k); });
    res.failures.push_back(law + " seed " + std::to_string(seed) + " witness " +
                           detail::derKey(small));
  };
  for (std::size_t i = 0; i < count; ++i) {
    GenConfig cfg = base;
    cfg.seed = base.seed + i;
    Derivation d;
    try {
      d = genDerivation(cfg);
    } catch (const Error& e) {
      res.failures.push_back("generation seed " + std::to_string(cfg.seed) + ": " +
                             e.what());
      continue;
    }
    ++res.generated;
    record("diamond", cfg.seed, !checkDiamond(sigma, d, bounds).pass, false, d);
    record("serialisation", cfg.seed, !checkSerialisation(sigma, d, bounds).pass,
           false, d);
    record("non-interference", cfg.seed,
           !checkNonInterference(sigma, d, bounds).pass, false, d);
    record("readiness", cfg.seed, !checkReadiness(sigma, d, bounds).pass, false, d);
    Verdict er = checkErasure(sigma, d, explore);
    record("erasure", cfg.seed, er.notRelated(), er.unknown(), d);
    Verdict fi = checkFidelity(sigma, d, explore);
    record("fidelity", cfg.seed, fi.notRelated(), fi.unknown(), d);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Environment mutation, for exercising the ill-typed side of properties that
// relate typing and behaviour.

inline HyperEnv mutateHyperEnv(std::uint64_t seed, const HyperEnv& g) {
  std::mt19937_64 rng(seed);
  HyperEnv out = g;
  auto pickComp = [&]() -> Env* {
    if (out.empty()) return nullptr;
    return &out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)];
  };
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: {  // flip one type to its dual
      if (Env* c = pickComp(); c && !c->empty()) {
        auto it = c->begin();
        std::advance(it, static_cast<long>(std::uniform_int_distribution<std::size_t>(
                             0, c->size() - 1)(rng)));
        it->second = dual(it->second);
      }
      break;
    }
    case 1: {  // replace one type wholesale
      if (Env* c = pickComp(); c && !c->empty()) {
        auto it = c->begin();
        std::advance(it, static_cast<long>(std::uniform_int_distribution<std::size_t>(
                             0, c->size() - 1)(rng)));
        it->second = rng() % 2 ? tOne() : tTensor(tBot(), tOne());
      }
      break;
    }
    case 2: {  // drop one name from its component
      if (Env* c = pickComp(); c && !c->empty()) {
        auto it = c->begin();
        std::advance(it, static_cast<long>(std::uniform_int_distribution<std::size_t>(
                             0, c->size() - 1)(rng)));
        c->erase(it);
        if (c->empty()) out.erase(out.begin() + (c - out.data()));
      }
      break;
    }
    default: {  // move one name into a different (or new) component
      if (out.size() >= 1 && !out[0].empty()) {
        std::size_t from =
            std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng);
        if (!out[from].empty()) {
          auto it = out[from].begin();
          Name n = it->first;
          Type t = it->second;
          out[from].erase(it);
          std::size_t to = (from + 1) % (out.size() + 1);
          if (to >= out.size()) out.push_back({});
          out[to >= out.size() ? out.size() - 1 : to].emplace(n, t);
          if (out[from].empty()) out.erase(out.begin() + from);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace hyperpill

#endif  // HYPERPILL_METATHEORY_HPP
