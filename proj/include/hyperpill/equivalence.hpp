// Behavioural comparison engines: strong and weak similarity and bisimilarity
// between processes, similarity between a process and a typing environment,
// and the structural correspondence checks tying the three transition systems
// together (erasure to processes, fidelity to environments, typing versus
// similarity).
//
// Everything here is a bounded, on-the-fly computation of a greatest fixed
// point: pairs of states are explored lazily, each attack of one side must be
// answered by the other, and unanswerable pairs are removed until stable.
// Verdicts are three-valued — bounds and schematic labels (universally
// quantified types, higher-order payloads) can leave a region unexplored, in
// which case the result is Unknown rather than a guess.
#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyperpill/deriv_lts.hpp"

namespace hyperpill {

struct ExploreConfig {
  std::size_t maxStates = 4000;  // budget of explored state pairs
  std::size_t tauBudget = 64;    // silent-closure size bound per state
  int payloadDepth = 2;          // recursion depth for payload comparison
  std::vector<Type> typeInstances;  // instantiation set for type schemas
};

inline ExploreConfig defaultExplore() {
  ExploreConfig c;
  c.typeInstances = {tOne(), tBot()};
  return c;
}

struct Verdict {
  enum class Outcome { Related, NotRelated, Unknown };
  Outcome outcome = Outcome::Unknown;
  // Related: the witness relation, closed under the game clauses on the
  // explored region, as pairs of canonical state keys.
  std::vector<std::pair<std::string, std::string>> witness;
  // NotRelated: a replayable distinguishing sequence of attack labels.
  std::vector<std::string> trace;
  std::size_t pairsExplored = 0;
  std::string note;

  bool related() const { return outcome == Outcome::Related; }
  bool notRelated() const { return outcome == Outcome::NotRelated; }
  bool unknown() const { return outcome == Outcome::Unknown; }
};

inline std::string showVerdict(const Verdict& v) {
  switch (v.outcome) {
    case Verdict::Outcome::Related: return "related";
    case Verdict::Outcome::NotRelated: return "not-related";
    default: return "unknown";
  }
}

namespace detail {

// Rename a free process variable (binders shadow; payload bodies can use
// variables bound further out).
inline Proc renameFreePVar(const Proc& p, const Name& from, const Name& to) {
  if (!p || from == to) return p;
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
      n.left = renameFreePVar(p->left, from, to);
      return mk(std::move(n));
    }
    case ProcTag::Chop: {
      ProcNode n = *p;
      n.abs = Abstraction{p->abs->rho, renameFreePVar(p->abs->body, from, to)};
      if (p->pvar != from) n.left = renameFreePVar(p->left, from, to);
      return mk(std::move(n));
    }
    case ProcTag::HoSend: {
      ProcNode n = *p;
      n.abs = Abstraction{p->abs->rho, renameFreePVar(p->abs->body, from, to)};
      n.left = renameFreePVar(p->left, from, to);
      return mk(std::move(n));
    }
    default: {
      if (!p->left && !p->right) return p;
      ProcNode n = *p;
      if (p->left) n.left = renameFreePVar(p->left, from, to);
      if (p->right) n.right = renameFreePVar(p->right, from, to);
      return mk(std::move(n));
    }
  }
}

// A game state: either a process or a typing-environment state.
struct GS {
  bool isEnv = false;
  Proc p;
  EnvState e;
};

inline GS gsProc(Proc p) {
  GS s;
  s.p = std::move(p);
  return s;
}
inline GS gsEnv(EnvState e) {
  GS s;
  s.isEnv = true;
  s.e = std::move(e);
  return s;
}

// A payload abstraction with its channels renamed to the field names, so two
// payloads with different channel choices compare directly.
inline Proc canonPayload(const Abstraction& abs) {
  std::map<Name, Name> ren;
  for (const auto& [f, n] : abs.rho)
    if (f != n) ren[n] = f;
  if (ren.empty()) return abs.body;
  FreshNames fresh;
  return substNames(abs.body, ren, fresh);
}

// Fill the type hole of a schematic label (the receive-type slot).
inline Label fillTypeHole(Label l, const Type& A) {
  auto fill = [&](Act& a) {
    if ((a.tag == ActTag::RecvType || a.tag == ActTag::SendType) && !a.type) a.type = A;
  };
  if (l.kind == Label::Kind::Action || l.kind == Label::Kind::Pair) fill(l.a);
  if (l.kind == Label::Kind::Pair) fill(l.b);
  return l;
}

class Game {
 public:
  Game(const Sigma& sigma, ExploreConfig cfg, bool weak, bool twoWay)
      : sigma_(sigma), cfg_(std::move(cfg)), weak_(weak), twoWay_(twoWay) {}

  Verdict run(const GS& a, const GS& b) {
    // Environment states only defend: they sit on the right of a similarity
    // question (does the environment simulate the process?).
    internPair(a, b);
    std::size_t next = 0;
    while (next < pairs_.size() && next < cfg_.maxStates) {
      explore(next);
      ++next;
    }
    refine();
    return verdict();
  }

 private:
  struct GMove {
    Label label;
    GS target;
    bool substSchema = false;  // invocation schema: matched by signature
  };
  struct Attack {
    std::string label;
    std::vector<std::size_t> responses;
  };
  struct PairInfo {
    GS a, b;
    std::string keyA, keyB;
    bool alive = true;
    bool explored = false;
    bool taint = false;  // optimistic assumption involved (schemas, bounds)
    std::vector<Attack> attacks;
    std::size_t killAttack = static_cast<std::size_t>(-1);
  };

  const Sigma& sigma_;
  ExploreConfig cfg_;
  bool weak_, twoWay_;
  std::map<std::string, std::size_t> index_;
  std::vector<PairInfo> pairs_;
  std::map<std::string, std::vector<GMove>> menus_;
  std::map<std::string, std::pair<std::vector<GS>, bool>> closures_;

  std::string keyOf(const GS& s) {
    if (!s.isEnv) return "P " + showProc(canonicalForm(s.p));
    std::string k = "E ";
    for (const auto& [pv, g] : s.e.theta) k += pv + "=" + showHyperEnv(g) + "; ";
    std::vector<std::string> cs;
    for (const auto& comp : s.e.env) cs.push_back(showHyperEnv({comp}));
    std::sort(cs.begin(), cs.end());
    for (const auto& c : cs) k += c + " | ";
    return k;
  }

  std::size_t internPair(const GS& a, const GS& b) {
    std::string ka = keyOf(a), kb = keyOf(b);
    std::string key = ka + " \xE2\x96\xB7 " + kb;
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    PairInfo pi;
    pi.a = a;
    pi.b = b;
    pi.keyA = std::move(ka);
    pi.keyB = std::move(kb);
    pairs_.push_back(std::move(pi));
    index_.emplace(std::move(key), pairs_.size() - 1);
    return pairs_.size() - 1;
  }

  const std::vector<GMove>& movesOf(const GS& s) {
    std::string k = keyOf(s);
    auto it = menus_.find(k);
    if (it != menus_.end()) return it->second;
    std::vector<GMove> out;
    if (!s.isEnv) {
      FreshNames fresh;
      for (const auto& t : procStep(sigma_, s.p, fresh)) {
        if (t.label.kind == Label::Kind::Subst) {
          GMove m;
          m.label = t.label;
          m.substSchema = true;
          out.push_back(std::move(m));
          continue;
        }
        if (t.withType) {
          for (const auto& A : cfg_.typeInstances) {
            GMove m;
            m.label = fillTypeHole(t.label, A);
            m.target = gsProc(t.withType(A));
            out.push_back(std::move(m));
          }
          continue;
        }
        if (!t.target) continue;
        out.push_back(GMove{t.label, gsProc(t.target), false});
      }
    }
    return menus_.emplace(std::move(k), std::move(out)).first->second;
  }

  // Silent closure (reflexive-transitive), bounded; environments idle only.
  const std::pair<std::vector<GS>, bool>& tauClosure(const GS& s) {
    std::string k = keyOf(s);
    auto it = closures_.find(k);
    if (it != closures_.end()) return it->second;
    std::vector<GS> states;
    bool truncated = false;
    if (s.isEnv) {
      states.push_back(s);
    } else {
      std::set<std::string> seen;
      std::deque<GS> q{s};
      seen.insert(keyOf(s));
      while (!q.empty()) {
        GS cur = q.front();
        q.pop_front();
        states.push_back(cur);
        if (states.size() > cfg_.tauBudget) {
          truncated = true;
          break;
        }
        for (const auto& m : movesOf(cur)) {
          if (m.label.kind != Label::Kind::Tau) continue;
          std::string mk2 = keyOf(m.target);
          if (seen.insert(mk2).second) q.push_back(m.target);
        }
      }
    }
    return closures_.emplace(std::move(k), std::make_pair(std::move(states), truncated))
        .first->second;
  }

  // --- label matching (defender move against a concrete attack label) -----

  struct AlignResult {
    std::map<Name, Name> ren;       // defender bound channel -> attacker's
    std::map<Name, Name> pvarRen;   // defender bound process var -> attacker's
    std::vector<std::pair<Abstraction, Abstraction>> payloadPairs;  // atk, def
  };

  bool alignActs(const Act& def, const Act& atk, AlignResult& r) {
    if (def.tag != atk.tag || def.subject != atk.subject) return false;
    if (!typeEq(sigma_, def.type, atk.type)) return false;
    if (def.anno && atk.anno && !typeEq(sigma_, def.anno, atk.anno)) return false;
    auto bindArg = [&](const Name& f, const Name& t) {
      if (f.empty() != t.empty()) return false;
      if (f.empty()) return true;
      auto it = r.ren.find(f);
      if (it != r.ren.end()) return it->second == t;
      for (const auto& [f2, t2] : r.ren)
        if (t2 == t && f2 != f) return false;  // keep the renaming injective
      r.ren.emplace(f, t);
      return true;
    };
    if (!bindArg(def.arg1, atk.arg1) || !bindArg(def.arg2, atk.arg2)) return false;
    if (def.tag == ActTag::HoRecv) {
      if (def.pvar.empty() || atk.pvar.empty()) return false;
      r.pvarRen[def.pvar] = atk.pvar;
    } else if (def.pvar != atk.pvar) {
      return false;
    }
    if ((def.payload != nullptr) != (atk.payload != nullptr)) return false;
    if (def.payload) {
      if (!alphaEq(canonPayload(*def.payload), canonPayload(*atk.payload)))
        r.payloadPairs.emplace_back(*atk.payload, *def.payload);
    }
    if ((def.envPayload != nullptr) != (atk.envPayload != nullptr)) return false;
    if (def.envPayload) {
      if (def.envPayload->rho != atk.envPayload->rho) return false;
      if (!eqSigma(sigma_, def.envPayload->env, atk.envPayload->env)) return false;
    }
    return true;
  }

  std::optional<AlignResult> alignLabels(const Label& def, const Label& atk) {
    if (def.kind != atk.kind) return std::nullopt;
    AlignResult r;
    switch (atk.kind) {
      case Label::Kind::Tau:
        return r;
      case Label::Kind::Fwd:
        if (def.x == atk.x && def.y == atk.y) return r;
        return std::nullopt;
      case Label::Kind::Action:
        if (alignActs(def.a, atk.a, r)) return r;
        return std::nullopt;
      case Label::Kind::Pair: {
        if (alignActs(def.a, atk.a, r) && alignActs(def.b, atk.b, r)) return r;
        AlignResult r2;
        if (alignActs(def.a, atk.b, r2) && alignActs(def.b, atk.a, r2)) return r2;
        return std::nullopt;
      }
      default:
        return std::nullopt;
    }
  }

  // The payload clause: sent processes must themselves be related, at the
  // same strength, along decreasing depth.
  bool payloadRelated(const Abstraction& atk, const Abstraction& def, bool& taint) {
    if (atk.rho.size() != def.rho.size()) return false;
    for (auto it = atk.rho.begin(), jt = def.rho.begin(); it != atk.rho.end(); ++it, ++jt)
      if (it->first != jt->first) return false;
    Proc ca = canonPayload(atk), cd = canonPayload(def);
    if (alphaEq(ca, cd)) return true;
    if (cfg_.payloadDepth <= 0) return false;
    ExploreConfig sub = cfg_;
    sub.payloadDepth = cfg_.payloadDepth - 1;
    Game g(sigma_, sub, weak_, twoWay_);
    Verdict v = g.run(gsProc(ca), gsProc(cd));
    if (v.unknown()) {
      taint = true;
      return true;  // optimistic; the final verdict degrades to Unknown
    }
    return v.related();
  }

  std::optional<GS> applyAlign(const AlignResult& r, const GS& target, bool& taint) {
    for (const auto& [atkAbs, defAbs] : r.payloadPairs)
      if (!payloadRelated(atkAbs, defAbs, taint)) return std::nullopt;
    if (target.isEnv) return target;  // environment targets carry no bound names
    Proc t = target.p;
    if (!r.ren.empty()) {
      NameSet fn = freeNames(t);
      for (const auto& [f, to] : r.ren)
        if (f != to && fn.count(to) && !r.ren.count(to)) return std::nullopt;
      FreshNames fresh;
      t = substNames(t, r.ren, fresh);
    }
    for (const auto& [f, to] : r.pvarRen) {
      if (f == to) continue;
      if (freeProcVars(t).count(to)) return std::nullopt;
      t = renameFreePVar(t, f, to);
    }
    return gsProc(t);
  }

  // For a higher-order send against an environment defender: compute the
  // environment-side payload (the typing of the sent process) and gate it by
  // relating the payload to that typing.
  bool attachEnvPayloads(const EnvState& e, Label& l, bool& taint) {
    auto attach = [&](Act& a) {
      if (a.tag != ActTag::HoSend || !a.payload || a.envPayload) return true;
      const Type* ty = nullptr;
      for (const auto& comp : e.env) {
        auto it = comp.find(a.subject);
        if (it != comp.end()) ty = &it->second;
      }
      if (!ty) return false;
      Type head;
      try {
        head = sigma_.headNormal(*ty);
      } catch (const Error&) {
        return false;
      }
      if (head->tag != TypeTag::Provide) return false;
      HyperEnv renamed;
      try {
        renamed = renameFields(head->henv, a.payload->rho, a.payload->body);
      } catch (const Error&) {
        return false;
      }
      if (cfg_.payloadDepth <= 0) {
        if (!typechecks(sigma_, a.payload->body, renamed)) return false;
      } else {
        ExploreConfig sub = cfg_;
        sub.payloadDepth = cfg_.payloadDepth - 1;
        Game g(sigma_, sub, /*weak=*/true, /*twoWay=*/false);
        Verdict v = g.run(gsProc(a.payload->body), gsEnv(EnvState{{}, renamed}));
        if (v.unknown()) taint = true;
        else if (!v.related()) return false;
      }
      auto abs = std::make_shared<EnvAbs>();
      abs->rho = a.payload->rho;
      abs->env = std::move(renamed);
      a.envPayload = std::move(abs);
      return true;
    };
    if (l.kind == Label::Kind::Action) return attach(l.a);
    if (l.kind == Label::Kind::Pair) return attach(l.a) && attach(l.b);
    return true;
  }

  std::vector<GS> respond(const GS& b, const Label& l, bool& taint) {
    std::vector<GS> out;
    std::set<std::string> seen;
    auto add = [&](GS s) {
      if (seen.insert(keyOf(s)).second) out.push_back(std::move(s));
    };

    if (b.isEnv) {
      if (l.kind == Label::Kind::Tau) {
        add(b);
        return out;
      }
      Label l2 = l;
      if (!attachEnvPayloads(b.e, l2, taint)) return out;
      for (auto& st : envSuccessors(sigma_, b.e, l2)) add(gsEnv(std::move(st)));
      return out;
    }

    if (l.kind == Label::Kind::Tau) {
      if (weak_) {
        const auto& closure = tauClosure(b);
        if (closure.second) taint = true;
        for (const auto& st : closure.first) add(st);
      } else {
        for (const auto& m : movesOf(b))
          if (m.label.kind == Label::Kind::Tau) add(m.target);
      }
      return out;
    }
    const std::vector<GS> self{b};
    std::vector<GS> starts = self;
    if (weak_) {
      const auto& closure = tauClosure(b);
      if (closure.second) taint = true;
      starts = closure.first;
    }
    for (const auto& st : starts) {
      for (const auto& m : movesOf(st)) {
        if (m.substSchema) continue;
        auto r = alignLabels(m.label, l);
        if (!r) continue;
        auto t = applyAlign(*r, m.target, taint);
        if (!t) continue;
        if (weak_) {
          const auto& after = tauClosure(*t);
          if (after.second) taint = true;
          for (const auto& st2 : after.first) add(st2);
        } else {
          add(*t);
        }
      }
    }
    return out;
  }

  bool hasSubstSchema(const GS& def, const Label& l) {
    if (!def.isEnv) {
      std::vector<GS> starts{def};
      if (weak_) starts = tauClosure(def).first;
      for (const auto& st : starts)
        for (const auto& m : movesOf(st))
          if (m.substSchema && m.label.pvar == l.pvar) return true;
      return false;
    }
    FreshNames fresh;
    for (const auto& t : envStep(sigma_, def.e, fresh))
      if (t.label.kind == Label::Kind::Subst && t.label.pvar == l.pvar) return true;
    return false;
  }

  void explore(std::size_t id) {
    if (pairs_[id].keyA == pairs_[id].keyB &&
        pairs_[id].a.isEnv == pairs_[id].b.isEnv) {
      pairs_[id].explored = true;  // identical states: related by reflexivity
      return;
    }
    GS a = pairs_[id].a, b = pairs_[id].b;
    bool taint = false;
    std::vector<Attack> attacks;
    auto addAttacks = [&](const GS& atk, const GS& def, bool fromA) {
      for (const auto& m : movesOf(atk)) {
        if (m.substSchema) {
          if (hasSubstSchema(def, m.label)) {
            taint = true;  // matched by signature; successors not compared
          } else {
            attacks.push_back({showLabel(m.label), {}});
          }
          continue;
        }
        bool rtaint = false;
        auto rs = respond(def, m.label, rtaint);
        taint |= rtaint;
        Attack at;
        at.label = showLabel(m.label);
        for (auto& r : rs)
          at.responses.push_back(fromA ? internPair(m.target, r) : internPair(r, m.target));
        attacks.push_back(std::move(at));
      }
    };
    addAttacks(a, b, true);
    if (twoWay_) addAttacks(b, a, false);
    pairs_[id].attacks = std::move(attacks);
    pairs_[id].taint = taint;
    pairs_[id].explored = true;
  }

  void refine() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& pi : pairs_) {
        if (!pi.alive || !pi.explored) continue;
        for (std::size_t i = 0; i < pi.attacks.size(); ++i) {
          bool answered = false;
          for (std::size_t rid : pi.attacks[i].responses)
            if (pairs_[rid].alive) {
              answered = true;
              break;
            }
          if (!answered) {
            pi.alive = false;
            pi.killAttack = i;
            changed = true;
            break;
          }
        }
      }
    }
  }

  Verdict verdict() {
    Verdict v;
    for (const auto& pi : pairs_)
      if (pi.explored) ++v.pairsExplored;
    if (!pairs_[0].alive) {
      v.outcome = Verdict::Outcome::NotRelated;
      std::size_t cur = 0;
      for (int guard = 0; guard < 64; ++guard) {
        const PairInfo& pi = pairs_[cur];
        if (pi.alive || pi.killAttack == static_cast<std::size_t>(-1)) break;
        const Attack& at = pi.attacks[pi.killAttack];
        v.trace.push_back(at.label);
        bool stepped = false;
        for (std::size_t rid : at.responses) {
          if (!pairs_[rid].alive && pairs_[rid].explored) {
            cur = rid;
            stepped = true;
            break;
          }
        }
        if (!stepped) break;
      }
      return v;
    }
    // Reachable alive region from the root; any unexplored or tainted pair
    // in it means the Related answer rests on an assumption.
    std::set<std::size_t> reach;
    std::deque<std::size_t> q{0};
    reach.insert(0);
    bool assumption = false;
    while (!q.empty()) {
      std::size_t cur = q.front();
      q.pop_front();
      const PairInfo& pi = pairs_[cur];
      if (!pi.explored || pi.taint) assumption = true;
      if (!pi.explored) continue;
      for (const auto& at : pi.attacks)
        for (std::size_t rid : at.responses)
          if (pairs_[rid].alive && reach.insert(rid).second) q.push_back(rid);
    }
    if (assumption) {
      v.outcome = Verdict::Outcome::Unknown;
      v.note = "exploration bound or schematic label reached";
      return v;
    }
    v.outcome = Verdict::Outcome::Related;
    for (std::size_t id : reach) v.witness.emplace_back(pairs_[id].keyA, pairs_[id].keyB);
    return v;
  }
};

}  // namespace detail

// --- process-process relations --------------------------------------------

inline Verdict strongBisim(const Sigma& sigma, const Proc& a, const Proc& b,
                           const ExploreConfig& cfg = defaultExplore()) {
  return detail::Game(sigma, cfg, false, true).run(detail::gsProc(a), detail::gsProc(b));
}
inline Verdict strongSim(const Sigma& sigma, const Proc& a, const Proc& b,
                         const ExploreConfig& cfg = defaultExplore()) {
  return detail::Game(sigma, cfg, false, false).run(detail::gsProc(a), detail::gsProc(b));
}
inline Verdict weakBisim(const Sigma& sigma, const Proc& a, const Proc& b,
                         const ExploreConfig& cfg = defaultExplore()) {
  return detail::Game(sigma, cfg, true, true).run(detail::gsProc(a), detail::gsProc(b));
}
inline Verdict weakSim(const Sigma& sigma, const Proc& a, const Proc& b,
                       const ExploreConfig& cfg = defaultExplore()) {
  return detail::Game(sigma, cfg, true, false).run(detail::gsProc(a), detail::gsProc(b));
}

// Does the typing environment simulate the process, weakly?
inline Verdict weakSimProcEnv(const Sigma& sigma, const Proc& p, const HyperEnv& g,
                              const ExploreConfig& cfg = defaultExplore()) {
  return detail::Game(sigma, cfg, true, false)
      .run(detail::gsProc(p), detail::gsEnv(EnvState{{}, g}));
}

// --- correspondence between the derivation and process systems ------------

namespace detail {

inline std::string derKey(const Derivation& d) {
  return showTheta(d.theta) + " |- " + showProc(canonicalForm(d.term)) +
         " :: " + showHyperEnv(d.env);
}

}  // namespace detail

// Every state reachable in the derivation system must step exactly like its
// underlying process: same menu, label for label, with agreeing successors.
inline Verdict checkErasure(const Sigma& sigma, const Derivation& d0,
                            const ExploreConfig& cfg = defaultExplore()) {
  Verdict v;
  std::set<std::string> seen;
  std::deque<Derivation> q{d0};
  seen.insert(detail::derKey(d0));
  bool truncated = false;
  while (!q.empty()) {
    if (v.pairsExplored >= cfg.maxStates) {
      truncated = true;
      break;
    }
    Derivation d = q.front();
    q.pop_front();
    ++v.pairsExplored;

    FreshNames freshD, freshP;
    std::vector<std::string> issues;
    auto derTs = derStep(sigma, d, freshD, &issues);
    if (!issues.empty()) {
      v.outcome = Verdict::Outcome::NotRelated;
      v.trace.push_back("at " + detail::derKey(d));
      for (const auto& i : issues) v.trace.push_back(i);
      return v;
    }
    auto procTs = procStep(sigma, d.term, freshP);
    // Both menus are computed from the same fresh supply, so labels line up
    // literally; match each process transition to a distinct derivation one.
    std::vector<bool> used(derTs.size(), false);
    bool ok = procTs.size() == derTs.size();
    for (const auto& pt : procTs) {
      if (!ok) break;
      bool found = false;
      for (std::size_t j = 0; j < derTs.size() && !found; ++j) {
        if (used[j]) continue;
        if (!labelEq(sigma, derTs[j].label, pt.label)) continue;
        if (pt.target && derTs[j].target &&
            !alphaEq(pt.target, derTs[j].target->term)) continue;
        if ((pt.target != nullptr) != derTs[j].target.has_value()) continue;
        used[j] = true;
        found = true;
      }
      if (!found) ok = false;
    }
    if (!ok) {
      v.outcome = Verdict::Outcome::NotRelated;
      v.trace.push_back("menu mismatch at " + detail::derKey(d));
      for (const auto& pt : procTs) v.trace.push_back("process: " + showLabel(pt.label));
      for (const auto& dt : derTs) v.trace.push_back("derivation: " + showLabel(dt.label));
      return v;
    }
    auto enqueue = [&](const Derivation& nd) {
      if (seen.insert(detail::derKey(nd)).second) q.push_back(nd);
    };
    for (const auto& dt : derTs) {
      if (dt.target) enqueue(*dt.target);
      if (dt.payloadDeriv) enqueue(dt.payloadDeriv->deriv);
      if (dt.withType)
        for (const auto& A : cfg.typeInstances)
          if (auto nd = dt.withType(A)) enqueue(*nd);
      // Invocation schemas carry payload closures; their instantiations are
      // exercised wherever a concrete definition runs (silent chop steps).
    }
  }
  v.outcome = truncated ? Verdict::Outcome::Unknown : Verdict::Outcome::Related;
  if (truncated) v.note = "state budget exhausted";
  return v;
}

// Every process step from a reachable derivation must be admitted by the
// typing-environment system with environments tracking the derivation's.
inline Verdict checkFidelity(const Sigma& sigma, const Derivation& d0,
                             const ExploreConfig& cfg = defaultExplore()) {
  Verdict v;
  std::set<std::string> seen;
  std::deque<Derivation> q{d0};
  seen.insert(detail::derKey(d0));
  bool truncated = false;
  while (!q.empty()) {
    if (v.pairsExplored >= cfg.maxStates) {
      truncated = true;
      break;
    }
    Derivation d = q.front();
    q.pop_front();
    ++v.pairsExplored;

    FreshNames fresh;
    std::vector<std::string> issues;
    auto derTs = derStep(sigma, d, fresh, &issues);
    if (!issues.empty()) {
      v.outcome = Verdict::Outcome::NotRelated;
      v.trace.push_back("at " + detail::derKey(d));
      for (const auto& i : issues) v.trace.push_back(i);
      return v;
    }
    for (const auto& dt : derTs) {
      if (dt.target &&
          !envAdmits(sigma, envOf(d), dt.label, envOf(*dt.target))) {
        v.outcome = Verdict::Outcome::NotRelated;
        v.trace.push_back("at " + detail::derKey(d));
        v.trace.push_back("environment refuses " + showLabel(dt.label));
        return v;
      }
      if (dt.target && seen.insert(detail::derKey(*dt.target)).second)
        q.push_back(*dt.target);
      if (dt.withType)
        for (const auto& A : cfg.typeInstances)
          if (auto nd = dt.withType(A))
            if (seen.insert(detail::derKey(*nd)).second) q.push_back(*nd);
    }
  }
  v.outcome = truncated ? Verdict::Outcome::Unknown : Verdict::Outcome::Related;
  if (truncated) v.note = "state budget exhausted";
  return v;
}

// --- typing versus similarity ---------------------------------------------

struct SimilarityTypingReport {
  bool agrees = true;      // meaningful when the similarity verdict is decisive
  bool viaTyping = false;
  Verdict viaSimilarity;
};

inline SimilarityTypingReport similarityTyping(const Sigma& sigma, const Proc& p,
                                               const HyperEnv& g,
                                               const ExploreConfig& cfg = defaultExplore()) {
  SimilarityTypingReport r;
  r.viaTyping = typechecks(sigma, p, g);
  r.viaSimilarity = weakSimProcEnv(sigma, p, g, cfg);
  if (!r.viaSimilarity.unknown()) r.agrees = (r.viaTyping == r.viaSimilarity.related());
  return r;
}

}  // namespace hyperpill
