// Labelled transition system on typing environments.
//
// States pair a process-variable context with a hyperenvironment. Each rule
// acts on one component (or on the context) and leaves the rest alone. Two
// actions can fire together in one step: either they live in different
// components, or they live in the same component — in which case the
// component splits virtually between them (each action sees only its share
// of the remaining channels) and the results re-join. The latter reflects
// that a single component may abstract several parallel parties wired by
// restrictions. Every state also idles: a tau self-loop lets environments
// absorb the internal steps of the processes they abstract.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hyperpill/labels.hpp"
#include "hyperpill/typing.hpp"

namespace hyperpill {

struct EnvState {
  Theta theta;
  HyperEnv env;
};

inline std::string showEnvState(const EnvState& s) {
  return showTheta(s.theta) + "; " + showHyperEnv(s.env);
}

inline bool envEq(const Sigma& sigma, const EnvState& a, const EnvState& b) {
  if (a.theta.size() != b.theta.size()) return false;
  for (const auto& [p, g] : a.theta) {
    auto it = b.theta.find(p);
    if (it == b.theta.end() || !eqSigma(sigma, g, it->second)) return false;
  }
  return eqSigma(sigma, a.env, b.env);
}

struct EnvTransition {
  Label label;
  std::string rule;
  std::optional<EnvState> target;  // concrete successor
  std::function<std::optional<EnvState>(const Type&)> withType;
  std::function<std::optional<EnvState>(const EnvAbs&)> withEnvPayload;
};

namespace detail {

// A transition acts on the state as a patch: replace one component and/or
// adjust the context. Pairs apply two patches to disjoint components, or a
// single merged patch when both actions share one.
struct EnvPatch {
  int comp = -1;
  std::vector<Env> repl;
  std::vector<Name> thetaDel;
  Theta thetaAdd;
};

inline std::optional<EnvState> applyPatches(const Sigma& sigma, const EnvState& s,
                                            const std::vector<EnvPatch>& ps) {
  EnvState out;
  out.theta = s.theta;
  std::map<int, const EnvPatch*> byComp;
  for (const auto& p : ps) {
    if (p.comp >= 0) byComp[p.comp] = &p;
    for (const auto& d : p.thetaDel) {
      if (!out.theta.erase(d)) return std::nullopt;
    }
  }
  for (const auto& p : ps)
    for (const auto& [k, g] : p.thetaAdd) {
      if (out.theta.count(k)) return std::nullopt;
      out.theta.emplace(k, g);
    }
  (void)sigma;
  for (std::size_t i = 0; i < s.env.size(); ++i) {
    auto it = byComp.find(static_cast<int>(i));
    if (it == byComp.end()) {
      out.env.push_back(s.env[i]);
    } else {
      for (const auto& e : it->second->repl)
        if (!e.empty()) out.env.push_back(e);
    }
  }
  return out;
}

inline bool queryHeaded(const Sigma& sigma, const Type& t) {
  try {
    return sigma.headNormal(t)->tag == TypeTag::Query;
  } catch (const Error&) {
    return false;
  }
}

// Try to realise G inside env: an injective assignment of G's components to
// distinct env components together with a field->name bijection whose types
// agree. Only existence matters (the residual state does not change).
inline bool matchFieldsComp(const Sigma& sigma, const Env& fields, const Env& comp) {
  if (fields.size() != comp.size()) return false;
  std::vector<std::pair<Name, Type>> fs(fields.begin(), fields.end());
  std::vector<std::pair<Name, Type>> cs(comp.begin(), comp.end());
  std::vector<bool> used(cs.size(), false);
  std::function<bool(std::size_t)> go = [&](std::size_t i) {
    if (i == fs.size()) return true;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (used[j]) continue;
      if (!eqSigma(sigma, fs[i].second, cs[j].second)) continue;
      used[j] = true;
      if (go(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return go(0);
}

inline bool matchFields(const Sigma& sigma, const HyperEnv& g, const HyperEnv& env) {
  std::vector<bool> used(env.size(), false);
  std::function<bool(std::size_t)> go = [&](std::size_t i) {
    if (i == g.size()) return true;
    for (std::size_t j = 0; j < env.size(); ++j) {
      if (used[j]) continue;
      if (!matchFieldsComp(sigma, g[i], env[j])) continue;
      used[j] = true;
      if (go(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return go(0);
}

// Replacement sub-components of one action together with the positions that
// may carry a hidden link to a co-acting party in the same component.
struct OutcomeCore {
  std::vector<Env> sub;
  std::vector<std::size_t> keep;
};

// One action of a channel x : t that sees `rest` of its component. When
// `wholeComp` is false the action stands for one half of a split component,
// so rules that need the component to themselves are not available.
struct Outcome {
  Act a;
  std::string rule;
  bool schematic = false;
  OutcomeCore core;  // concrete case
  Theta thetaAdd;
  std::function<std::optional<OutcomeCore>(const Type&)> withType;
  std::function<std::optional<std::vector<Name>>(const EnvAbs&)> thetaDelFor;  // send-env
};

inline void actOutcomes(const Sigma& sigma, const EnvState& s, const Name& x, const Type& t,
                        const Env& rest, bool wholeComp, FreshNames& fresh,
                        std::vector<Outcome>& out) {
  Type head;
  try {
    head = sigma.headNormal(t);
  } catch (const Error&) {
    return;
  }
  NameSet avoid = hyperEnvDomain(s.env);
  auto emit = [&](Act a, std::string rule, OutcomeCore core) {
    Outcome o;
    o.a = std::move(a);
    o.rule = std::move(rule);
    o.core = std::move(core);
    out.push_back(std::move(o));
  };
  switch (head->tag) {
    case TypeTag::Tensor: {
      // The rest of the component splits arbitrarily between the
      // continuation and the payload.
      Name x1 = fresh.fresh(x, avoid);
      std::vector<std::pair<Name, Type>> others(rest.begin(), rest.end());
      std::size_t n = others.size();
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Env gamma, delta;
        for (std::size_t k = 0; k < n; ++k)
          (mask >> k & 1 ? delta : gamma).insert(others[k]);
        gamma.emplace(x, head->right);
        delta.emplace(x1, head->left);
        emit(act1(ActTag::Send, x, x1), "split", {{gamma, delta}, {0, 1}});
      }
      break;
    }
    case TypeTag::Parr: {
      Name x1 = fresh.fresh(x, avoid);
      Env e = rest;
      e.emplace(x, head->right);
      e.emplace(x1, head->left);
      emit(act1(ActTag::Recv, x, x1), "join", {{e}, {0}});
      break;
    }
    case TypeTag::One:
      // Closing needs the component to itself.
      if (wholeComp && rest.empty()) emit(act(ActTag::Close, x), "close", {{}, {}});
      break;
    case TypeTag::Bot:
      emit(act(ActTag::Wait, x), "wait", {{rest}, {0}});
      break;
    case TypeTag::Plus: {
      Env l = rest, r = rest;
      l.emplace(x, head->left);
      r.emplace(x, head->right);
      emit(act(ActTag::Inl, x), "select-left", {{l}, {0}});
      emit(act(ActTag::Inr, x), "select-right", {{r}, {0}});
      break;
    }
    case TypeTag::With: {
      Env l = rest, r = rest;
      l.emplace(x, head->left);
      r.emplace(x, head->right);
      emit(act(ActTag::CoInl, x), "offer-left", {{l}, {0}});
      emit(act(ActTag::CoInr, x), "offer-right", {{r}, {0}});
      break;
    }
    case TypeTag::Query: {
      Name x1 = fresh.fresh(x, avoid);
      Env e = rest;
      e.emplace(x1, head->body);
      emit(act1(ActTag::Use, x, x1), "use", {{e}, {0}});
      Env d = rest;
      d.emplace(x, tBot());
      {
        Act a = act(ActTag::Disp, x);
        a.anno = head->body;
        emit(std::move(a), "dispose", {{d}, {0}});
      }
      avoid.insert(x1);
      Name y1 = fresh.fresh(x, avoid);
      avoid.insert(y1);
      Name y2 = fresh.fresh(x, avoid);
      Env u = rest;
      u.emplace(y1, tParr(tQuery(head->body), tQuery(head->body)));
      emit(act2(ActTag::Dup, x, y1, y2), "duplicate", {{u}, {0}});
      break;
    }
    case TypeTag::Bang: {
      // Accepting or duplicating a server requires everything it can see
      // to be client accesses; its share of the component, that is.
      bool restQueries = true;
      for (const auto& [z, zt] : rest)
        if (!queryHeaded(sigma, zt)) restQueries = false;
      if (restQueries) {
        Name x1 = fresh.fresh(x, avoid);
        Env e = rest;
        e.emplace(x1, head->body);
        emit(act1(ActTag::CoUse, x, x1), "server", {{e}, {0}});
        avoid.insert(x1);
        Name y1 = fresh.fresh(x, avoid);
        avoid.insert(y1);
        Name y2 = fresh.fresh(x, avoid);
        Env u = rest;
        u.emplace(y1, tTensor(tBang(head->body), tBang(head->body)));
        emit(act2(ActTag::CoDup, x, y1, y2), "server-duplicate", {{u}, {0}});
      }
      Env d = rest;
      d.emplace(x, tOne());
      {
        Act a = act(ActTag::CoDisp, x);
        a.anno = head->body;
        emit(std::move(a), "server-dispose", {{d}, {0}});
      }
      break;
    }
    case TypeTag::Exists:
    case TypeTag::Forall: {
      Outcome o;
      o.a = act(head->tag == TypeTag::Exists ? ActTag::SendType : ActTag::RecvType, x);
      o.rule = head->tag == TypeTag::Exists ? "send-type" : "recv-type";
      o.schematic = true;
      Env restCopy = rest;
      Name xc = x;
      Name var = head->var;
      Type body = head->body;
      o.withType = [restCopy, xc, var, body](const Type& A) -> std::optional<OutcomeCore> {
        if (!A) return std::nullopt;
        Env c = restCopy;
        c.emplace(xc, substTypeVar(body, var, A));
        return OutcomeCore{{c}, {0}};
      };
      out.push_back(std::move(o));
      break;
    }
    case TypeTag::Provide: {
      // Sending a process needs the component to itself.
      if (!wholeComp || !rest.empty()) break;
      Outcome o;
      o.a = act(ActTag::HoSend, x);
      o.rule = "send-env";
      o.schematic = true;
      o.core = {{}, {}};
      HyperEnv g = head->henv;
      Theta theta = s.theta;
      const Sigma* sig = &sigma;
      o.thetaDelFor = [g, theta, sig](const EnvAbs& abs) -> std::optional<std::vector<Name>> {
        HyperEnv expected;
        try {
          expected = renameFields(g, abs.rho, pNil());
        } catch (const Error&) {
          return std::nullopt;
        }
        if (!eqSigma(*sig, expected, abs.env)) return std::nullopt;
        std::vector<Name> del;
        for (const auto& [q, qg] : abs.theta) {
          auto it = theta.find(q);
          if (it == theta.end() || !eqSigma(*sig, qg, it->second)) return std::nullopt;
          del.push_back(q);
        }
        return del;
      };
      out.push_back(std::move(o));
      break;
    }
    case TypeTag::Assume: {
      NameSet tkeys;
      for (const auto& [q, _] : s.theta) tkeys.insert(q);
      Name pv = fresh.fresh("p", tkeys);
      Act a = act(ActTag::HoRecv, x);
      a.pvar = pv;
      Outcome o;
      o.a = std::move(a);
      o.rule = "recv-env";
      o.core = {{rest}, {0}};
      o.thetaAdd.emplace(pv, head->henv);
      out.push_back(std::move(o));
      break;
    }
    default:
      break;
  }
}

struct EnvSingle {
  Label label;
  std::string rule;
  EnvPatch patch;                                              // concrete
  std::function<std::optional<EnvPatch>(const Type&)> withType;          // type hole
  std::function<std::optional<EnvPatch>(const EnvAbs&)> withEnvPayload;  // payload hole
  bool schematic = false;
  int comp = -1;  // principal component (pairing disjointness)
};

inline void envSingles(const Sigma& sigma, const EnvState& s, FreshNames& fresh,
                       std::vector<EnvSingle>& out) {
  for (std::size_t ci = 0; ci < s.env.size(); ++ci) {
    const Env& comp = s.env[ci];
    for (const auto& [x, t] : comp) {
      Env rest = comp;
      rest.erase(x);
      std::vector<Outcome> outs;
      actOutcomes(sigma, s, x, t, rest, /*wholeComp=*/true, fresh, outs);
      for (auto& o : outs) {
        EnvSingle e;
        e.label = lAct(o.a);
        e.rule = o.rule;
        e.comp = static_cast<int>(ci);
        e.schematic = o.schematic;
        int compIdx = static_cast<int>(ci);
        if (o.withType) {
          auto w = o.withType;
          e.withType = [w, compIdx](const Type& A) -> std::optional<EnvPatch> {
            auto core = w(A);
            if (!core) return std::nullopt;
            EnvPatch p;
            p.comp = compIdx;
            p.repl = std::move(core->sub);
            return p;
          };
        } else if (o.thetaDelFor) {
          auto w = o.thetaDelFor;
          auto sub = o.core.sub;
          e.withEnvPayload = [w, sub, compIdx](const EnvAbs& abs) -> std::optional<EnvPatch> {
            auto del = w(abs);
            if (!del) return std::nullopt;
            EnvPatch p;
            p.comp = compIdx;
            p.repl = sub;
            p.thetaDel = std::move(*del);
            return p;
          };
        } else {
          e.patch.comp = compIdx;
          e.patch.repl = std::move(o.core.sub);
          e.patch.thetaAdd = std::move(o.thetaAdd);
        }
        out.push_back(std::move(e));
      }
    }
    // Forwarder axiom: a two-name component of dual types.
    if (comp.size() == 2) {
      auto it = comp.begin();
      auto [x, tx] = *it;
      ++it;
      auto [y, ty] = *it;
      if (eqSigma(sigma, tx, dual(ty))) {
        for (int flip = 0; flip < 2; ++flip) {
          EnvSingle e;
          e.label = lFwd(flip ? y : x, flip ? x : y);
          e.rule = "forward";
          e.patch.comp = static_cast<int>(ci);
          e.comp = static_cast<int>(ci);
          out.push_back(std::move(e));
        }
      }
    }
  }

  // Substitution: an assumed process variable is realised by a payload; its
  // channels must actually be present in the environment.
  for (const auto& [p, g] : s.theta) {
    if (!matchFields(sigma, g, s.env)) continue;
    EnvSingle e;
    e.label.kind = Label::Kind::Subst;
    e.label.pvar = p;
    e.label.subsAnno = g;
    e.rule = "invoke";
    e.schematic = true;
    Name pv = p;
    Theta theta = s.theta;
    const Sigma* sig = &sigma;
    HyperEnv gCopy = g;
    e.withEnvPayload = [pv, theta, sig, gCopy](const EnvAbs& abs) -> std::optional<EnvPatch> {
      HyperEnv expected;
      try {
        expected = renameFields(gCopy, abs.rho, pNil());
      } catch (const Error&) {
        return std::nullopt;
      }
      if (!eqSigma(*sig, expected, abs.env)) return std::nullopt;
      EnvPatch patch;
      patch.thetaDel.push_back(pv);
      for (const auto& [q, qg] : abs.theta) patch.thetaAdd.emplace(q, qg);
      return patch;
    };
    out.push_back(std::move(e));
  }
}

inline EnvTransition materialise(const Sigma& sigma, const EnvState& s, const EnvSingle& e) {
  EnvTransition t;
  t.label = e.label;
  t.rule = e.rule;
  if (!e.schematic) {
    t.target = applyPatches(sigma, s, {e.patch});
  }
  if (e.withType) {
    auto w = e.withType;
    EnvState st = s;
    const Sigma* sig = &sigma;
    t.withType = [w, st, sig](const Type& A) -> std::optional<EnvState> {
      auto p = w(A);
      if (!p) return std::nullopt;
      return applyPatches(*sig, st, {*p});
    };
  }
  if (e.withEnvPayload) {
    auto w = e.withEnvPayload;
    EnvState st = s;
    const Sigma* sig = &sigma;
    t.withEnvPayload = [w, st, sig](const EnvAbs& a) -> std::optional<EnvState> {
      auto p = w(a);
      if (!p) return std::nullopt;
      return applyPatches(*sig, st, {*p});
    };
  }
  return t;
}

// Merge two half-outcomes of one component into a replacement list: the two
// nominated carrier positions join into one sub-component.
inline std::optional<std::vector<Env>> mergeCores(const OutcomeCore& a, std::size_t ka,
                                                  const OutcomeCore& b, std::size_t kb) {
  std::vector<Env> repl;
  Env joined = a.sub[ka];
  for (const auto& [n, ty] : b.sub[kb])
    if (!joined.emplace(n, ty).second) return std::nullopt;
  repl.push_back(std::move(joined));
  for (std::size_t i = 0; i < a.sub.size(); ++i)
    if (i != ka) repl.push_back(a.sub[i]);
  for (std::size_t i = 0; i < b.sub.size(); ++i)
    if (i != kb) repl.push_back(b.sub[i]);
  return repl;
}

// Rename the bound names of each `have` act to those of its `want` act inside
// the state (they occur as channels there). All acts of a label are aligned in
// one simultaneous renaming: the bound-name spaces of the two sides can
// overlap, so sequential per-act renaming would cascade. Entries whose source
// never occurs in the state rename nothing and are dropped; the rest must
// stay injective and collision-free.
inline std::optional<EnvState> alignEnvTargetActs(
    const std::vector<std::pair<const Act*, const Act*>>& acts, EnvState s) {
  std::map<Name, Name> ren;
  std::map<Name, Name> pren;
  for (const auto& [have, want] : acts) {
    auto need = [&](const Name& f, const Name& t) {
      if (f == t) return true;
      if (f.empty() || t.empty()) return false;
      auto it = ren.find(f);
      if (it != ren.end()) return it->second == t;
      ren.emplace(f, t);
      return true;
    };
    if (!need(have->arg1, want->arg1) || !need(have->arg2, want->arg2))
      return std::nullopt;
    if (have->tag == ActTag::HoRecv && have->pvar != want->pvar) {
      if (want->pvar.empty()) return std::nullopt;
      auto it = pren.find(have->pvar);
      if (it != pren.end() && it->second != want->pvar) return std::nullopt;
      pren.emplace(have->pvar, want->pvar);
    }
  }
  if (!pren.empty()) {
    std::map<Name, HyperEnv> th;
    for (const auto& [pv, g] : s.theta) {
      auto it = pren.find(pv);
      if (!th.emplace(it == pren.end() ? pv : it->second, g).second)
        return std::nullopt;
    }
    s.theta = std::move(th);
  }
  if (ren.empty()) return s;
  NameSet dom = hyperEnvDomain(s.env);
  for (auto it = ren.begin(); it != ren.end();)
    it = dom.count(it->first) ? std::next(it) : ren.erase(it);
  if (ren.empty()) return s;
  std::set<Name> targets;
  for (const auto& [f, t] : ren) {
    if (dom.count(t) && !ren.count(t)) return std::nullopt;
    if (!targets.insert(t).second) return std::nullopt;
  }
  HyperEnv out;
  for (const auto& comp : s.env) {
    Env e;
    for (const auto& [x, ty] : comp) {
      auto it = ren.find(x);
      if (!e.emplace(it == ren.end() ? x : it->second, ty).second)
        return std::nullopt;
    }
    out.push_back(std::move(e));
  }
  s.env = std::move(out);
  return s;
}

inline std::optional<EnvState> alignEnvTarget(const Act& have, const Act& want, EnvState s) {
  return alignEnvTargetActs({{&have, &want}}, std::move(s));
}

// Pair acts agree up to their bound names: same tag, subject and type data.
inline bool actEqModBound(const Sigma& sigma, const Act& a, const Act& b) {
  return a.tag == b.tag && a.subject == b.subject && typeEq(sigma, a.type, b.type) &&
         typeEq(sigma, a.anno, b.anno);
}

}  // namespace detail

// Full transition menu of an environment state. Schematic entries (type
// holes, higher-order payload holes) carry instantiation closures.
inline std::vector<EnvTransition> envStep(const Sigma& sigma, const EnvState& s,
                                          FreshNames& fresh) {
  std::vector<detail::EnvSingle> singles;
  detail::envSingles(sigma, s, fresh, singles);

  std::vector<EnvTransition> out;
  // Idle.
  {
    EnvTransition t;
    t.label = lTau();
    t.rule = "idle";
    t.target = s;
    out.push_back(std::move(t));
  }
  for (const auto& e : singles) out.push_back(detail::materialise(sigma, s, e));

  // The same pair can arise from several virtual splits of a component; it
  // then differs only in the bound names its halves invented. Dedup up to
  // that renaming (schematic entries are compared on a probe instance).
  auto concretise = [&](const EnvTransition& t) -> std::optional<EnvState> {
    if (t.target) return t.target;
    if (t.withType) return t.withType(tOne());
    return std::nullopt;
  };
  auto samePair = [&](const EnvTransition& o, const EnvTransition& t) {
    if (bool(o.withType) != bool(t.withType)) return false;
    if (bool(o.withEnvPayload) != bool(t.withEnvPayload)) return false;
    if (!detail::actEqModBound(sigma, o.label.a, t.label.a)) return false;
    if (!detail::actEqModBound(sigma, o.label.b, t.label.b)) return false;
    auto oc = concretise(o);
    auto tc = concretise(t);
    if (!oc || !tc) return false;
    auto s2 = detail::alignEnvTargetActs(
        {{&t.label.a, &o.label.a}, {&t.label.b, &o.label.b}}, *tc);
    if (!s2) return false;
    return envEq(sigma, *s2, *oc);
  };
  auto pushPair = [&](EnvTransition t) {
    for (const auto& o : out) {
      if (o.rule != t.rule) continue;
      if (samePair(o, t)) return;
    }
    out.push_back(std::move(t));
  };

  // Two actions in different components fire together.
  for (std::size_t i = 0; i < singles.size(); ++i) {
    for (std::size_t j = i + 1; j < singles.size(); ++j) {
      const auto& a = singles[i];
      const auto& b = singles[j];
      if (a.label.kind != Label::Kind::Action || b.label.kind != Label::Kind::Action) continue;
      if (a.comp < 0 || b.comp < 0 || a.comp == b.comp) continue;
      if (a.schematic && b.schematic) continue;
      EnvTransition t;
      t.label.kind = Label::Kind::Pair;
      t.label.a = a.label.a;
      t.label.b = b.label.a;
      t.rule = "sync";
      if (!a.schematic && !b.schematic) {
        t.target = detail::applyPatches(sigma, s, {a.patch, b.patch});
        if (!t.target) continue;
      } else {
        const auto& hole = a.schematic ? a : b;
        const auto& solid = a.schematic ? b : a;
        detail::EnvPatch sp = solid.patch;
        EnvState st = s;
        const Sigma* sig = &sigma;
        if (hole.withType) {
          auto w = hole.withType;
          t.withType = [w, sp, st, sig](const Type& A) -> std::optional<EnvState> {
            auto p = w(A);
            if (!p) return std::nullopt;
            return detail::applyPatches(*sig, st, {*p, sp});
          };
        } else if (hole.withEnvPayload) {
          auto w = hole.withEnvPayload;
          t.withEnvPayload = [w, sp, st, sig](const EnvAbs& abs) -> std::optional<EnvState> {
            auto p = w(abs);
            if (!p) return std::nullopt;
            return detail::applyPatches(*sig, st, {*p, sp});
          };
        } else {
          continue;
        }
      }
      pushPair(std::move(t));
    }
  }

  // Two actions in the same component fire together: the component splits
  // between them and the carrier halves re-join.
  for (std::size_t ci = 0; ci < s.env.size(); ++ci) {
    const Env& comp = s.env[ci];
    if (comp.size() < 2) continue;
    std::vector<std::pair<Name, Type>> names(comp.begin(), comp.end());
    for (std::size_t xi = 0; xi < names.size(); ++xi) {
      for (std::size_t yi = xi + 1; yi < names.size(); ++yi) {
        Env others;
        for (std::size_t k = 0; k < names.size(); ++k)
          if (k != xi && k != yi) others.insert(names[k]);
        std::vector<std::pair<Name, Type>> ov(others.begin(), others.end());
        std::size_t n = ov.size();
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
          Env r1, r2;
          for (std::size_t k = 0; k < n; ++k) (mask >> k & 1 ? r2 : r1).insert(ov[k]);
          std::vector<detail::Outcome> o1, o2;
          detail::actOutcomes(sigma, s, names[xi].first, names[xi].second, r1,
                              /*wholeComp=*/false, fresh, o1);
          detail::actOutcomes(sigma, s, names[yi].first, names[yi].second, r2,
                              /*wholeComp=*/false, fresh, o2);
          for (const auto& a : o1) {
            for (const auto& b : o2) {
              if (a.schematic && b.schematic) continue;
              if (a.thetaDelFor || b.thetaDelFor) continue;
              EnvTransition t;
              t.label.kind = Label::Kind::Pair;
              t.label.a = a.a;
              t.label.b = b.a;
              t.rule = "sync";
              int compIdx = static_cast<int>(ci);
              if (!a.schematic && !b.schematic) {
                for (std::size_t ka : a.core.keep) {
                  for (std::size_t kb : b.core.keep) {
                    auto repl = detail::mergeCores(a.core, ka, b.core, kb);
                    if (!repl) continue;
                    detail::EnvPatch p;
                    p.comp = compIdx;
                    p.repl = std::move(*repl);
                    p.thetaAdd = a.thetaAdd;
                    for (const auto& [q, g] : b.thetaAdd) p.thetaAdd.emplace(q, g);
                    EnvTransition u = t;
                    u.target = detail::applyPatches(sigma, s, {p});
                    if (u.target) pushPair(std::move(u));
                  }
                }
              } else {
                const auto& hole = a.schematic ? a : b;
                const auto& solid = a.schematic ? b : a;
                auto w = hole.withType;
                if (!w) continue;
                detail::OutcomeCore sc = solid.core;
                Theta add = solid.thetaAdd;
                for (const auto& [q, g] : hole.thetaAdd) add.emplace(q, g);
                bool holeFirst = a.schematic;
                EnvState st = s;
                const Sigma* sig = &sigma;
                t.withType = [w, sc, add, holeFirst, compIdx, st,
                              sig](const Type& A) -> std::optional<EnvState> {
                  auto hc = w(A);
                  if (!hc) return std::nullopt;
                  // Any carrier pairing would do for driving; try them all
                  // and return the first that applies.
                  for (std::size_t ka : hc->keep) {
                    for (std::size_t kb : sc.keep) {
                      auto repl = holeFirst ? detail::mergeCores(*hc, ka, sc, kb)
                                            : detail::mergeCores(sc, kb, *hc, ka);
                      if (!repl) continue;
                      detail::EnvPatch p;
                      p.comp = compIdx;
                      p.repl = std::move(*repl);
                      p.thetaAdd = add;
                      if (auto r = detail::applyPatches(*sig, st, {p})) return r;
                    }
                  }
                  return std::nullopt;
                };
                pushPair(std::move(t));
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Drive the environment with one concrete label: all successors, with the
// label's own bound names.

inline std::vector<EnvState> envSuccessors(const Sigma& sigma, const EnvState& s,
                                           const Label& l) {
  FreshNames fresh;
  std::vector<EnvState> out;
  auto push = [&](std::optional<EnvState> st) {
    if (!st) return;
    for (const auto& o : out)
      if (envEq(sigma, o, *st)) return;
    out.push_back(std::move(*st));
  };

  if (l.kind == Label::Kind::Tau) {
    out.push_back(s);
    return out;
  }

  auto menu = envStep(sigma, s, fresh);
  for (auto& t : menu) {
    if (t.label.kind != l.kind) continue;
    switch (l.kind) {
      case Label::Kind::Fwd:
        if (t.label.x == l.x && t.label.y == l.y && t.target) push(*t.target);
        break;
      case Label::Kind::Action: {
        if (t.label.a.tag != l.a.tag || t.label.a.subject != l.a.subject) break;
        if (t.withType) {
          if (!l.a.type) break;
          if (auto st = t.withType(l.a.type)) push(detail::alignEnvTarget(t.label.a, l.a, *st));
          break;
        }
        if (t.withEnvPayload) {
          if (!l.a.envPayload) break;
          if (auto st = t.withEnvPayload(*l.a.envPayload)) push(*st);
          break;
        }
        if (!typeEq(sigma, t.label.a.type, l.a.type)) break;
        if (t.target) push(detail::alignEnvTarget(t.label.a, l.a, *t.target));
        break;
      }
      case Label::Kind::Pair: {
        for (int flip = 0; flip < 2; ++flip) {
          const Act& la = flip ? l.b : l.a;
          const Act& lb = flip ? l.a : l.b;
          if (t.label.a.tag != la.tag || t.label.a.subject != la.subject) continue;
          if (t.label.b.tag != lb.tag || t.label.b.subject != lb.subject) continue;
          if (t.withType) {
            auto isTypeHole = [](const Act& a) {
              return (a.tag == ActTag::SendType || a.tag == ActTag::RecvType) && !a.type;
            };
            const Act& hole = isTypeHole(t.label.a) ? la : lb;
            if (!hole.type) continue;
            if (auto st = t.withType(hole.type))
              push(detail::alignEnvTargetActs(
                  {{&t.label.a, &la}, {&t.label.b, &lb}}, *st));
            continue;
          }
          if (t.withEnvPayload) {
            auto isPayloadHole = [](const Act& a) {
              return a.tag == ActTag::HoSend && !a.envPayload;
            };
            const Act& hole = isPayloadHole(t.label.a) ? la : lb;
            if (!hole.envPayload) continue;
            if (auto st = t.withEnvPayload(*hole.envPayload))
              push(detail::alignEnvTargetActs(
                  {{&t.label.a, &la}, {&t.label.b, &lb}}, *st));
            continue;
          }
          if (!typeEq(sigma, t.label.a.type, la.type)) continue;
          if (!typeEq(sigma, t.label.b.type, lb.type)) continue;
          if (t.target)
            push(detail::alignEnvTargetActs(
                {{&t.label.a, &la}, {&t.label.b, &lb}}, *t.target));
        }
        break;
      }
      case Label::Kind::Subst: {
        if (t.label.pvar != l.pvar) break;
        if (!t.withEnvPayload || !l.envPayload) break;
        if (auto st = t.withEnvPayload(*l.envPayload)) push(*st);
        break;
      }
      default:
        break;
    }
  }

  // A pair both of whose halves need instantiation (say a type chosen at an
  // exists and a type received at a forall) never materialises as a menu
  // entry, because a transition carries at most one hole.  On disjoint
  // components a pair is exactly the composition of its halves, so a
  // concrete pair label can also be answered by firing them in sequence.
  if (l.kind == Label::Kind::Pair) {
    auto compOf = [&](const Name& x) -> int {
      for (std::size_t i = 0; i < s.env.size(); ++i)
        if (s.env[i].count(x)) return static_cast<int>(i);
      return -1;
    };
    int ca = compOf(l.a.subject), cb = compOf(l.b.subject);
    if (ca >= 0 && cb >= 0 && ca != cb) {
      Label la, lb;
      la.kind = Label::Kind::Action;
      la.a = l.a;
      lb.kind = Label::Kind::Action;
      lb.a = l.b;
      for (const auto& s1 : envSuccessors(sigma, s, la))
        for (auto& s2 : envSuccessors(sigma, s1, lb)) push(s2);
    }
  }
  return out;
}

// Membership test: does the environment system admit s --l--> to?
inline bool envAdmits(const Sigma& sigma, const EnvState& s, const Label& l,
                      const EnvState& to) {
  for (const auto& st : envSuccessors(sigma, s, l))
    if (envEq(sigma, st, to)) return true;
  return false;
}

}  // namespace hyperpill
