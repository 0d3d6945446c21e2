// Labelled transition system on typing derivations.
//
// A derivation steps by stepping its subject process, transporting the
// judgement along the label, and re-deriving the successor's typing. Typing
// is syntax-directed, so the re-derivation is unique when it exists; the
// environment system is consulted as a menu membership check, which makes
// every derivation step carry its own session-fidelity certificate.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperpill/env_lts.hpp"
#include "hyperpill/proc_lts.hpp"
#include "hyperpill/typing.hpp"

namespace hyperpill {

// Payload of a higher-order derivation label: a closed abstraction whose body
// is itself a derivation.
struct DerAbs {
  Record rho;
  Derivation deriv;
};

struct DerTransition {
  Label label;  // enriched with disposal annotations and payload environments
  std::string rule;
  std::optional<Derivation> target;
  std::optional<DerAbs> payloadDeriv;  // HoSend: the sent payload, re-derived
  std::function<std::optional<Derivation>(const Type&)> withType;
  std::function<std::optional<Derivation>(const DerAbs&)> withDerPayload;
};

inline EnvState envOf(const Derivation& d) { return EnvState{d.theta, d.env}; }

namespace detail {

// Transport the flat name->type view and the context along one action.
// Returns false when the action does not fit the types (the caller records
// the issue); `anno` receives the disposal annotation where applicable.
struct FlatState {
  Theta theta;
  Env map;
};

inline bool transportAct(const Sigma& sigma, FlatState& st, Act& a) {
  auto it = st.map.find(a.subject);
  if (it == st.map.end()) return false;
  Type head;
  try {
    head = sigma.headNormal(it->second);
  } catch (const Error&) {
    return false;
  }
  switch (a.tag) {
    case ActTag::Close:
      if (head->tag != TypeTag::One) return false;
      st.map.erase(a.subject);
      return true;
    case ActTag::Wait:
      if (head->tag != TypeTag::Bot) return false;
      st.map.erase(a.subject);
      return true;
    case ActTag::Send:
      if (head->tag != TypeTag::Tensor) return false;
      st.map[a.subject] = head->right;
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, head->left);
      return true;
    case ActTag::Recv:
      if (head->tag != TypeTag::Parr) return false;
      st.map[a.subject] = head->right;
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, head->left);
      return true;
    case ActTag::Inl:
      if (head->tag != TypeTag::Plus) return false;
      st.map[a.subject] = head->left;
      return true;
    case ActTag::Inr:
      if (head->tag != TypeTag::Plus) return false;
      st.map[a.subject] = head->right;
      return true;
    case ActTag::CoInl:
      if (head->tag != TypeTag::With) return false;
      st.map[a.subject] = head->left;
      return true;
    case ActTag::CoInr:
      if (head->tag != TypeTag::With) return false;
      st.map[a.subject] = head->right;
      return true;
    case ActTag::SendType:
      if (head->tag != TypeTag::Exists || !a.type) return false;
      st.map[a.subject] = substTypeVar(head->body, head->var, a.type);
      return true;
    case ActTag::RecvType:
      if (head->tag != TypeTag::Forall || !a.type) return false;
      st.map[a.subject] = substTypeVar(head->body, head->var, a.type);
      return true;
    case ActTag::Use:
      if (head->tag != TypeTag::Query) return false;
      st.map.erase(a.subject);
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, head->body);
      return true;
    case ActTag::CoUse:
      if (head->tag != TypeTag::Bang) return false;
      st.map.erase(a.subject);
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, head->body);
      return true;
    case ActTag::Dup:
      if (head->tag != TypeTag::Query) return false;
      st.map.erase(a.subject);
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, tParr(tQuery(head->body), tQuery(head->body)));
      return true;
    case ActTag::CoDup:
      if (head->tag != TypeTag::Bang) return false;
      st.map.erase(a.subject);
      if (st.map.count(a.arg1)) return false;
      st.map.emplace(a.arg1, tTensor(tBang(head->body), tBang(head->body)));
      return true;
    case ActTag::Disp:
      if (head->tag != TypeTag::Query) return false;
      st.map[a.subject] = tBot();
      a.anno = head->body;
      return true;
    case ActTag::CoDisp:
      if (head->tag != TypeTag::Bang) return false;
      st.map[a.subject] = tOne();
      a.anno = head->body;
      return true;
    case ActTag::HoSend: {
      if (head->tag != TypeTag::Provide || !a.payload) return false;
      st.map.erase(a.subject);
      // The payload takes its slice of the context with it.
      NameSet fp = freeProcVars(a.payload->body);
      for (const auto& q : fp) {
        if (!st.theta.count(q)) return false;
        st.theta.erase(q);
      }
      return true;
    }
    case ActTag::HoRecv:
      if (head->tag != TypeTag::Assume || a.pvar.empty()) return false;
      st.map.erase(a.subject);
      if (st.theta.count(a.pvar)) return false;
      st.theta.emplace(a.pvar, head->henv);
      return true;
  }
  return false;
}

inline bool transportLabel(const Sigma& sigma, FlatState& st, Label& l) {
  switch (l.kind) {
    case Label::Kind::Tau:
      return true;
    case Label::Kind::Action:
      return transportAct(sigma, st, l.a);
    case Label::Kind::Pair:
      return transportAct(sigma, st, l.a) && transportAct(sigma, st, l.b);
    case Label::Kind::Fwd: {
      auto ix = st.map.find(l.x), iy = st.map.find(l.y);
      if (ix == st.map.end() || iy == st.map.end()) return false;
      if (!eqSigma(sigma, ix->second, dual(iy->second))) return false;
      st.map.erase(l.x);
      st.map.erase(l.y);
      return true;
    }
    case Label::Kind::Subst:
      // Handled by the caller (the payload supplies the context delta).
      return true;
  }
  return false;
}

}  // namespace detail

// Enumerate the derivation's transition menu. Entries that fail to re-derive
// are dropped; when `issues` is given, each dropped entry leaves a note
// (metatheory checks treat any note as a failure).
inline std::vector<DerTransition> derStep(const Sigma& sigma, const Derivation& d,
                                          FreshNames& fresh,
                                          std::vector<std::string>* issues = nullptr) {
  std::vector<DerTransition> out;
  detail::Checker checker(sigma);
  Env flat = flattenHyperEnv(d.env);
  auto note = [&](const std::string& what, const Label& l) {
    if (issues) issues->push_back(showLabel(l) + ": " + what);
  };

  // Re-derive one successor: transports the label over the flat judgement,
  // infers the successor derivation and checks the environment system admits
  // the move.
  auto rederive = [&](Label l, const Proc& succ,
                      const Theta* thetaOverride) -> std::optional<Derivation> {
    detail::FlatState st{thetaOverride ? *thetaOverride : d.theta, flat};
    if (!detail::transportLabel(sigma, st, l)) {
      note("label does not fit the judgement", l);
      return std::nullopt;
    }
    NameSet fn = freeNames(succ);
    for (const auto& x : fn)
      if (!st.map.count(x)) {
        note("successor name '" + x + "' left untyped", l);
        return std::nullopt;
      }
    for (auto it = st.map.begin(); it != st.map.end();) {
      if (!fn.count(it->first)) {
        note("type for '" + it->first + "' has no successor occurrence", l);
        return std::nullopt;
      }
      ++it;
    }
    Derivation nd;
    try {
      nd = checker.infer(st.theta, succ, st.map);
    } catch (const Error& e) {
      note(std::string("successor fails to type: ") + e.what(), l);
      return std::nullopt;
    }
    if (!envAdmits(sigma, envOf(d), l, envOf(nd))) {
      note("environment system does not admit the move", l);
      return std::nullopt;
    }
    return nd;
  };

  for (auto& t : procStep(sigma, d.term, fresh)) {
    DerTransition dt;
    dt.label = t.label;
    dt.rule = t.rule;

    if (t.label.kind == Label::Kind::Subst) {
      // Invocation: schematic over a derivation payload.
      if (!t.withPayload) continue;
      Name pvar = t.label.pvar;
      auto thIt = d.theta.find(pvar);
      if (thIt == d.theta.end()) {
        note("invoked variable not in context", t.label);
        continue;
      }
      dt.label.subsAnno = thIt->second;
      auto wp2 = t.withPayload;
      Label tmpl = dt.label;
      dt.withDerPayload = [&sigma, d, pvar, tmpl, wp2](const DerAbs& abs)
          -> std::optional<Derivation> {
        detail::Checker ck(sigma);
        auto it = d.theta.find(pvar);
        if (it == d.theta.end()) return std::nullopt;
        // The payload must provide exactly the declared hyperenvironment,
        // renamed along its record.
        HyperEnv expected;
        try {
          expected = detail::renameFields(it->second, abs.rho, abs.deriv.term);
        } catch (const Error&) {
          return std::nullopt;
        }
        if (!eqSigma(sigma, abs.deriv.env, expected)) return std::nullopt;
        auto succ = wp2(Abstraction{abs.rho, abs.deriv.term});
        if (!succ) return std::nullopt;
        Theta th = d.theta;
        th.erase(pvar);
        for (const auto& [q, g] : abs.deriv.theta) {
          if (th.count(q)) return std::nullopt;
          th.emplace(q, g);
        }
        Env m = flattenHyperEnv(d.env);
        NameSet fn = freeNames(*succ);
        for (const auto& x : fn)
          if (!m.count(x)) return std::nullopt;
        for (const auto& [x, ty] : m)
          if (!fn.count(x)) return std::nullopt;
        Derivation nd;
        try {
          nd = ck.infer(th, *succ, m);
        } catch (const Error&) {
          return std::nullopt;
        }
        Label l = tmpl;
        l.payload = std::make_shared<const Abstraction>(Abstraction{abs.rho, abs.deriv.term});
        EnvAbs ea;
        ea.rho = abs.rho;
        ea.theta = abs.deriv.theta;
        ea.env = abs.deriv.env;
        l.envPayload = std::make_shared<const EnvAbs>(std::move(ea));
        if (!envAdmits(sigma, envOf(d), l, envOf(nd))) return std::nullopt;
        return nd;
      };
      out.push_back(std::move(dt));
      continue;
    }

    if (isSchema(t.label)) {
      // A type hole: the instantiation runs the whole pipeline.
      if (!t.withType) continue;
      auto wt = t.withType;
      Label tmpl = t.label;
      Derivation base = d;
      const Sigma* sig = &sigma;
      Env flatCopy = flat;
      dt.withType = [wt, tmpl, base, sig, flatCopy](const Type& A) -> std::optional<Derivation> {
        Label l = tmpl;
        if (l.kind == Label::Kind::Action) {
          l.a.type = A;
        } else if (l.kind == Label::Kind::Pair) {
          if (isSchema(l.a)) l.a.type = A;
          else l.b.type = A;
        }
        detail::FlatState st{base.theta, flatCopy};
        if (!detail::transportLabel(*sig, st, l)) return std::nullopt;
        Proc succ = wt(A);
        if (!succ) return std::nullopt;
        NameSet fn = freeNames(succ);
        for (const auto& x : fn)
          if (!st.map.count(x)) return std::nullopt;
        for (const auto& [x, ty] : st.map)
          if (!fn.count(x)) return std::nullopt;
        detail::Checker ck(*sig);
        Derivation nd;
        try {
          nd = ck.infer(st.theta, succ, st.map);
        } catch (const Error&) {
          return std::nullopt;
        }
        if (!envAdmits(*sig, envOf(base), l, envOf(nd))) return std::nullopt;
        return nd;
      };
      out.push_back(std::move(dt));
      continue;
    }

    if (!t.target) continue;

    // Higher-order send: re-derive the payload and attach both payload
    // sorts to the act before transporting. Sends occur alone and inside
    // simultaneous pairs; the environment system needs the interface on the
    // act either way.
    auto enrichHoSend = [&](Act& a) -> bool {
      if (a.tag != ActTag::HoSend || !a.payload) return true;
      auto sIt = flat.find(a.subject);
      if (sIt == flat.end()) {
        note("sender not typed", t.label);
        return false;
      }
      Type head;
      try {
        head = sigma.headNormal(sIt->second);
      } catch (const Error&) {
        note("sender type ill-formed", t.label);
        return false;
      }
      if (head->tag != TypeTag::Provide) {
        note("sender not a provider", t.label);
        return false;
      }
      const Abstraction& abs = *a.payload;
      Theta slice;
      NameSet fp = freeProcVars(abs.body);
      for (const auto& q : fp) {
        auto qi = d.theta.find(q);
        if (qi != d.theta.end()) slice.emplace(qi->first, qi->second);
      }
      HyperEnv payloadEnv;
      Derivation pd;
      try {
        payloadEnv = detail::renameFields(head->henv, abs.rho, abs.body);
        pd = checker.check(slice, abs.body, payloadEnv);
      } catch (const Error& e) {
        note(std::string("payload fails to type: ") + e.what(), t.label);
        return false;
      }
      if (!dt.payloadDeriv) dt.payloadDeriv = DerAbs{abs.rho, pd};
      EnvAbs ea;
      ea.rho = abs.rho;
      ea.theta = std::move(slice);
      ea.env = std::move(payloadEnv);
      a.envPayload = std::make_shared<const EnvAbs>(std::move(ea));
      return true;
    };
    if (dt.label.kind == Label::Kind::Action) {
      if (!enrichHoSend(dt.label.a)) continue;
    } else if (dt.label.kind == Label::Kind::Pair) {
      if (!enrichHoSend(dt.label.a) || !enrichHoSend(dt.label.b)) continue;
    }

    auto nd = rederive(dt.label, t.target, nullptr);
    if (!nd) continue;
    // transportLabel annotates disposals in place; recover them.
    {
      detail::FlatState st{d.theta, flat};
      Label l2 = dt.label;
      if (detail::transportLabel(sigma, st, l2)) dt.label = l2;
    }
    dt.target = *nd;
    out.push_back(std::move(dt));
  }
  return out;
}

// Follow one concrete label from a derivation.
inline std::optional<Derivation> derStepWithLabel(const Sigma& sigma, const Derivation& d,
                                                  const Label& l, FreshNames& fresh) {
  // Drive the subject first, then re-derive.
  auto succ = procStepWithLabel(sigma, d.term, l, fresh);
  if (!succ) return std::nullopt;
  detail::Checker checker(sigma);
  detail::FlatState st{d.theta, flattenHyperEnv(d.env)};
  Label l2 = l;
  if (l2.kind == Label::Kind::Subst) {
    if (!l2.payload) return std::nullopt;
    // Theta delta comes from the payload's own needs.
    auto it = d.theta.find(l2.pvar);
    if (it == d.theta.end()) return std::nullopt;
    st.theta.erase(l2.pvar);
    NameSet fp = freeProcVars(l2.payload->body);
    for (const auto& q : fp)
      if (!st.theta.count(q)) return std::nullopt;  // payload context unknown
  } else if (!detail::transportLabel(sigma, st, l2)) {
    return std::nullopt;
  }
  NameSet fn = freeNames(*succ);
  for (const auto& x : fn)
    if (!st.map.count(x)) return std::nullopt;
  for (const auto& [x, ty] : st.map)
    if (!fn.count(x)) return std::nullopt;
  try {
    return checker.infer(st.theta, *succ, st.map);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace hyperpill
