// Transition labels shared by the three transition systems (processes,
// derivations, typing environments).
//
// An Act is a single observable action; a Label is τ, a forwarder, an
// unordered pair of actions, a single action, or a substitution of a
// process variable. Higher-order payloads come in two sorts — a process
// abstraction or an environment abstraction — so that process and
// environment systems can emit the same label spine and let games
// compare payloads recursively.
#pragma once

#include <memory>
#include <optional>
#include <sstream>

#include "hyperpill/process.hpp"
#include "hyperpill/types.hpp"

namespace hyperpill {

enum class ActTag {
  Close,     // x[]
  Wait,      // x()
  Send,      // x[y]
  Recv,      // x(y)
  Inl,       // x[inl]
  CoInl,     // x.inl (choice observed left)
  Inr,       // x[inr]
  CoInr,     // x.inr
  Use,       // ?x[y]
  CoUse,     // !x(y)
  Dup,       // ?x[y,z]
  CoDup,     // !x(y,z)
  Disp,      // ?x^ (dispose)
  CoDisp,    // !x^
  SendType,  // x[A]
  RecvType,  // x(A); schematic when the type hole is empty
  HoSend,    // x[(rho)P] or x[(rho)<Theta;G>]
  HoRecv,    // x(p)
};

// Environment-side higher-order payload: a closed environment state
// abstraction (rho)<Theta; G rho>.
struct EnvAbs {
  Record rho;
  std::map<Name, HyperEnv> theta;
  HyperEnv env;  // already renamed along rho
};

struct Act {
  ActTag tag{};
  Name subject;
  Name arg1, arg2;  // bound names (Send/Recv/Use/CoUse y; Dup/CoDup y,z)
  Type type;        // SendType payload; RecvType instantiation (null = schema)
  Type anno;        // Disp/CoDisp annotation on the derivation system
  std::shared_ptr<const Abstraction> payload;  // HoSend process payload
  std::shared_ptr<const EnvAbs> envPayload;    // HoSend environment payload
  Name pvar;                                   // HoRecv bound process variable
};

struct Label {
  enum class Kind { Tau, Action, Pair, Fwd, Subst };
  Kind kind{Kind::Tau};
  Act a, b;   // Action: a; Pair: a and b (unordered)
  Name x, y;  // Fwd endpoints, in emitted order
  // Subst: substitute process variable pvar with a payload.
  Name pvar;
  std::shared_ptr<const Abstraction> payload;
  std::shared_ptr<const EnvAbs> envPayload;
  std::optional<HyperEnv> subsAnno;  // the G in p{(rho)P}^G, when known
};

inline Label lTau() { return Label{}; }
inline Label lAct(Act a) {
  Label l;
  l.kind = Label::Kind::Action;
  l.a = std::move(a);
  return l;
}
inline Label lFwd(const Name& x, const Name& y) {
  Label l;
  l.kind = Label::Kind::Fwd;
  l.x = x;
  l.y = y;
  return l;
}

inline Act act(ActTag t, const Name& subject) {
  Act a;
  a.tag = t;
  a.subject = subject;
  return a;
}
inline Act act1(ActTag t, const Name& subject, const Name& y) {
  Act a = act(t, subject);
  a.arg1 = y;
  return a;
}
inline Act act2(ActTag t, const Name& subject, const Name& y, const Name& z) {
  Act a = act1(t, subject, y);
  a.arg2 = z;
  return a;
}

inline bool isSchema(const Act& a) {
  if (a.tag == ActTag::RecvType) return a.type == nullptr;
  if (a.tag == ActTag::HoSend) return !a.payload && !a.envPayload;
  return false;
}
inline bool isSchema(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Action: return isSchema(l.a);
    case Label::Kind::Pair: return isSchema(l.a) || isSchema(l.b);
    case Label::Kind::Subst: return !l.payload && !l.envPayload;
    default: return false;
  }
}

inline NameSet freeNamesAct(const Act& a) {
  return {a.subject};
}
inline NameSet boundNamesAct(const Act& a) {
  switch (a.tag) {
    case ActTag::Send:
    case ActTag::Recv:
    case ActTag::Use:
    case ActTag::CoUse:
      return {a.arg1};
    case ActTag::Dup:
    case ActTag::CoDup:
      return {a.arg1, a.arg2};
    default:
      return {};
  }
}
// Bound process variables of an action (the higher-order receive).
inline NameSet boundProcVarsAct(const Act& a) {
  if (a.tag == ActTag::HoRecv) return {a.pvar};
  return {};
}
inline NameSet freeProcVarsAct(const Act& a) {
  if (a.tag == ActTag::HoSend && a.payload) return freeProcVars(a.payload->body);
  return {};
}

inline NameSet freeNames(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Tau: return {};
    case Label::Kind::Action: return freeNamesAct(l.a);
    case Label::Kind::Pair: {
      NameSet s = freeNamesAct(l.a);
      s.merge(freeNamesAct(l.b));
      return s;
    }
    case Label::Kind::Fwd: return {l.x, l.y};
    case Label::Kind::Subst: return {};
  }
  return {};
}
inline NameSet boundNames(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Action: return boundNamesAct(l.a);
    case Label::Kind::Pair: {
      NameSet s = boundNamesAct(l.a);
      s.merge(boundNamesAct(l.b));
      return s;
    }
    default: return {};
  }
}
inline NameSet controlNames(const Label& l) {
  NameSet s = freeNames(l);
  s.merge(boundNames(l));
  return s;
}
inline NameSet boundProcVars(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Action: return boundProcVarsAct(l.a);
    case Label::Kind::Pair: {
      NameSet s = boundProcVarsAct(l.a);
      s.merge(boundProcVarsAct(l.b));
      return s;
    }
    default: return {};
  }
}
inline NameSet freeProcVars(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Action: return freeProcVarsAct(l.a);
    case Label::Kind::Pair: {
      NameSet s = freeProcVarsAct(l.a);
      s.merge(freeProcVarsAct(l.b));
      return s;
    }
    case Label::Kind::Subst: {
      NameSet s{l.pvar};
      if (l.payload) s.merge(freeProcVars(l.payload->body));
      return s;
    }
    default: return {};
  }
}

inline std::string showAct(const Act& a) {
  std::ostringstream ss;
  switch (a.tag) {
    case ActTag::Close: ss << a.subject << "[]"; break;
    case ActTag::Wait: ss << a.subject << "()"; break;
    case ActTag::Send: ss << a.subject << "[" << a.arg1 << "]"; break;
    case ActTag::Recv: ss << a.subject << "(" << a.arg1 << ")"; break;
    case ActTag::Inl: ss << a.subject << "[inl]"; break;
    case ActTag::CoInl: ss << a.subject << ".inl"; break;
    case ActTag::Inr: ss << a.subject << "[inr]"; break;
    case ActTag::CoInr: ss << a.subject << ".inr"; break;
    case ActTag::Use: ss << "?" << a.subject << "[" << a.arg1 << "]"; break;
    case ActTag::CoUse: ss << "!" << a.subject << "(" << a.arg1 << ")"; break;
    case ActTag::Dup:
      ss << "?" << a.subject << "[" << a.arg1 << "," << a.arg2 << "]";
      break;
    case ActTag::CoDup:
      ss << "!" << a.subject << "(" << a.arg1 << "," << a.arg2 << ")";
      break;
    case ActTag::Disp:
      ss << "?" << a.subject << "^";
      if (a.anno) ss << "{" << showType(a.anno) << "}";
      break;
    case ActTag::CoDisp:
      ss << "!" << a.subject << "^";
      if (a.anno) ss << "{" << showType(a.anno) << "}";
      break;
    case ActTag::SendType:
      ss << a.subject << "[type " << (a.type ? showType(a.type) : "_") << "]";
      break;
    case ActTag::RecvType:
      ss << a.subject << "(type " << (a.type ? showType(a.type) : "_") << ")";
      break;
    case ActTag::HoSend:
      ss << a.subject << "[(";
      if (a.payload) {
        bool first = true;
        for (const auto& [f, n] : a.payload->rho) {
          if (!first) ss << ",";
          first = false;
          ss << f << "=" << n;
        }
        ss << ") " << showProc(a.payload->body);
      } else if (a.envPayload) {
        bool first = true;
        for (const auto& [f, n] : a.envPayload->rho) {
          if (!first) ss << ",";
          first = false;
          ss << f << "=" << n;
        }
        ss << ") " << showHyperEnv(a.envPayload->env);
      } else {
        ss << ") _";
      }
      ss << "]";
      break;
    case ActTag::HoRecv: ss << a.subject << "(" << a.pvar << ")"; break;
  }
  return ss.str();
}

inline std::string showLabel(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Tau: return "tau";
    case Label::Kind::Action: return showAct(l.a);
    case Label::Kind::Pair: {
      // Unordered: print the lexicographically smaller side first.
      std::string sa = showAct(l.a), sb = showAct(l.b);
      if (sb < sa) std::swap(sa, sb);
      return "<" + sa + ", " + sb + ">";
    }
    case Label::Kind::Fwd: return l.x + "<->" + l.y;
    case Label::Kind::Subst: {
      std::string p = "_";
      if (l.payload) p = showProc(l.payload->body);
      if (l.envPayload) p = showHyperEnv(l.envPayload->env);
      return l.pvar + "{" + p + "}";
    }
  }
  return "?";
}

// Rename a bound name inside a label (used when lifting transitions past
// contexts that clash with the bound name).
inline void renameBound(Act& a, const Name& from, const Name& to) {
  if (a.arg1 == from) a.arg1 = to;
  if (a.arg2 == from) a.arg2 = to;
}
inline void renameBound(Label& l, const Name& from, const Name& to) {
  if (l.kind == Label::Kind::Action || l.kind == Label::Kind::Pair)
    renameBound(l.a, from, to);
  if (l.kind == Label::Kind::Pair) renameBound(l.b, from, to);
}

// ---------------------------------------------------------------------------
// Label equality. Types compare modulo the definition set; pairs compare
// unordered; bound names compare literally (alignment is the caller's job).

inline bool typeEq(const Sigma& sigma, const Type& a, const Type& b) {
  if (!a || !b) return !a && !b;
  return eqSigma(sigma, a, b);
}

inline bool actEq(const Sigma& sigma, const Act& a, const Act& b) {
  if (a.tag != b.tag || a.subject != b.subject) return false;
  if (a.arg1 != b.arg1 || a.arg2 != b.arg2) return false;
  if (!typeEq(sigma, a.type, b.type)) return false;
  // Disposal annotations: strict when both sides carry one; a label without
  // the annotation (the process system) matches any annotated counterpart.
  if (a.anno && b.anno && !eqSigma(sigma, a.anno, b.anno)) return false;
  if ((a.payload != nullptr) != (b.payload != nullptr)) return false;
  if (a.payload) {
    if (a.payload->rho != b.payload->rho) return false;
    if (!alphaEq(a.payload->body, b.payload->body)) return false;
  }
  // Interface payloads follow the same policy: only the typed systems attach
  // them, so presence on one side alone is not a disagreement.
  if (a.envPayload && b.envPayload) {
    if (a.envPayload->rho != b.envPayload->rho) return false;
    if (!eqSigma(sigma, a.envPayload->env, b.envPayload->env)) return false;
  }
  if (a.pvar != b.pvar) return false;
  return true;
}

inline bool labelEq(const Sigma& sigma, const Label& l, const Label& m) {
  if (l.kind != m.kind) return false;
  switch (l.kind) {
    case Label::Kind::Tau:
      return true;
    case Label::Kind::Action:
      return actEq(sigma, l.a, m.a);
    case Label::Kind::Pair:
      return (actEq(sigma, l.a, m.a) && actEq(sigma, l.b, m.b)) ||
             (actEq(sigma, l.a, m.b) && actEq(sigma, l.b, m.a));
    case Label::Kind::Fwd:
      return l.x == m.x && l.y == m.y;
    case Label::Kind::Subst: {
      if (l.pvar != m.pvar) return false;
      if ((l.payload != nullptr) != (m.payload != nullptr)) return false;
      if (l.payload) {
        if (l.payload->rho != m.payload->rho) return false;
        if (!alphaEq(l.payload->body, m.payload->body)) return false;
      }
      if ((l.envPayload != nullptr) != (m.envPayload != nullptr)) return false;
      if (l.envPayload) {
        if (l.envPayload->rho != m.envPayload->rho) return false;
        if (!eqSigma(sigma, l.envPayload->env, m.envPayload->env)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace hyperpill
