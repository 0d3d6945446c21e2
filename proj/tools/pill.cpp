// pill — command-line workbench for .pill files.
//
// Subcommands:
//   check FILE [--goal NAME]          verify the file's expected typings
//   run FILE --proc NAME              execute silent steps, print the trace
//   step FILE --proc NAME             interactive stepper over the full menu
//   bisim FILE --left A --right B     decide behavioural equivalence
//   disentangle FILE --proc NAME      split into independent parallel pieces
//   pack FILE --proc NAME             internalise a typing as a single session
//   eta FILE --type T                 expand a forwarder at a given type
//   encode FILE [--proc NAME]         compile the higher-order layer away
//   fuzz --fragment F --count N       generate derivations, check the laws
//
// Exit codes: 0 success / related / all laws hold; 1 failure / not related;
// 2 undecided within bounds.  --format structured switches reports to
// tab-separated records for scripting.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hyperpill/base.hpp"
#include "hyperpill/deriv_lts.hpp"
#include "hyperpill/equivalence.hpp"
#include "hyperpill/metatheory.hpp"
#include "hyperpill/parser.hpp"
#include "hyperpill/proc_lts.hpp"
#include "hyperpill/process.hpp"
#include "hyperpill/transform.hpp"
#include "hyperpill/types.hpp"
#include "hyperpill/typing.hpp"

namespace {

using namespace hyperpill;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUnknown = 2;

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PillFile loadPill(const std::string& path) {
  try {
    return parsePill(readFile(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

const Proc& findProc(const PillFile& pf, const std::string& name) {
  auto it = pf.procByName.find(name);
  if (it == pf.procByName.end()) throw Error("no process named '" + name + "'");
  return it->second;
}

const CheckDecl& findCheck(const PillFile& pf, const std::string& name) {
  for (const auto& c : pf.checks)
    if (c.proc == name) return c;
  throw Error("no check declaration for '" + name + "'");
}

// Environment-variable fallback for every --seed option.
std::uint64_t envSeed(std::uint64_t fallback) {
  if (const char* s = std::getenv("HYPERPILL_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
      throw Error("HYPERPILL_SEED is not a number: '" + std::string(s) + "'");
    }
  }
  return fallback;
}

std::string canonKey(const Proc& p) { return showProc(canonicalForm(p)); }

int verdictExit(const Verdict& v) {
  if (v.related()) return kExitOk;
  if (v.notRelated()) return kExitFail;
  return kExitUnknown;
}

// --- check -----------------------------------------------------------------

int cmdCheck(const std::string& file, const std::string& goal, bool structured) {
  PillFile pf = loadPill(file);
  std::vector<const CheckDecl*> todo;
  for (const auto& c : pf.checks)
    if (goal.empty() || c.proc == goal) todo.push_back(&c);
  if (!goal.empty() && todo.empty()) throw Error("no check declaration for '" + goal + "'");
  if (todo.empty()) throw Error(file + ": no check declarations");

  int failures = 0;
  for (const CheckDecl* c : todo) {
    try {
      Derivation d = checkProc(pf.sigma, findProc(pf, c->proc), c->env);
      if (structured)
        std::cout << "check\t" << c->proc << "\tok\t" << showHyperEnv(d.env) << "\n";
      else
        std::cout << c->proc << ": ok :: " << showHyperEnv(d.env) << "\n";
    } catch (const Error& e) {
      ++failures;
      if (structured)
        std::cout << "check\t" << c->proc << "\tfail\t" << e.what() << "\n";
      else
        std::cout << c->proc << ": FAIL (line " << c->line << "): " << e.what() << "\n";
    }
  }
  return failures == 0 ? kExitOk : kExitFail;
}

// --- run -------------------------------------------------------------------

int cmdRun(const std::string& file, const std::string& name, int maxSteps,
           std::uint64_t seed, bool useSeed, bool structured) {
  PillFile pf = loadPill(file);
  Proc p = findProc(pf, name);
  Rng rng(envSeed(seed));

  std::map<std::string, int> seen;
  seen.emplace(canonKey(p), 0);
  if (structured)
    std::cout << "state\t0\t" << showProc(p) << "\n";
  else
    std::cout << "  0  " << showProc(p) << "\n";

  bool cycle = false;
  int taken = 0;
  for (; taken < maxSteps; ++taken) {
    auto menu = procStep(pf.sigma, p, pf.fresh);
    std::vector<const ProcTransition*> taus;
    for (const auto& t : menu)
      if (t.label.kind == Label::Kind::Tau && t.target) taus.push_back(&t);
    if (taus.empty()) {
      if (structured)
        std::cout << "stuck\t" << taken << "\n";
      else
        std::cout << "no silent step available after " << taken << " step(s)\n";
      break;
    }
    const ProcTransition* pick =
        useSeed ? taus[static_cast<std::size_t>(
                      rng.range(0, static_cast<int>(taus.size()) - 1))]
                : taus.front();
    p = pick->target;
    if (structured)
      std::cout << "step\t" << (taken + 1) << "\ttau\t" << pick->rule << "\t"
                << showProc(p) << "\n";
    else
      std::cout << "  " << (taken + 1) << "  --tau-->  " << showProc(p) << "   ["
                << pick->rule << "]\n";
    auto [it, fresh] = seen.emplace(canonKey(p), taken + 1);
    if (!fresh) {
      cycle = true;
      if (structured)
        std::cout << "cycle\t" << it->second << "\t" << (taken + 1) << "\n";
      else
        std::cout << "cycle detected: state " << (taken + 1)
                  << " revisits state " << it->second << "\n";
      break;
    }
  }
  if (!cycle && taken == maxSteps) {
    if (structured)
      std::cout << "budget\t" << maxSteps << "\n";
    else
      std::cout << "step budget (" << maxSteps << ") exhausted\n";
  }
  return kExitOk;
}

// --- step (interactive) ----------------------------------------------------

std::optional<Abstraction> parsePayload(const std::string& text) {
  // Reuse the process grammar: a payload literal is exactly what appears
  // between the brackets of an output, so wrap it in one and peel it off.
  Proc p = parseProcIn("wrap[" + text + "].0");
  if (p->tag != ProcTag::HoSend || !p->abs) return std::nullopt;
  return p->abs;
}

int cmdStep(const std::string& file, const std::string& name) {
  PillFile pf = loadPill(file);
  Proc p = findProc(pf, name);

  for (;;) {
    std::cout << "\n" << showProc(p) << "\n";
    auto menu = procStep(pf.sigma, p, pf.fresh);
    if (menu.empty()) {
      std::cout << "no transitions; done.\n";
      return kExitOk;
    }
    for (std::size_t i = 0; i < menu.size(); ++i) {
      std::cout << "  [" << i << "] " << showLabel(menu[i].label) << "   ("
                << menu[i].rule << ")"
                << (menu[i].target ? "" : "   <needs input>") << "\n";
    }
    std::cout << "choice (q to quit): " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line) || line == "q") return kExitOk;
    std::size_t idx = 0;
    try {
      idx = std::stoul(line);
    } catch (...) {
      std::cout << "not a menu index: '" << line << "'\n";
      continue;
    }
    if (idx >= menu.size()) {
      std::cout << "out of range\n";
      continue;
    }
    const ProcTransition& t = menu[idx];
    if (t.target) {
      p = t.target;
      continue;
    }
    // Schematic entries take the missing piece from the user.
    if (t.withType) {
      std::cout << "type to send: " << std::flush;
      if (!std::getline(std::cin, line)) return kExitOk;
      try {
        p = t.withType(parseTypeIn(pf.sigma, line));
      } catch (const Error& e) {
        std::cout << "rejected: " << e.what() << "\n";
      }
      continue;
    }
    if (t.withPayload) {
      std::cout << "payload, as (field = channel, ...) body: " << std::flush;
      if (!std::getline(std::cin, line)) return kExitOk;
      try {
        auto abs = parsePayload(line);
        if (!abs) {
          std::cout << "not a payload literal\n";
          continue;
        }
        if (auto q = t.withPayload(*abs)) {
          p = *q;
        } else {
          std::cout << "payload rejected by the transition\n";
        }
      } catch (const Error& e) {
        std::cout << "rejected: " << e.what() << "\n";
      }
      continue;
    }
    std::cout << "entry cannot be taken\n";
  }
}

// --- bisim -----------------------------------------------------------------

int cmdBisim(const std::string& file, const std::string& left, const std::string& right,
             bool weak, bool simOnly, const ExploreConfig& cfg, bool structured) {
  PillFile pf = loadPill(file);
  Proc a = findProc(pf, left);
  Proc b = findProc(pf, right);
  Verdict v = simOnly ? (weak ? weakSim(pf.sigma, a, b, cfg) : strongSim(pf.sigma, a, b, cfg))
                      : (weak ? weakBisim(pf.sigma, a, b, cfg)
                              : strongBisim(pf.sigma, a, b, cfg));
  if (structured) {
    std::cout << "verdict\t" << showVerdict(v) << "\t" << v.pairsExplored << "\n";
    for (const auto& step : v.trace) std::cout << "attack\t" << step << "\n";
  } else {
    std::cout << left << (simOnly ? " <= " : " ~ ") << right << ": " << showVerdict(v)
              << " (" << v.pairsExplored << " pairs explored)\n";
    if (v.notRelated() && !v.trace.empty()) {
      std::cout << "distinguishing attack:\n";
      for (const auto& step : v.trace) std::cout << "  " << step << "\n";
    }
    if (v.unknown() && !v.note.empty()) std::cout << "undecided: " << v.note << "\n";
  }
  return verdictExit(v);
}

// --- transformations -------------------------------------------------------

int cmdDisentangle(const std::string& file, const std::string& name, bool structured) {
  PillFile pf = loadPill(file);
  Disentangled d = disentangle(findProc(pf, name));
  if (structured)
    std::cout << "disentangled\t" << (d.residual ? "residual" : "clean") << "\t"
              << showProc(d.proc) << "\n";
  else {
    std::cout << showProc(d.proc) << "\n";
    if (d.residual)
      std::cout << "note: some restriction could not be split between pieces\n";
  }
  return kExitOk;
}

int cmdPack(const std::string& file, const std::string& name, const std::string& channel,
            bool structured) {
  PillFile pf = loadPill(file);
  const CheckDecl& c = findCheck(pf, name);
  Derivation d = checkProc(pf.sigma, findProc(pf, name), c.env);
  Proc packed = pack(d, channel);
  Type t = packTensor(d.env, detail::defaultOrders(d.env), channel).type;
  if (structured)
    std::cout << "packed\t" << channel << "\t" << showType(t) << "\t"
              << showProc(packed) << "\n";
  else
    std::cout << showProc(packed) << "\n"
              << ":: " << channel << " : " << showType(t) << "\n";
  return kExitOk;
}

int cmdEta(const std::string& file, const std::string& typeText, const std::string& x,
           const std::string& y, bool structured) {
  Sigma sigma;
  if (!file.empty()) sigma = loadPill(file).sigma;
  Type a = parseTypeIn(sigma, typeText);
  Proc p = etaExpandForwarder(sigma, a, x, y);
  if (structured)
    std::cout << "eta\t" << showType(a) << "\t" << showProc(p) << "\n";
  else
    std::cout << showProc(p) << "\n";
  return kExitOk;
}

int cmdEncode(const std::string& file, const std::string& goal, bool structured) {
  PillFile pf = loadPill(file);
  std::vector<const CheckDecl*> todo;
  for (const auto& c : pf.checks)
    if (goal.empty() || c.proc == goal) todo.push_back(&c);
  if (todo.empty())
    throw Error(goal.empty() ? file + ": no check declarations"
                             : "no check declaration for '" + goal + "'");
  for (const CheckDecl* c : todo) {
    Derivation d = checkProc(pf.sigma, findProc(pf, c->proc), c->env);
    Encoded e = encodeHO(pf.sigma, d);
    if (structured)
      std::cout << "encoded\t" << c->proc << "\t" << showHyperEnv(e.env) << "\t"
                << showProc(e.proc) << "\n";
    else {
      std::cout << c->proc << " :: " << showHyperEnv(e.env) << "\n"
                << showProc(e.proc) << "\n";
    }
  }
  return kExitOk;
}

// --- fuzz ------------------------------------------------------------------

int cmdFuzz(const std::string& fragment, std::size_t count, std::uint64_t seed,
            int depth, bool structured) {
  GenConfig cfg;
  auto frag = parseFragment(fragment);
  if (!frag) throw Error("unknown fragment '" + fragment + "' (mll|pill|hopill)");
  cfg.fragment = *frag;
  cfg.seed = envSeed(seed);
  cfg.maxDepth = depth;
  FuzzResult r = fuzzFragment(cfg, count);
  if (structured) {
    std::cout << "fuzz\t" << showFragment(r.fragment) << "\t" << r.generated << "/"
              << r.requested << "\n";
    for (const auto& [law, n] : r.passed) {
      std::size_t unk = r.unknown.count(law) ? r.unknown.at(law) : 0;
      std::cout << "law\t" << law << "\t" << n << "\t" << unk << "\n";
    }
    for (const auto& f : r.failures) std::cout << "failure\t" << f << "\n";
  } else {
    std::cout << showFuzzResult(r) << "\n";
  }
  return r.failures.empty() ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbench for linear-logic session processes"};
  app.require_subcommand(1);
  bool structured = false;
  app.add_flag("--format-structured,--structured", structured,
               "tab-separated machine-readable output");
  // Also accept `--format structured` as written in docs.
  std::string format;
  app.add_option("--format", format, "output format: text|structured")
      ->check(CLI::IsMember({"text", "structured"}));

  std::string file, goal, procName, left, right, typeText, channel = "x";
  std::string fragment = "mll";
  std::string xName = "x", yName = "y";
  int maxSteps = 64, depth = 6;
  std::uint64_t seed = 0;
  std::size_t count = 100;
  bool weak = false, simOnly = false;
  ExploreConfig cfg = defaultExplore();

  auto* cCheck = app.add_subcommand("check", "verify the file's expected typings");
  cCheck->add_option("file", file)->required();
  cCheck->add_option("--goal", goal, "only this process's declaration");

  auto* cRun = app.add_subcommand("run", "execute silent steps and print the trace");
  cRun->add_option("file", file)->required();
  cRun->add_option("--proc", procName)->required();
  cRun->add_option("--max-steps", maxSteps, "step budget (default 64)");
  auto* runSeed = cRun->add_option("--seed", seed, "randomise choices among silent steps");

  auto* cStep = app.add_subcommand("step", "interactive stepper");
  cStep->add_option("file", file)->required();
  cStep->add_option("--proc", procName)->required();

  auto* cBisim = app.add_subcommand("bisim", "decide behavioural equivalence");
  cBisim->add_option("file", file)->required();
  cBisim->add_option("--left", left)->required();
  cBisim->add_option("--right", right)->required();
  cBisim->add_flag("--weak", weak, "saturate silent steps");
  cBisim->add_flag("--sim", simOnly, "similarity instead of bisimilarity");
  cBisim->add_option("--max-states", cfg.maxStates, "state-pair budget");
  cBisim->add_option("--tau-budget", cfg.tauBudget, "silent-closure bound");
  cBisim->add_option("--payload-depth", cfg.payloadDepth, "payload comparison depth");

  auto* cDis = app.add_subcommand("disentangle", "split into independent pieces");
  cDis->add_option("file", file)->required();
  cDis->add_option("--proc", procName)->required();

  auto* cPack = app.add_subcommand("pack", "internalise a typing as one session");
  cPack->add_option("file", file)->required();
  cPack->add_option("--proc", procName, "process with a check declaration")->required();
  cPack->add_option("--channel", channel, "name for the packed session (default x)");

  auto* cEta = app.add_subcommand("eta", "expand a forwarder at a type");
  cEta->add_option("--type", typeText)->required();
  cEta->add_option("--file", file, "file providing type definitions");
  cEta->add_option("--left", xName, "first endpoint (default x)");
  cEta->add_option("--right", yName, "second endpoint (default y)");

  auto* cEnc = app.add_subcommand("encode", "compile the higher-order layer away");
  cEnc->add_option("file", file)->required();
  cEnc->add_option("--proc", goal, "only this process's declaration");

  auto* cFuzz = app.add_subcommand("fuzz", "generate derivations and check the laws");
  cFuzz->add_option("--fragment", fragment, "mll|pill|hopill")->required();
  cFuzz->add_option("--count", count, "derivations to generate (default 100)");
  cFuzz->add_option("--seed", seed, "base seed (default 0)");
  cFuzz->add_option("--depth", depth, "derivation depth bound (default 6)");

  CLI11_PARSE(app, argc, argv);
  if (format == "structured") structured = true;

  try {
    if (cCheck->parsed()) return cmdCheck(file, goal, structured);
    if (cRun->parsed())
      return cmdRun(file, procName, maxSteps, seed, !runSeed->empty(), structured);
    if (cStep->parsed()) return cmdStep(file, procName);
    if (cBisim->parsed())
      return cmdBisim(file, left, right, weak, simOnly, cfg, structured);
    if (cDis->parsed()) return cmdDisentangle(file, procName, structured);
    if (cPack->parsed()) return cmdPack(file, procName, channel, structured);
    if (cEta->parsed()) return cmdEta(file, typeText, xName, yName, structured);
    if (cEnc->parsed()) return cmdEncode(file, goal, structured);
    if (cFuzz->parsed()) return cmdFuzz(fragment, count, seed, depth, structured);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitFail;
}
