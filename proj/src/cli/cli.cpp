#include "hvc/cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hvc/analysis/analysis.hpp"
#include "hvc/conc/conc.hpp"
#include "hvc/dl/kyx.hpp"
#include "hvc/habs/parser.hpp"
#include "hvc/habs/sema.hpp"
#include "hvc/sim/sim.hpp"
#include "hvc/vcg/vcg.hpp"

namespace hvc::cli {

namespace fs = std::filesystem;

namespace {

// Thrown inside a subcommand to leave with a status.
struct Exit {
  int status;
  std::string message;
};

struct Config {
  std::string input;
  std::string generator = "basic";
  std::string out;
  double horizon = 100;
  double step = 1e-3;
  std::uint64_t seed = 0;
  std::string policy = "deterministic";
  std::string script;
  std::vector<std::string> impact;
  std::vector<std::string> invariants;  // Class=formula
  bool strict = false;
  double tol = 1e-6;
  std::string scheme = "basic";
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Exit{kRuntime, "cannot write " + path.string()};
  out << text;
}

std::vector<analysis::GeneratorKind> generator_kinds(const std::string& list) {
  using analysis::GeneratorKind;
  std::vector<GeneratorKind> out;
  std::stringstream ss(list);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part == "basic") out.push_back(GeneratorKind::Basic);
    else if (part == "local") out.push_back(GeneratorKind::Local);
    else if (part == "structural") out.push_back(GeneratorKind::Structural);
    else if (part == "composed") {
      out.push_back(GeneratorKind::Local);
      out.push_back(GeneratorKind::Structural);
    } else throw Exit{kUsage, "unknown generator '" + part + "'"};
  }
  if (out.empty()) throw Exit{kUsage, "empty generator list"};
  return out;
}

std::string kinds_name(const std::string& list) {
  std::string s = list;
  for (char& c : s)
    if (c == ',') c = '+';
  return s;
}

habs::Program load(const Config& cfg) {
  std::string text = slurp(cfg.input);
  habs::Program p;
  try {
    p = habs::parse_program(text);
    for (const auto& iv : cfg.invariants) {
      auto eq = iv.find('=');
      if (eq == std::string::npos) throw Exit{kUsage, "--invariant expects Class=formula"};
      std::string cls = iv.substr(0, eq);
      auto it = std::find_if(p.classes.begin(), p.classes.end(), [&](const auto& c) { return c.name == cls; });
      if (it == p.classes.end()) throw Exit{kAnalysis, "unknown class '" + cls + "'"};
      it->object_invariant = habs::parse_expression(iv.substr(eq + 1));
    }
    p = habs::normalize(std::move(p));
  } catch (const habs::SyntaxError& e) {
    throw Exit{kUsage, cfg.input + ":" + e.what()};
  } catch (const habs::NameError& e) {
    throw Exit{kUsage, cfg.input + ":" + e.what()};
  }
  auto diags = habs::check_types(p);
  if (!diags.empty()) {
    std::string msg;
    for (const auto& d : diags) msg += (msg.empty() ? "" : "\n") + habs::format_diagnostic(cfg.input, d);
    throw Exit{kUsage, msg};
  }
  return p;
}

sim::SimOptions sim_options(const Config& cfg) {
  if (cfg.horizon <= 0) throw Exit{kUsage, "--horizon must be positive"};
  if (cfg.step <= 0) throw Exit{kUsage, "--step must be positive"};
  sim::SimOptions o;
  o.horizon = cfg.horizon;
  o.step = cfg.step;
  o.seed = cfg.seed;
  if (cfg.policy == "random") o.policy = sim::PolicyKind::Random;
  else if (cfg.policy != "deterministic") throw Exit{kUsage, "unknown policy '" + cfg.policy + "'"};
  if (!cfg.script.empty()) {
    try {
      o.script = sim::parse_script(slurp(cfg.script));
    } catch (const std::invalid_argument& e) {
      throw Exit{kUsage, cfg.script + ": " + e.what()};
    }
  }
  return o;
}

sim::Run simulate(const habs::Program& p, const Config& cfg, std::ostream& err) {
  sim::Simulator s(p, sim_options(cfg));
  sim::Run r = s.run();
  using St = sim::Run::Status;
  if (r.status == St::Error) throw Exit{kRuntime, "runtime error: " + r.message};
  if (r.status == St::StepCap || r.status == St::Deadlock) {
    if (cfg.strict) throw Exit{kRuntime, to_string(r.status) + ": " + r.message};
    err << "warning: " << to_string(r.status) << (r.message.empty() ? "" : ": " + r.message) << '\n';
  }
  return r;
}

std::string store_text(const sim::Store& s) {
  std::string out;
  for (const auto& [k, v] : s)
    if (v.numeric()) out += (out.empty() ? "" : " ") + k + "=" + sim::to_string(v);
  return out;
}

std::string set_text(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? ", " : "") + x;
  return out + "}";
}

// ---- subcommands

int cmd_verify(const Config& cfg, std::ostream& out) {
  auto p = load(cfg);
  auto kinds = generator_kinds(cfg.generator);
  fs::path dir = cfg.out.empty() ? fs::path("out") : fs::path(cfg.out);
  std::vector<fs::path> files;
  try {
    files = vcg::emit(p, kinds, dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Exit{kRuntime, e.what()};
  } catch (const std::exception& e) {
    throw Exit{kAnalysis, e.what()};
  }
  for (const auto& f : files) out << f.generic_string() << '\n';
  return kOk;
}

int cmd_simulate(const Config& cfg, std::ostream& out, std::ostream& err) {
  auto p = load(cfg);
  auto r = simulate(p, cfg, err);
  if (cfg.out.empty()) {
    out << r.log();
    return kOk;
  }
  fs::path dir(cfg.out);
  fs::create_directories(dir);
  write(dir / "run.log", r.log());
  out << (dir / "run.log").generic_string() << '\n';
  for (const auto& o : r.configs.back().objects) {
    auto tr = sim::extract_trace(r, o.id);
    fs::path f = dir / ("trace_o" + std::to_string(o.id) + "_" + tr.cls + ".tsv");
    write(f, sim::trace_tsv(tr, cfg.step));
    out << f.generic_string() << '\n';
  }
  return kOk;
}

int cmd_check(const Config& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.tol <= 0) throw Exit{kUsage, "--tol must be positive"};
  auto p = load(cfg);
  auto g = analysis::make_generator(p, generator_kinds(cfg.generator));
  auto r = simulate(p, cfg, err);
  sim::MonitorOptions mo;
  mo.step = cfg.step;
  mo.tol = cfg.tol;
  sim::MonitorReport all;
  for (const auto& c : p.classes) {
    dl::Formula inv = vcg::class_invariant(c);
    auto rep = sim::check_class(r, c, g, inv, mo);
    std::map<analysis::RegionKey, std::array<std::size_t, 3>> per;  // subtraces, samples, violations
    for (const auto& it : rep.items) {
      auto& row = per[it.sub.key];
      ++row[0];
      row[1] += it.samples;
      row[2] += (!it.region_ok || !it.inv_ok) ? 1 : 0;
    }
    for (const auto& [k, row] : per)
      out << analysis::to_string(k) << "\tsubtraces=" << row[0] << "\tsamples=" << row[1]
          << "\tviolations=" << row[2] << '\n';
    all.append(rep);
  }
  out << "generator=" << kinds_name(cfg.generator) << " subtraces=" << all.items.size()
      << " violations=" << all.violations() << '\n';
  if (all.ok()) return kOk;
  const auto* cx = all.first();
  std::string what = cx->region_failed && cx->inv_failed ? "region and invariant"
                     : cx->region_failed                 ? "region"
                                                         : "invariant";
  out << "counterexample: " << analysis::to_string(cx->key) << " clock=" << sim::format_number(cx->clock)
      << " t=" << sim::format_number(cx->t) << " violates " << what << ": " << store_text(cx->state) << '\n';
  return kViolation;
}

int cmd_analyze(const Config& cfg, std::ostream& out) {
  auto p = load(cfg);
  auto kinds = generator_kinds(cfg.generator);
  analysis::Generator g;
  try {
    g = analysis::make_generator(p, kinds);
  } catch (const std::exception& e) {
    throw Exit{kAnalysis, e.what()};
  }
  out << "post-regions (" << kinds_name(cfg.generator) << ")\n";
  for (const auto& k : g.order) out << "  " << analysis::to_string(k) << " ↦ " << dl::render(g.images.at(k)) << '\n';
  for (const auto& c : p.classes) {
    out << "class " << c.name << '\n';
    out << "  controllers " << set_text(analysis::detect_controllers(c, p)) << '\n';
    std::set<std::string> exempt;
    for (const auto& m : c.methods)
      if (analysis::frame_exempt(m, c)) exempt.insert(m.name);
    out << "  frame-exempt " << set_text(exempt) << '\n';
    for (const auto& m : c.methods) {
      out << "  gcall " << m.name << " exit " << set_text(analysis::gcall_exit(m.body)) << '\n';
      for (const auto& k : g.order)
        if (k.cls == c.name && k.member == m.name && k.point)
          out << "  gcall " << m.name << " @" << k.point << ' ' << set_text(analysis::gcall_point(m.body, k.point))
              << '\n';
    }
  }
  for (const auto& text : cfg.impact) {
    analysis::Change ch;
    try {
      ch = analysis::parse_change(text);
    } catch (const std::invalid_argument& e) {
      throw Exit{kUsage, e.what()};
    }
    for (auto k : kinds) {
      try {
        auto set = analysis::reproof_set(ch, k, p);
        out << "reproof " << text << " (" << analysis::to_string(k) << ") " << set_text(set) << '\n';
      } catch (const std::out_of_range& e) {
        throw Exit{kAnalysis, e.what()};
      }
    }
  }
  return kOk;
}

int cmd_concurrent(const Config& cfg, std::ostream& out) {
  conc::ConcurrentProgram p;
  try {
    p = conc::parse_concurrent(slurp(cfg.input));
  } catch (const std::invalid_argument& e) {
    throw Exit{kUsage, cfg.input + ": " + e.what()};
  } catch (const dl::ParseError& e) {
    throw Exit{kUsage, cfg.input + ": " + e.what()};
  }
  if (cfg.horizon <= 0 || cfg.step <= 0) throw Exit{kUsage, "--horizon and --step must be positive"};
  conc::Scheme scheme;
  if (cfg.scheme == "postcond") scheme = conc::Scheme::Postcond;
  else if (cfg.scheme == "basic") scheme = conc::Scheme::Basic;
  else if (cfg.scheme == "precise") scheme = conc::Scheme::Precise;
  else throw Exit{kUsage, "unknown scheme '" + cfg.scheme + "'"};

  conc::ConcOptions o;
  o.horizon = cfg.horizon;
  o.step = cfg.step;
  o.seed = cfg.seed;
  if (cfg.policy == "random") o.policy = conc::Policy::Random;
  conc::ConcurrentSimulator s(p, o);
  conc::ConcurrentSimulator::Run r;
  try {
    r = s.run(p.init);
  } catch (const std::runtime_error& e) {
    throw Exit{kRuntime, e.what()};
  }
  auto val = [](const dl::Valuation& v) {
    std::string t;
    for (const auto& [k, x] : v) t += (t.empty() ? "" : " ") + k + "=" + sim::format_number(x);
    return t;
  };
  for (const auto& st : r.steps)
    out << "clock=" << sim::format_number(st.after.clock) << " " << st.rule
        << (st.procedure.empty() ? "" : " " + st.procedure) << " " << val(st.after.val) << '\n';
  out << "end " << (r.capped ? "capped" : "final") << " clock=" << sim::format_number(r.last.clock) << '\n';
  if (p.inv) {
    for (const auto& ob : conc::obligations(p, p.init, *p.inv, scheme))
      out << to_string(scheme) << ' ' << ob.name << ": " << dl::render(ob.formula) << '\n';
  }
  if (r.capped && cfg.strict) return kRuntime;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verification toolchain for hybrid active objects", "hybridvc"};
  app.require_subcommand(1);
  Config cfg;

  auto input = [&](CLI::App* s) { s->add_option("input", cfg.input, "input file")->required(); };
  auto sim_flags = [&](CLI::App* s) {
    s->add_option("--horizon", cfg.horizon, "simulated time");
    s->add_option("--step", cfg.step, "sampling step");
    s->add_option("--seed", cfg.seed, "scheduler seed");
    s->add_option("--policy", cfg.policy, "deterministic or random");
    s->add_option("--script", cfg.script, "scenario of external calls");
    s->add_flag("--strict", cfg.strict, "fail on deadlock and step caps");
    s->add_option("--invariant", cfg.invariants, "replace an object invariant, Class=formula");
  };
  auto generator = [&](CLI::App* s) {
    s->add_option("--generator", cfg.generator, "basic, local, structural, composed or a comma list");
  };

  auto* verify = app.add_subcommand("verify", "emit proof obligations");
  input(verify);
  generator(verify);
  verify->add_option("--out", cfg.out, "output directory (default out)");
  verify->add_option("--invariant", cfg.invariants, "replace an object invariant, Class=formula");

  auto* simulate = app.add_subcommand("simulate", "run the program and export the log and traces");
  input(simulate);
  sim_flags(simulate);
  simulate->add_option("--out", cfg.out, "directory for run.log and traces (default: log to stdout)");

  auto* check = app.add_subcommand("check", "monitor suspension-subtraces against post-regions");
  input(check);
  sim_flags(check);
  generator(check);
  check->add_option("--tol", cfg.tol, "monitor tolerance");

  auto* analyze = app.add_subcommand("analyze", "print post-regions and syntactic analyses");
  input(analyze);
  generator(analyze);
  analyze->add_option("--impact", cfg.impact, "added:C.m, removed:C.m or guard:C.m");

  auto* concurrent = app.add_subcommand("concurrent", "run a guarded-procedure program and print obligations");
  input(concurrent);
  concurrent->add_option("--horizon", cfg.horizon, "simulated time");
  concurrent->add_option("--step", cfg.step, "event sampling step");
  concurrent->add_option("--seed", cfg.seed, "seed");
  concurrent->add_option("--policy", cfg.policy, "deterministic or random");
  concurrent->add_option("--scheme", cfg.scheme, "postcond, basic or precise");
  concurrent->add_flag("--strict", cfg.strict, "fail when the instant cap is hit");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }
  if (concurrent->parsed() && cfg.horizon == 100 && !concurrent->count("--horizon")) cfg.horizon = 50;

  try {
    if (verify->parsed()) return cmd_verify(cfg, out);
    if (simulate->parsed()) return cmd_simulate(cfg, out, err);
    if (check->parsed()) return cmd_check(cfg, out, err);
    if (analyze->parsed()) return cmd_analyze(cfg, out);
    return cmd_concurrent(cfg, out);
  } catch (const Exit& e) {
    err << e.message << '\n';
    return e.status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace hvc::cli
