#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "../support/corpus.hpp"
#include "doctest.h"
#include "hvc/cli/cli.hpp"

using namespace hvc;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int s = cli::run(args, out, err);
  return {s, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("hvc_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string source(const fs::path& dir, const std::string& text) {
  fs::path f = dir / "input.habs";
  std::ofstream(f) << text;
  return f.string();
}

std::map<std::string, std::string> contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testing::read_file(e.path().string());
  return out;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).status == cli::kUsage);
  CHECK(run({"frobnicate"}).status == cli::kUsage);
  CHECK(run({"verify"}).status == cli::kUsage);
  CHECK(run({"verify", "no/such/file.habs"}).status == cli::kUsage);
  CHECK(run({"simulate", "corpus/tank.habs", "--horizon", "0"}).status == cli::kUsage);
  CHECK(run({"simulate", "corpus/tank.habs", "--policy", "fair"}).status == cli::kUsage);
  CHECK(run({"verify", "corpus/tank.habs", "--generator", "magic"}).status == cli::kUsage);
  CHECK(run({"--help"}).status == cli::kOk);
}

TEST_CASE("verify") {
  auto dir = scratch("verify");
  auto r = run({"verify", "corpus/element.habs", "--out", (dir / "a").string()});
  CHECK(r.status == cli::kOk);
  auto files = contents(dir / "a");
  CHECK(files.size() == 6);  // five archives and the manifest
  CHECK(files.count("manifest.txt") == 1);
  run({"verify", "corpus/element.habs", "--out", (dir / "b").string()});
  CHECK(contents(dir / "b") == files);

  auto bad = source(dir, "class {");
  auto e = run({"verify", bad, "--out", (dir / "c").string()});
  CHECK(e.status == cli::kUsage);
  CHECK(e.err.find("1:7") != std::string::npos);

  // no controllers: structural regions are all true but archives are still written
  auto plain = source(dir, "class C { Int x = 0; Unit m() { x = 1; } }\n{ C c = new C(); }");
  CHECK(run({"verify", plain, "--generator", "structural", "--out", (dir / "d").string()}).status == cli::kOk);
  CHECK(fs::exists(dir / "d" / "main.kyx"));
}

TEST_CASE("simulate") {
  auto dir = scratch("simulate");
  auto empty = source(dir, "{ }");
  auto r = run({"simulate", empty});
  CHECK(r.status == cli::kOk);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);  // one step and the end line

  auto b = run({"simulate", "corpus/billard.habs", "--script", "corpus/billard.script", "--horizon", "30"});
  CHECK(b.status == cli::kOk);
  for (const char* m : {"push", "accelerate", "leap", "incSize"})
    CHECK(b.out.find(std::string("rule=script object=o1 class=Billard member=") + m) != std::string::npos);

  CHECK(run({"simulate", "corpus/tank.habs", "--out", (dir / "a").string()}).status == cli::kOk);
  CHECK(run({"simulate", "corpus/tank.habs", "--out", (dir / "b").string()}).status == cli::kOk);
  auto a = contents(dir / "a");
  CHECK(a == contents(dir / "b"));
  REQUIRE(a.count("trace_o2_Tank.tsv") == 1);
  CHECK(a["trace_o2_Tank.tsv"].find("\nd") == std::string::npos);
  CHECK(a.count("run.log") == 1);

  auto stuck = source(dir, "class C { Unit m() { await duration(5); } }\n{ C c = new C(); Fut<Unit> f = c!m(); f.get; }");
  auto s = run({"simulate", stuck, "--horizon", "20"});
  CHECK(s.status == cli::kOk);
  CHECK(run({"simulate", stuck, "--horizon", "2", "--strict"}).status == cli::kOk);
}

TEST_CASE("check") {
  auto ok = run({"check", "corpus/tank.habs", "--generator", "structural", "--horizon", "30"});
  CHECK(ok.status == cli::kOk);
  CHECK(ok.out.find("violations=0\n") != std::string::npos);
  auto bad = run({"check", "corpus/tank.habs", "--generator", "local", "--horizon", "30", "--invariant",
                  "Tank=level >= 3 & level <= 9"});
  CHECK(bad.status == cli::kViolation);
  CHECK(bad.out.find("counterexample: Tank.") != std::string::npos);
  CHECK(run({"check", "corpus/tank.habs", "--invariant", "Pump=x >= 0"}).status == cli::kAnalysis);

  auto dir = scratch("check");
  auto none = source(dir, "{ }");
  auto v = run({"check", none});
  CHECK(v.status == cli::kOk);
  CHECK(v.out.find("subtraces=0 violations=0") != std::string::npos);
}

TEST_CASE("analyze") {
  auto r = run({"analyze", "corpus/tank.habs", "--generator", "structural"});
  CHECK(r.status == cli::kOk);
  CHECK(r.out.find("controllers {down, up}") != std::string::npos);
  CHECK(r.out.find("Tank.down ↦ (level >= 3 | drain >= 0) & (level <= 10 | drain <= 0)") != std::string::npos);
  auto l = run({"analyze", "corpus/tank_local.habs", "--generator", "local", "--impact", "removed:Tank.up"});
  CHECK(l.out.find("reproof removed:Tank.up (local) {down}") != std::string::npos);
  CHECK(run({"analyze", "corpus/tank.habs", "--impact", "removed:Tank.nope"}).status == cli::kAnalysis);
  CHECK(run({"analyze", "corpus/tank.habs", "--impact", "renamed:Tank.up"}).status == cli::kUsage);
  CHECK(run({"analyze", "corpus/tank.habs", "--generator", "structural"}).out == r.out);
}

TEST_CASE("concurrent") {
  auto r = run({"concurrent", "corpus/tank.conc", "--horizon", "20"});
  CHECK(r.status == cli::kOk);
  CHECK(r.out.find("urgent") != std::string::npos);
  CHECK(r.out.find("execute down") != std::string::npos);
  CHECK(r.out.find("basic up: ") != std::string::npos);
  auto p = run({"concurrent", "corpus/tank_drain.conc", "--scheme", "precise"});
  CHECK(p.out.find("(level >= 3 | drain >= 0)") != std::string::npos);
  CHECK(run({"concurrent", "corpus/tank.conc", "--scheme", "exact"}).status == cli::kUsage);
}
