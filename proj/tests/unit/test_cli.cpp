#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "bentcable/cli.hpp"
#include "bentcable/io.hpp"

using namespace bentcable;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bentcable_cli_" + name);
  fs::remove_all(p);
  return p;
}

json error_of(const Result& r) { return json::parse(r.err)["error"]; }

}  // namespace

TEST_CASE("version and usage") {
  auto r = run({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(error_of(r)["type"] == "UsageError");
  r = run({"fit"});
  CHECK(r.code == 2);
}

TEST_CASE("missing input file") {
  const auto out = scratch("missing");
  const auto r = run({"fit", "--data", "/nonexistent/data.csv", "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(error_of(r)["type"] == "FileNotFound");
  CHECK(error_of(r)["message"].get<std::string>().find("/nonexistent/data.csv") != std::string::npos);
}

TEST_CASE("bad data and bad scenario") {
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  write_text(dir / "bad.csv", "id,time,y\na,0,1\na,0,2\n");
  auto r = run({"fit", "--data", (dir / "bad.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(error_of(r)["type"] == "DataError");
  r = run({"simulate", "--scenario", "S9", "--out", (dir / "s").string()});
  CHECK(r.code == 2);
  CHECK(error_of(r)["message"].get<std::string>().find("S1a") != std::string::npos);
  write_text(dir / "cfg.json", R"({"chians": 2})");
  r = run({"fit", "--data", (dir / "bad.csv").string(), "--config", (dir / "cfg.json").string(), "--out",
           (dir / "o").string()});
  CHECK(r.code == 2);
}

TEST_CASE("simulate, fit and summarize end to end") {
  const auto dir = scratch("pipeline");
  REQUIRE(run({"simulate", "--scenario", "S2", "--seed", "5", "--out", (dir / "sim").string()}).code == 0);
  CHECK(fs::exists(dir / "sim" / "data.csv"));
  CHECK(fs::exists(dir / "sim" / "truth.json"));
  CHECK(fs::exists(dir / "sim" / "manifest.json"));

  const std::vector<std::string> fit{"fit", "--data", (dir / "sim" / "data.csv").string(), "--chains", "2",
                                     "--iters", "600", "--burnin", "200", "--seed", "42"};
  auto args = fit;
  args.insert(args.end(), {"--out", (dir / "fit1").string()});
  auto r = run(args);
  REQUIRE(r.code == 0);
  args = fit;
  args.insert(args.end(), {"--out", (dir / "fit2").string()});
  REQUIRE(run(args).code == 0);
  // Same seed and inputs: byte-identical draws.
  CHECK(read_text(dir / "fit1" / "draws.csv") == read_text(dir / "fit2" / "draws.csv"));
  const json manifest = json::parse(read_text(dir / "fit1" / "manifest.json"));
  CHECK(manifest["chain_seeds"].size() == 2);
  CHECK(manifest.contains("config_digest"));

  r = run({"summarize", (dir / "fit1").string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "fit1" / "summary" / "summary.json"));
  CHECK(fs::exists(dir / "fit1" / "summary" / "curves.csv"));
  CHECK(fs::exists(dir / "fit1" / "summary" / "curves.svg"));
  const json summary = json::parse(read_text(dir / "fit1" / "summary" / "summary.json"));
  CHECK(summary.dump().find("mu0") != std::string::npos);

  r = run({"summarize", (dir / "nothing").string()});
  CHECK(r.code == 2);
}

TEST_CASE("compare-dic refuses an AR order the data cannot support") {
  const auto dir = scratch("cmp");
  REQUIRE(run({"simulate", "--scenario", "S2", "--out", (dir / "sim").string()}).code == 0);
  const auto r = run({"compare-dic", "--data", (dir / "sim" / "data.csv").string(), "--p-list", "0,200", "--out",
                      (dir / "c").string(), "--iters", "100", "--burnin", "50"});
  CHECK(r.code == 2);
}
