#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "bentcable/cli.hpp"
#include "bentcable/io.hpp"

using namespace bentcable;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = run_cli(args, out, e);
  if (err) *err = e.str();
  return code;
}

fs::path workdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bentcable_it_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("Scenario 2 through the command line") {
  const auto dir = workdir("s2");
  REQUIRE(run({"simulate", "--scenario", "S2", "--out", (dir / "sim").string()}) == 0);
  const std::string csv = read_text(dir / "sim" / "data.csv");
  const auto ds = parse_csv(csv);
  CHECK(ds.size() == 20);
  CHECK(ds.total_observations() == 20 * 150);

  REQUIRE(run({"fit", "--data", (dir / "sim" / "data.csv").string(), "--out", (dir / "fit").string(), "--seed",
               "2024"}) == 0);
  const json manifest = json::parse(read_text(dir / "fit" / "manifest.json"));
  CHECK(manifest["stationarity_proportion"].get<double>() > 0.95);
  for (const auto& chain : manifest["chains"])
    for (const auto& rate : chain["alpha_acceptance"]) {
      CHECK(rate.get<double>() >= 0.10);
      CHECK(rate.get<double>() <= 0.60);
    }

  REQUIRE(run({"summarize", (dir / "fit").string()}) == 0);
  const json summary = json::parse(read_text(dir / "fit" / "summary" / "summary.json"));
  const json& params = summary["parameters"];
  for (const char* name : {"omega", "mu0", "mu1", "mu2", "M_gamma", "M_tau", "M_tauA", "S_gamma", "S_tau", "S_tauA",
                           "ctp_A", "phi_1"})
    CHECK_MESSAGE(params.contains(name), name);
  CHECK(summary.contains("ctp_G_undefined_fraction"));
  CHECK(params["phi_1"]["mean"].get<double>() == doctest::Approx(0.7).epsilon(0.15));
}

TEST_CASE("custom scenario spec round-trips through the command line") {
  const auto dir = workdir("custom");
  fs::create_directories(dir);
  write_text(dir / "spec.json", R"({"base": "S3", "m": 4, "n": 60, "sigma2": [0.5, 0.5, 1.0, 1.0], "seed": 3})");
  REQUIRE(run({"simulate", "--config", (dir / "spec.json").string(), "--out", (dir / "a").string()}) == 0);
  const json spec = json::parse(read_text(dir / "a" / "spec.json"));
  fs::create_directories(dir / "b");
  write_text(dir / "b.json", spec.dump());
  REQUIRE(run({"simulate", "--config", (dir / "b.json").string(), "--out", (dir / "b").string()}) == 0);
  CHECK(read_text(dir / "a" / "data.csv") == read_text(dir / "b" / "data.csv"));
  CHECK(parse_csv(read_text(dir / "a" / "data.csv")).size() == 4);
}

TEST_CASE("DIC comparison on Scenario 3 prefers an autoregressive fit") {
  const auto dir = workdir("s3");
  REQUIRE(run({"simulate", "--scenario", "S3", "--out", (dir / "sim").string()}) == 0);
  REQUIRE(run({"compare-dic", "--data", (dir / "sim" / "data.csv").string(), "--p-list", "0,1,2", "--variants",
               "flexible", "--iters", "4000", "--burnin", "1000", "--out", (dir / "cmp").string()}) == 0);
  const json dic = json::parse(read_text(dir / "cmp" / "dic.json"));
  REQUIRE(dic["ranked"].size() == 3);
  CHECK(dic["ranked"][0]["p"].get<int>() >= 1);
  CHECK(fs::exists(dir / "cmp" / "ranking.txt"));

  REQUIRE(run({"compare-dic", "--data", (dir / "sim" / "data.csv").string(), "--p-list", "1", "--iters", "1000",
               "--burnin", "200", "--out", (dir / "one").string()}) == 0);
}

TEST_CASE("replicate study smoke run") {
  const auto dir = workdir("rep");
  REQUIRE(run({"replicate-study", "--scenario", "S2", "--replicates", "2", "--iters", "1500", "--burnin", "500",
               "--out", dir.string()}) == 0);
  const json study = json::parse(read_text(dir / "study.json"));
  CHECK(study["requested"] == 2);
  CHECK(study["succeeded"].get<int>() + study["failed"].get<int>() == 2);
  CHECK(read_text(dir / "study.csv").find("mu_tauA") != std::string::npos);
}
