#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "skyle/errors.hpp"
#include "skyle/experiment.hpp"

using namespace skyle;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("skyle_test_" + name);
  fs::remove_all(p);
  return p;
}

json exp_pair(const std::string& mode, const fs::path& out) {
  return {{"mode", mode},
          {"time_unit", "step"},
          {"dividend_acf", {{"family", "exponential"}, {"tau", 20}}},
          {"nt_acf", {{"family", "exponential"}, {"tau", 10}}},
          {"T_cut", 500},
          {"T_it", 200},
          {"output_dir", out.string()}};
}

}  // namespace

TEST(Config, AcfRoundTrip) {
  for (const auto& spec : {AcfSpec::exponential(10.0, 2.0), AcfSpec::power_law(30.0, 3.0), AcfSpec::white(0.5),
                           AcfSpec::damped_oscillation(40.0, 20.0), AcfSpec::tabulated({2.0, 1.0, 0.5})}) {
    const auto back = acf_from_json(acf_to_json(spec));
    for (long k = 0; k < 10; ++k) EXPECT_DOUBLE_EQ(back(k), spec(k));
  }
}

TEST(Config, RejectsNonIntegrablePowerLaw) {
  json j = exp_pair("solve", "x");
  j["dividend_acf"] = {{"family", "power_law"}, {"tau0", 30}, {"gamma", 1}};
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, RejectsMissingAndUnknownFields) {
  EXPECT_THROW(parse_config(json{{"mode", "solve"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"mode", "sweep"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"mode", "sweep"}, {"sweep", {{"tau_mu", json::array()}, {"tau_nt", {1}}}}}),
               ConfigError);
  json j = exp_pair("solve", "x");
  j["T_cutt"] = 3;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = exp_pair("simulate", "x");
  EXPECT_THROW(parse_config(j), ConfigError);
  j = exp_pair("solve", "x");
  j["time_unit"] = "second";
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, DefaultsAreResolvedAndEchoed) {
  json j = exp_pair("simulate", "x");
  j["sim"] = {{"T", 10000}};
  const auto c = parse_config(j);
  const auto r = resolved_config(c);
  EXPECT_EQ(r["sim"]["burn_in"], 1000);
  EXPECT_EQ(r["sim"]["batches"], 50);
  EXPECT_EQ(r["tol"], 1e-8);
  EXPECT_EQ(r["tol_scale"], "G0");
  EXPECT_EQ(parse_config(r).T_cut, c.T_cut);
}

TEST(Format, SeventeenDigitsRoundTrip) {
  for (double x : {M_PI, 1.0 / 3.0, 1e-300, -2.5e17, 0.1}) EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(ExitCodes, Distinct) {
  EXPECT_EQ(exit_code_for(ErrorKind::Config), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::Conditioning), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::Divergence), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::Tail), 5);
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowest) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 7 || i == 4) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "4");
  }
}

TEST(Run, SolveWritesFilesWithConfigHeader) {
  const auto out = scratch("solve");
  std::ostringstream log;
  ASSERT_EQ(run(parse_config(exp_pair("solve", out)), log), 0);
  for (const char* f : {"propagator.tsv", "convergence.tsv", "diagnostics.tsv", "summary.tsv"}) {
    const auto s = slurp(out / f);
    EXPECT_EQ(s.rfind("# skyle " + std::string(kVersion), 0), 0u) << f;
    EXPECT_NE(s.find("# config: {"), std::string::npos) << f;
    EXPECT_FALSE(fs::exists(out / (std::string(f) + ".tmp")));
  }
}

TEST(Run, DeterministicSimulationOutput) {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  auto cfg = [&](const fs::path& out, std::size_t workers) {
    json j = exp_pair("simulate", out);
    j["T_cut"] = 200;
    j["sim"] = {{"T", 20000}, {"n_paths", 3}, {"base_seed", 9}, {"batches", 10}};
    j["output_dir"] = "same";
    auto c = parse_config(j);
    c.output_dir = out.string();
    c.workers = workers;
    return c;
  };
  std::ostringstream log;
  ASSERT_EQ(run(cfg(a, 1), log), 0);
  ASSERT_EQ(run(cfg(b, 3), log), 0);
  for (const char* f : {"simulation.tsv", "ensemble.tsv", "propagator.tsv"})
    EXPECT_EQ(slurp(a / f).substr(slurp(a / f).find('\n', slurp(a / f).find("# config"))),
              slurp(b / f).substr(slurp(b / f).find('\n', slurp(b / f).find("# config"))))
        << f;
}

TEST(Run, DivergenceReportsRecordAndCode) {
  const auto out = scratch("div");
  json j = exp_pair("solve", out);
  j["T_it"] = 2;
  std::ostringstream log;
  EXPECT_EQ(run(parse_config(j), log), 4);
  const auto rec = json::parse(slurp(out / "error.json"));
  EXPECT_EQ(rec["error"], "divergence");
  EXPECT_EQ(rec["residual_history"].size(), 2u);
}

TEST(Run, MarkovAndSweep) {
  const auto out = scratch("markov");
  std::ostringstream log;
  EXPECT_EQ(run(parse_config(exp_pair("markov", out)), log), 0);
  EXPECT_NE(slurp(out / "markov.tsv").find("\nrho\t"), std::string::npos);
  const auto sw = scratch("sweep");
  const json j = {{"mode", "sweep"}, {"sweep", {{"tau_mu", {1, 10}}, {"tau_nt", {2, 20, 60}}}}, {"output_dir", sw.string()}};
  EXPECT_EQ(run(parse_config(j), log), 0);
  const auto s = slurp(sw / "sweep.tsv");
  std::size_t rows = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 1u + 6u);
}

TEST(Run, ValidateAllPass) {
  const auto out = scratch("validate");
  std::ostringstream log;
  json j = {{"mode", "validate"}, {"output_dir", out.string()}};
  EXPECT_EQ(run(parse_config(j), log), 0) << log.str();
  EXPECT_EQ(slurp(out / "validate.tsv").find("FAIL"), std::string::npos);
}
