#include "mmt/scenario.hpp"
#include "support/worked_examples.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mmt {
namespace {

using testing::kS3;
using testing::v2;

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmt-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> builtin_names() {
  return {"two-sources", "two-sources-crossed", "cycle", "star-junction", "star-junction:7:3", "homogenization", "hexnorm-H"};
}

TEST(Examples, ListIsStable) {
  std::vector<std::string> names;
  for (const auto& e : list_examples()) names.push_back(e.name);
  const std::vector<std::string> expected{"two-sources", "two-sources-crossed", "cycle", "star-junction[:k[:seed]]",
                                          "homogenization", "hexnorm-H"};
  EXPECT_EQ(names, expected);
  EXPECT_THROW(example("nope"), InputError);
  EXPECT_THROW(example("star-junction:2"), InputError);
  EXPECT_THROW(example("star-junction:x"), InputError);
}

TEST(Examples, TwoSourcesBothConfigurations) {
  for (const char* name : {"two-sources", "two-sources-crossed"}) {
    const auto out = evaluate(example(name));
    EXPECT_NEAR(out.result["flow"]["cost"].get<double>(), 6.0, 1e-6) << name;
    EXPECT_EQ(out.result["graph_certificate"]["verdict"], "certified-optimal") << name;
    EXPECT_EQ(out.result["field_certificate"]["verdict"], "certified-optimal") << name;
    EXPECT_EQ(out.result["status"], "ok");
  }
}

TEST(Examples, CycleIsFlagged) {
  const auto out = evaluate(example("cycle"));
  EXPECT_NEAR(out.result["flow"]["cost"].get<double>(), 2 + 2 * kS3, 1e-6);
  EXPECT_TRUE(out.result["flow"]["support_has_cycle"].get<bool>());
  EXPECT_EQ(out.result["flow"]["cycle"].size(), 5u);  // four nodes, closed
  EXPECT_NE(out.result["landscape"]["refused"].get<std::string>().find("cycle"), std::string::npos);
  EXPECT_EQ(out.result["field_certificate"]["verdict"], "certified-optimal");
}

TEST(Examples, StarJunctionDataIsBalancedAndSeeded) {
  for (int k = 3; k <= 8; ++k) {
    const auto d = builtin::star_data(k, 11);
    Vec sum = Vec::Zero(2);
    for (int i = 0; i < k; ++i) {
      const auto& e = d.directions[static_cast<std::size_t>(i)];
      EXPECT_NEAR(e.norm(), 1.0, 1e-15);
      EXPECT_GE(e.minCoeff(), 0.0);
      EXPECT_GE(std::abs(d.a[i]), 0.05);
      sum += d.a[i] * e;
    }
    EXPECT_LE(sum.norm(), 1e-12) << k;
    const auto again = builtin::star_data(k, 11);
    EXPECT_EQ(again.a, d.a);
    EXPECT_NE(builtin::star_data(k, 12).a, d.a);
  }
  const auto out = evaluate(example("star-junction:5:1"));
  const auto d = builtin::star_data(5, 1);
  double expected = 0;
  for (int i = 0; i < 5; ++i) expected += std::abs(d.a[i]) * d.lengths[static_cast<std::size_t>(i)];
  EXPECT_NEAR(out.result["flow"]["cost"].get<double>(), expected, 1e-6);
  EXPECT_EQ(out.result["field_certificate"]["verdict"], "certified-optimal");
}

TEST(Examples, HomogenizationEmitsTables) {
  const auto out = evaluate(example("homogenization"));
  EXPECT_TRUE(out.result["study"]["masses_constant"].get<bool>());
  EXPECT_TRUE(out.result["study"]["errors_decreasing"].get<bool>());
  ASSERT_TRUE(out.files.count("study.csv"));
  ASSERT_TRUE(out.files.count("microstructure.csv"));
  EXPECT_EQ(out.files.at("study.csv").substr(0, 31), "k,mass,max_pairing_error,segmen");
  // header plus one row per chord of the k = 4 microstructure (no merges off the diagonal family)
  const auto& csv = out.files.at("microstructure.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 16 + 16 + 7);
}

TEST(Examples, HexNormBracket) {
  const auto out = evaluate(example("hexnorm-H"));
  const double lo = out.result["h_eval"]["lower"], hi = out.result["h_eval"]["upper"];
  const double target = (1 + kS3) / std::sqrt(2.0);
  EXPECT_LE(lo, target + 1e-12);
  EXPECT_GE(hi, target - 1e-12);
  EXPECT_LE(hi - lo, 1e-6);
}

TEST(ScenarioJson, RoundTripIsIdentity) {
  for (const auto& name : builtin_names()) {
    const auto s = example(name);
    const auto j = to_json(s);
    const auto back = scenario_from_json(j);
    EXPECT_EQ(to_json(back), j) << name;
    EXPECT_EQ(scenario_hash(back), scenario_hash(s)) << name;
    // through text at 17 digits
    const auto text = dump_result(j);
    EXPECT_EQ(to_json(scenario_from_json(io::json::parse(text))), j) << name;
  }
}

TEST(ScenarioJson, RunsAreDeterministic) {
  for (const auto& name : {"two-sources", "cycle", "star-junction", "homogenization"}) {
    const auto a = scratch(std::string(name) + "-a"), b = scratch(std::string(name) + "-b");
    const auto ra = run(example(name), a);
    const auto rb = run(example(name), b);
    EXPECT_EQ(ra.hash, rb.hash);
    ASSERT_EQ(ra.outputs, rb.outputs);
    for (const auto& f : ra.outputs) EXPECT_EQ(slurp(a / f), slurp(b / f)) << name << "/" << f;
    EXPECT_TRUE(fs::exists(a / "run.json"));
  }
}

TEST(ScenarioJson, SchemaErrorsNameTheirPath) {
  auto j = to_json(example("two-sources"));
  j["norm"] = io::json{{"m", 2}, {"dual_vertices", {{1, 0}, {0, "x"}}}};
  j["boundary"]["atoms"][1]["theta"] = {1, 2, 3};
  try {
    scenario_from_json(j);
    FAIL() << "expected a schema error";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("/norm/dual_vertices/1/1"), std::string::npos) << msg;
  }
  auto k = to_json(example("two-sources"));
  k["boundary"]["atoms"][1]["theta"] = {1, 2, 3};
  k["graph"] = io::json{{"nodes", {{0, 0}}}, {"edges", {{0, 4}}}};
  try {
    scenario_from_json(k);
    FAIL() << "expected a schema error";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("/boundary/atoms/1/theta"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/graph/edges/0"), std::string::npos) << msg;
  }
}

TEST(ScenarioJson, TaskRequirements) {
  io::json j{{"task", "solve"}, {"norm", "linf-hex"}};
  EXPECT_THROW(scenario_from_json(j), InputError);
  j["task"] = "teleport";
  EXPECT_THROW(scenario_from_json(j), InputError);
  EXPECT_THROW(scenario_from_json(io::json::array()), InputError);
  io::json bad_norm{{"task", "h-eval"}, {"norm", "no-such-norm"}, {"h_eval", {{"matrix", {{1, 0}, {0, 1}}}}}};
  EXPECT_THROW(scenario_from_json(bad_norm), InputError);
}

TEST(ScenarioJson, CalibrateTaskWithExplicitNetwork) {
  testing::TwoSources ts;
  Scenario s = example("two-sources-crossed");
  s.task = "calibrate";
  s.network = ts.network_crossed_F();
  s.boundary.reset();
  const auto back = scenario_from_json(to_json(s));
  const auto out = evaluate(back);
  EXPECT_EQ(out.result["field_certificate"]["verdict"], "certified-optimal");
  EXPECT_EQ(out.result["facets"].size(), 4u);
  EXPECT_NEAR(out.result["network_mass"].get<double>(), 6.0, 1e-12);
}

TEST(ScenarioJson, FlatNormTaskRasterizes) {
  Scenario s;
  s.name = "flat";
  s.task = "flatnorm";
  s.grid = GridSpec{0, 0, 1, 1, 0.25};
  PolyChain1 P(2, 2);
  P.add(v2(0, 0), v2(1, 0), v2(1, 0));
  P.add(v2(1, 0), v2(1, 1), v2(1, 0));
  P.add(v2(1, 1), v2(0, 1), v2(1, 0));
  P.add(v2(0, 1), v2(0, 0), v2(1, 0));
  s.chain = P;
  const auto out = evaluate(scenario_from_json(to_json(s)));
  // closed unit square: filling costs h(θ)·1 against 4·h(θ) for keeping it
  EXPECT_NEAR(out.result["flatnorm"]["value"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(out.result["flatnorm"]["mass"].get<double>(), 4.0, 1e-12);
  EXPECT_TRUE(out.files.count("flatnorm.csv"));
}

TEST(ScenarioJson, GeneratorGraphSolves) {
  Scenario s = example("two-sources");
  s.graph = GraphSpec{GraphSpec::Kind::generator, {}, {}, {}, 4, true, 0.1};
  s.calibration.reset();
  s.momentum_at.clear();
  s.landscape_root.reset();
  const auto out = evaluate(scenario_from_json(to_json(s)));
  EXPECT_GE(out.result["flow"]["cost"].get<double>(), 6.0 - 1e-9);
  EXPECT_EQ(out.result["graph_certificate"]["verdict"], "certified-optimal");
}

// ---------------------------------------------------------------------------
// Command line

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MMT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const auto log = dir / "log.txt";
  EXPECT_EQ(cli("list", log), 0);
  EXPECT_NE(slurp(log).find("two-sources-crossed"), std::string::npos);

  EXPECT_EQ(cli("example cycle -o " + (dir / "cycle").string(), log), 0);
  EXPECT_TRUE(fs::exists(dir / "cycle" / "result.json"));
  EXPECT_TRUE(fs::exists(dir / "cycle" / "edges.csv"));

  EXPECT_EQ(cli("example no-such-example", log), 2);
  EXPECT_EQ(cli("frobnicate", log), 2);
  EXPECT_EQ(cli("run " + (dir / "missing.json").string(), log), 2);

  io::write_text(dir / "bad.json", R"({"task": "solve", "norm": {"m": 2, "dual_vertices": [[1, 0], [0]]}})");
  EXPECT_EQ(cli("run " + (dir / "bad.json").string() + " -o " + (dir / "bad").string(), log), 2);
  EXPECT_NE(slurp(log).find("/norm/dual_vertices/1"), std::string::npos) << slurp(log);

  io::write_text(dir / "scenario.json", dump_result(to_json(example("two-sources"))));
  EXPECT_EQ(cli("run " + (dir / "scenario.json").string() + " -o " + (dir / "run").string(), log), 0);
  EXPECT_NE(slurp(dir / "run" / "result.json").find("certified-optimal"), std::string::npos);

  io::write_text(dir / "I.json", "[[1, 0], [0, 1]]");
  EXPECT_EQ(cli("h-eval --norm linf-hex --matrix " + (dir / "I.json").string(), log), 0);
  EXPECT_NE(slurp(log).find("\"upper\""), std::string::npos);
  EXPECT_EQ(cli("h-eval --norm linf-hex --matrix " + (dir / "I.json").string() + " --gap-tol 1e-300", log), 3);
  io::write_text(dir / "I3.json", "[[1, 0], [0, 1], [1, 1]]");
  EXPECT_EQ(cli("h-eval --norm linf-hex --matrix " + (dir / "I3.json").string(), log), 2);

  io::write_text(dir / "chain.json", R"({"atoms": [{"x": [0.25, 0.25], "theta": [1]}, {"x": [0.75, 0.5], "theta": [-1]}]})");
  EXPECT_EQ(cli("flatnorm " + (dir / "chain.json").string() + " --grid 0,0,1,1,0.25 --norm l1 -m 1", log), 0);
  EXPECT_NE(slurp(log).find("\"value\": 0.75"), std::string::npos) << slurp(log);
  EXPECT_EQ(cli("flatnorm " + (dir / "chain.json").string() + " --grid 0,0,1,oops,0.25 --norm l1 -m 1", log), 2);
}

}  // namespace
}  // namespace mmt
