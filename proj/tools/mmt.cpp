// mmt: multi-material transport command line.
//   exit 0 success, 2 input error, 3 numerical failure, 1 anything else

#include "mmt/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

using namespace mmt;

int run_scenario(const Scenario& s, const std::string& dir, double parse_ms) {
  const auto rec = run(s, dir.empty() ? std::filesystem::path("mmt-out") / s.name : std::filesystem::path(dir), parse_ms);
  std::cout << rec.to_json().dump(2) << '\n';
  return rec.status == "ok" ? 0 : 3;
}

Mat load_matrix(const std::string& file) {
  const auto j = io::read_json_file(file);
  io::Reader rd;
  const io::json& body = j.is_object() && j.contains("matrix") ? j["matrix"] : j;
  Mat M = rd.mat(body, j.is_object() ? "/matrix" : "");
  rd.check(file);
  return M;
}

/// "x0,y0,x1,y1,delta" or a JSON file with {"box": [...], "delta": d}.
Grid parse_grid(const std::string& spec) {
  io::Reader rd;
  if (std::filesystem::exists(spec)) {
    const auto g = io::grid_from_json(io::read_json_file(spec), rd, "");
    rd.check(spec);
    return *g;
  }
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--grid: '" + item + "' is not a number");
    }
  }
  if (v.size() != 5) throw InputError("--grid: expected x0,y0,x1,y1,delta or a JSON file");
  return Grid(v[0], v[1], v[2], v[3], v[4]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-material transport: flows, calibrations, flat norms"};
  app.require_subcommand(1);

  std::string scenario_file, out_dir, example_name;
  auto* run_cmd = app.add_subcommand("run", "run a scenario file");
  run_cmd->add_option("scenario", scenario_file, "scenario JSON")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory (default mmt-out/<name>)");

  auto* ex_cmd = app.add_subcommand("example", "run a built-in example");
  ex_cmd->add_option("name", example_name, "example name (see 'mmt list')")->required();
  ex_cmd->add_option("-o,--out", out_dir, "output directory (default mmt-out/<name>)");

  app.add_subcommand("list", "list built-in examples");

  std::string norm_arg = "linf-hex", matrix_file;
  double gap_tol = 1e-6;
  int materials = 2;
  auto* h_cmd = app.add_subcommand("h-eval", "bracket the generated matrix norm of a matrix");
  h_cmd->add_option("--norm", norm_arg, "norm name or JSON file")->required();
  h_cmd->add_option("--matrix", matrix_file, "JSON matrix (array of rows)")->required();
  h_cmd->add_option("--gap-tol", gap_tol, "target width of the bracket");

  std::string chain_file, grid_spec;
  auto* f_cmd = app.add_subcommand("flatnorm", "grid flat norm of a chain");
  f_cmd->add_option("chain", chain_file, "chain JSON (atoms, segments or grid faces)")->required();
  f_cmd->add_option("--grid", grid_spec, "x0,y0,x1,y1,delta or grid JSON file")->required();
  f_cmd->add_option("--norm", norm_arg, "norm name or JSON file");
  f_cmd->add_option("-m,--materials", materials, "material dimension for named norms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    using clock = std::chrono::steady_clock;
    if (*run_cmd) {
      const auto t0 = clock::now();
      const auto s = load_scenario(scenario_file);
      return run_scenario(s, out_dir, std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    if (*ex_cmd) return run_scenario(example(example_name), out_dir, 0.0);
    if (app.got_subcommand("list")) {
      for (const auto& e : list_examples()) std::cout << e.name << "\t" << e.description << '\n';
      return 0;
    }
    if (*h_cmd) {
      const Mat M = load_matrix(matrix_file);
      const auto h = io::load_norm(norm_arg, static_cast<int>(M.rows()));
      require(h.dim() == M.rows(), "h-eval: matrix has " + std::to_string(M.rows()) + " rows but the norm has " +
                                       std::to_string(h.dim()) + " materials");
      Scenario s;
      s.name = "h-eval";
      s.task = "h-eval";
      s.n = static_cast<int>(M.cols());
      s.norm = NormSpec{h.name(), h.dual_vertices(), h.dim()};
      s.h_eval = HEvalSpec{M, gap_tol, {}};
      const auto out = evaluate(s);
      std::cout << dump_result(out.result["h_eval"]);
      return out.numerical_failure ? 3 : 0;
    }
    if (*f_cmd) {
      const Grid grid = parse_grid(grid_spec);
      const auto j = io::read_json_file(chain_file);
      io::Reader rd;
      Scenario s;
      s.name = "flatnorm";
      s.task = "flatnorm";
      s.grid = GridSpec{grid.x0(), grid.y0(), grid.x1(), grid.y1(), grid.delta()};
      if (j.contains("faces")) {
        if (auto c = io::grid_chain_from_json(j, rd, "")) s.chain = *c;
      } else if (j.contains("segments")) {
        s.chain = io::poly_chain_from_json(j, rd, "");
      } else {
        s.chain = io::point_chain_from_json(j, rd, "");
      }
      rd.check(chain_file);
      const int m = std::visit([](const auto& c) { return c.materials(); }, *s.chain);
      const auto h = io::load_norm(norm_arg, m);
      s.norm = NormSpec{h.name(), h.dual_vertices(), h.dim()};
      const auto out = evaluate(s);
      auto res = out.result["flatnorm"];
      std::cout << dump_result(res);
      return 0;
    }
  } catch (const NumericalError& e) {
    std::cerr << "mmt: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    std::cerr << "mmt: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mmt: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
