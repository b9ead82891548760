// Command line front end; talks to the library exclusively through the
// C interface in graphflow/graphflow.h.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphflow/graphflow.h"

namespace {

namespace fs = std::filesystem;

struct GraphHandle {
  gf_graph* ptr = nullptr;
  ~GraphHandle() { gf_graph_free(ptr); }
};

struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { gf_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

[[noreturn]] void fail(const std::string& message) {
  std::cerr << "graphflow: " << message << "\n";
  std::exit(1);
}

void check(gf_status status, const std::string& what) {
  if (status != GF_OK)
    fail(what + ": " + gf_status_name(status) + ": " + gf_last_error());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path.string());
  out << content;
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec && !fs::exists(p)) fail("cannot create output directory " + p.string());
  return p;
}

GraphHandle load_graph(const std::string& path) {
  GraphHandle g;
  check(gf_graph_load(path.c_str(), &g.ptr), "loading " + path);
  return g;
}

std::string fmt(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

// Minimal line chart of the distance column; one polyline, linear axes.
std::string svg_from_csv(const std::string& csv) {
  std::vector<std::pair<double, double>> points;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 5) continue;
    const double t = std::strtod(fields[0].c_str(), nullptr);
    const double d = std::strtod(fields[3].c_str(), nullptr);
    if (std::isfinite(d)) points.emplace_back(t, d);
  }
  const double width = 720, height = 420, margin = 50;
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"420\" "
      "viewBox=\"0 0 720 420\">\n"
      "<rect width=\"720\" height=\"420\" fill=\"white\"/>\n";
  if (points.size() >= 2) {
    double t0 = points.front().first, t1 = points.back().first;
    double d0 = points.front().second, d1 = d0;
    for (const auto& [t, d] : points) {
      d0 = std::min(d0, d);
      d1 = std::max(d1, d);
    }
    if (t1 <= t0) t1 = t0 + 1.0;
    if (d1 <= d0) d1 = d0 + 1.0;
    auto sx = [&](double t) {
      return margin + (t - t0) / (t1 - t0) * (width - 2 * margin);
    };
    auto sy = [&](double d) {
      return height - margin - (d - d0) / (d1 - d0) * (height - 2 * margin);
    };
    svg += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" "
           "points=\"";
    for (const auto& [t, d] : points)
      svg += fmt(sx(t)) + "," + fmt(sy(d)) + " ";
    svg += "\"/>\n";
    svg += "<line x1=\"50\" y1=\"370\" x2=\"670\" y2=\"370\" stroke=\"black\"/>\n";
    svg += "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"370\" stroke=\"black\"/>\n";
    svg += "<text x=\"360\" y=\"405\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
    svg += "<text x=\"18\" y=\"210\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 210)\">distance</text>\n";
    svg += "<text x=\"50\" y=\"385\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + fmt(t0) + "</text>\n";
    svg += "<text x=\"670\" y=\"385\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">" + fmt(t1) + "</text>\n";
    svg += "<text x=\"46\" y=\"374\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">" + fmt(d0) + "</text>\n";
    svg += "<text x=\"46\" y=\"54\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">" + fmt(d1) + "</text>\n";
  } else {
    svg += "<text x=\"360\" y=\"210\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\">no distance data</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and spectral analysis of buffered transport flows "
               "on metric graphs"};
  app.require_subcommand(1);

  std::string graph_path, out_dir = ".", profile = "buffered";
  std::string init = "impulse", kind = "cycle";
  int cells = 128, cadence = 16, basis = 16, dim = 12, trials = 20, n = 2;
  double theta = 0.9, horizon = 50.0, lambda = 5.0, tol = 1e-10;
  double mass = 1.0, buffer_fraction = 0.25;
  unsigned long long seed = 0;
  bool svg = false;

  auto* c_validate = app.add_subcommand("validate", "Check the standing assumptions of a graph file");
  c_validate->add_option("--graph", graph_path, "graph JSON file")->required();
  c_validate->add_option("--profile", profile, "buffered|unbuffered")
      ->check(CLI::IsMember({"buffered", "unbuffered"}));
  c_validate->add_option("--out", out_dir, "output directory");

  auto* c_analyze = app.add_subcommand("analyze", "Connectivity, irreducibility, fixed vector and equilibrium summary");
  c_analyze->add_option("--graph", graph_path)->required();
  c_analyze->add_option("--cells", cells);
  c_analyze->add_option("--tol", tol);
  c_analyze->add_option("--out", out_dir);

  auto* c_simulate = app.add_subcommand("simulate", "Run the flow and write a trajectory CSV plus summary");
  c_simulate->add_option("--graph", graph_path)->required();
  c_simulate->add_option("--cells", cells);
  c_simulate->add_option("--theta", theta);
  c_simulate->add_option("--horizon", horizon);
  c_simulate->add_option("--cadence", cadence);
  c_simulate->add_option("--init", init, "buffers|uniform|impulse|random")
      ->check(CLI::IsMember({"buffers", "uniform", "impulse", "random"}));
  c_simulate->add_option("--seed", seed);
  c_simulate->add_option("--out", out_dir);
  c_simulate->add_flag("--svg", svg, "also write a distance plot");

  auto* c_equilibrium = app.add_subcommand("equilibrium", "Write the explicit stationary state");
  c_equilibrium->add_option("--graph", graph_path)->required();
  c_equilibrium->add_option("--cells", cells);
  c_equilibrium->add_option("--mass", mass, "target total mass");
  c_equilibrium->add_option("--tol", tol);
  c_equilibrium->add_option("--out", out_dir);

  auto* c_resolvent = app.add_subcommand("resolvent", "Closed-form and series resolvent residual report");
  c_resolvent->add_option("--graph", graph_path)->required();
  c_resolvent->add_option("--cells", cells);
  c_resolvent->add_option("--lambda", lambda);
  c_resolvent->add_option("--tol", tol);
  c_resolvent->add_option("--out", out_dir);

  auto* c_perturb = app.add_subcommand("perturb-check", "Matrix-scale perturbation surrogate suite");
  c_perturb->add_option("--dim", dim);
  c_perturb->add_option("--trials", trials);
  c_perturb->add_option("--seed", seed);
  c_perturb->add_option("--out", out_dir);

  auto* c_family = app.add_subcommand("family", "Generate a test-family graph file");
  c_family->add_option("--kind", kind, "cycle|fork_merge|random_scc")
      ->required()
      ->check(CLI::IsMember({"cycle", "fork_merge", "random_scc"}));
  c_family->add_option("--n", n, "vertex count")->required();
  c_family->add_option("--buffer-fraction", buffer_fraction);
  c_family->add_option("--seed", seed);
  c_family->add_option("--out", out_dir);

  auto* c_probe = app.add_subcommand("probe-norm", "Uniform-convergence probe over indicator initial states");
  c_probe->add_option("--graph", graph_path)->required();
  c_probe->add_option("--cells", cells);
  c_probe->add_option("--theta", theta);
  c_probe->add_option("--basis", basis);
  c_probe->add_option("--horizon", horizon);
  c_probe->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "graphflow: " << e.what() << "\n";
    return 2;
  }

  const fs::path out = ensure_out_dir(out_dir);

  if (c_validate->parsed()) {
    GraphHandle g = load_graph(graph_path);
    StringHandle report;
    check(gf_graph_validate(g.ptr, profile == "buffered" ? 1 : 0, &report.ptr),
          "validate");
    write_file(out / "validation.json", report.str());
    const auto doc = nlohmann::json::parse(report.str());
    const bool valid = doc.at("valid").get<bool>();
    std::cerr << "graph " << graph_path << " is "
              << (valid ? "valid" : "invalid") << " (profile " << profile
              << ", " << doc.at("violations").size() << " violations)\n";
    return valid ? 0 : 1;
  }
  if (c_analyze->parsed()) {
    GraphHandle g = load_graph(graph_path);
    StringHandle report;
    check(gf_analyze(g.ptr, cells, tol, &report.ptr), "analyze");
    write_file(out / "analysis.json", report.str());
    std::cerr << "analysis written to " << (out / "analysis.json").string()
              << "\n";
    return 0;
  }
  if (c_simulate->parsed()) {
    GraphHandle g = load_graph(graph_path);
    gf_sim_config config{};
    config.cells = cells;
    config.theta = theta;
    config.horizon = horizon;
    config.cadence = cadence;
    config.init = init.c_str();
    config.seed = seed;
    StringHandle csv, summary;
    check(gf_simulate(g.ptr, &config, &csv.ptr, &summary.ptr), "simulate");
    write_file(out / "trajectory.csv", csv.str());
    write_file(out / "summary.json", summary.str());
    if (svg) write_file(out / "plot.svg", svg_from_csv(csv.str()));
    std::cerr << "trajectory and summary written to " << out.string() << "\n";
    return 0;
  }
  if (c_equilibrium->parsed()) {
    GraphHandle g = load_graph(graph_path);
    StringHandle report;
    check(gf_equilibrium(g.ptr, cells, mass, tol, &report.ptr), "equilibrium");
    write_file(out / "equilibrium.json", report.str());
    std::cerr << "equilibrium written to "
              << (out / "equilibrium.json").string() << "\n";
    return 0;
  }
  if (c_resolvent->parsed()) {
    GraphHandle g = load_graph(graph_path);
    StringHandle report;
    check(gf_resolvent_report(g.ptr, cells, lambda, tol, &report.ptr),
          "resolvent");
    write_file(out / "resolvent.json", report.str());
    std::cerr << "resolvent report written to "
              << (out / "resolvent.json").string() << "\n";
    return 0;
  }
  if (c_perturb->parsed()) {
    StringHandle report;
    check(gf_perturbation_check(dim, trials, seed, &report.ptr),
          "perturb-check");
    write_file(out / "perturbation.json", report.str());
    const auto doc = nlohmann::json::parse(report.str());
    std::cerr << "perturbation suite: " << doc.at("failures").get<int>()
              << " failures in " << trials << " trials\n";
    return 0;
  }
  if (c_family->parsed()) {
    GraphHandle g;
    check(gf_graph_generate(kind.c_str(), n, buffer_fraction, seed, &g.ptr),
          "family");
    const fs::path path = out / "graph.json";
    check(gf_graph_save(g.ptr, path.string().c_str()), "saving graph");
    std::cerr << "graph written to " << path.string() << "\n";
    return 0;
  }
  if (c_probe->parsed()) {
    GraphHandle g = load_graph(graph_path);
    StringHandle report;
    check(gf_probe_norm(g.ptr, cells, theta, basis, horizon, &report.ptr),
          "probe-norm");
    write_file(out / "probe.json", report.str());
    std::cerr << "probe written to " << (out / "probe.json").string() << "\n";
    return 0;
  }
  return 2;
}
