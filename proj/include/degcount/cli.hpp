#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bipartite.hpp"
#include "degrees.hpp"
#include "edgeworth.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "sampler.hpp"

namespace degcount::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInfeasible = 2,
  kSolverFailed = 3,
  kSamplerExhausted = 4,
  kOracleTooLarge = 5,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::IndexOutOfRange: return kUsage;
    case ErrorKind::OddParity:
    case ErrorKind::Infeasible:
    case ErrorKind::NotStrictlyFeasible: return kInfeasible;
    case ErrorKind::DivergedToBoundary:
    case ErrorKind::MaxIterExceeded:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::KernelDimensionNotOne:
    case ErrorKind::NotAnInteger: return kSolverFailed;
    case ErrorKind::TrialsExhausted: return kSamplerExhausted;
    case ErrorKind::TooLarge: return kOracleTooLarge;
  }
  return kUsage;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, int column, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what) {}
};

struct InputSpec {
  enum class Kind { graph, bipartite };
  Kind kind = Kind::graph;
  std::vector<int> degrees;
  std::vector<int> rows;
  std::vector<int> cols;
  std::string source;
};

namespace detail {

inline std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::vector<int> json_int_array(const nlohmann::json& doc, const char* key, const std::string& source) {
  if (!doc.contains(key) || !doc[key].is_array())
    throw ParseError(source, 1, 1, std::string("expected an array under key \"") + key + "\"");
  std::vector<int> out;
  for (const auto& v : doc[key]) {
    if (!v.is_number_integer()) throw ParseError(source, 1, 1, std::string("non-integer entry in \"") + key + "\"");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace detail

/// Plain text: whitespace- or comma-separated integers forming one degree
/// sequence. JSON: {"rows": [...], "cols": [...]} for margins or
/// {"degrees": [...]} for a degree sequence.
inline InputSpec parse_input(const std::string& text, const std::string& source) {
  InputSpec spec;
  spec.source = source;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
      throw ParseError(source, line, col, "invalid JSON");
    }
    if (doc.contains("degrees")) {
      spec.degrees = detail::json_int_array(doc, "degrees", source);
    } else {
      spec.kind = InputSpec::Kind::bipartite;
      spec.rows = detail::json_int_array(doc, "rows", source);
      spec.cols = detail::json_int_array(doc, "cols", source);
    }
    return spec;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ',') ++i;
    const std::string token = text.substr(start, i - start);
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      const auto [line, col] = detail::line_column(text, start);
      throw ParseError(source, line, col, "expected an integer, found '" + token + "'");
    }
    spec.degrees.push_back(value);
  }
  if (spec.degrees.empty()) throw ParseError(source, 1, 1, "no degrees given");
  return spec;
}

inline InputSpec load_input(const std::string& path, std::istream& in) {
  std::ostringstream buf;
  if (path == "-") {
    buf << in.rdbuf();
    return parse_input(buf.str(), "<stdin>");
  }
  std::ifstream file(path);
  if (!file) throw ParseError(path, 0, 0, "cannot open file");
  buf << file.rdbuf();
  return parse_input(buf.str(), path);
}

namespace detail {

inline nlohmann::json big_to_json(const BigInt& v) {
  if (v <= std::numeric_limits<std::uint64_t>::max()) return v.convert_to<std::uint64_t>();
  return v.str();
}

inline double ratio_to(const BigInt& exact, double ln_estimate) {
  // exp(ln_estimate - ln exact), robust for huge counts
  const double ln_exact = std::log(exact.convert_to<double>());
  return std::exp(ln_estimate - ln_exact);
}

inline std::string format_k(const std::optional<int>& k) { return k ? std::to_string(*k) : std::string("?"); }

struct Common {
  std::string input;
  std::string seq;
  std::string json_text;
  unsigned threads = 0;
  double tol = 0.0;
  bool json = false;
};

inline void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("input", c.input, "input file, or - for standard input");
  cmd->add_option("--seq", c.seq, "inline degree sequence, e.g. \"4 4 4 4 4\"");
  cmd->add_option("--margins", c.json_text, "inline JSON margins, e.g. '{\"rows\":[1,1],\"cols\":[1,1]}'");
  cmd->add_option("--threads", c.threads, "worker threads (overrides DEGCOUNT_THREADS)");
}

inline InputSpec resolve_input(const Common& c, std::istream& in) {
  const int given = !c.input.empty() + !c.seq.empty() + !c.json_text.empty();
  if (given != 1) throw ParseError("<args>", 0, 0, "give exactly one of INPUT, --seq, --margins");
  if (!c.seq.empty()) return parse_input(c.seq, "--seq");
  if (!c.json_text.empty()) return parse_input(c.json_text, "--margins");
  return load_input(c.input, in);
}

inline unsigned threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

inline void write_json(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << "\n"; }

inline std::string edge_line(const GraphSample& g) {
  std::string line;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (i) line += ' ';
    line += std::to_string(g.edges[i].j + 1) + "-" + std::to_string(g.edges[i].k + 1);
  }
  return line;
}

inline int cmd_check(const InputSpec& spec, bool json, std::ostream& out) {
  nlohmann::json report;
  bool feasible = false;
  if (spec.kind == InputSpec::Kind::graph) {
    const DegreeSequence d(spec.degrees);
    const auto eg = erdos_gallai(d);
    const auto strict = erdos_gallai(d, true);
    const auto cert = tameness_sufficient(d);
    feasible = eg.feasible;
    report["kind"] = "graph";
    report["n"] = d.size();
    report["parity_ok"] = eg.parity_ok;
    report["feasible"] = eg.feasible;
    report["strictly_feasible"] = strict.strictly_feasible;
    report["first_violated_k"] = eg.first_violated_k ? nlohmann::json(*eg.first_violated_k) : nlohmann::json();
    report["certificate"] = {{"alpha", cert.alpha},
                             {"beta", cert.beta},
                             {"n0", std::isfinite(cert.n0) ? nlohmann::json(cert.n0) : nlohmann::json()},
                             {"delta", cert.delta},
                             {"applies", cert.applies}};
    try {
      report["delta_observed"] = tameness_observed(solve_maxent(d));
    } catch (const Error& e) {
      report["delta_observed"] = nullptr;
      report["maxent_error"] = e.what();
    }
    if (!json) {
      out << "kind: graph, n = " << d.size() << "\n";
      out << "parity: " << (eg.parity_ok ? "even" : "odd") << "\n";
      if (eg.first_violated_k) out << "feasible: no (EG violated at k=" << *eg.first_violated_k << ")\n";
      else out << "feasible: " << (eg.feasible ? "yes" : "no (odd degree sum)") << "\n";
      out << "strictly feasible: "
          << (strict.strictly_feasible ? "yes" : "no (strict EG fails at k=" + format_k(strict.first_violated_k) + ")")
          << "\n";
      out << "tameness certificate: alpha = " << cert.alpha << ", beta = " << cert.beta << ", n0 = " << cert.n0
          << ", delta = " << cert.delta << ", applies = " << (cert.applies ? "yes" : "no") << "\n";
    }
  } else {
    const BipartiteMargins mg(spec.rows, spec.cols);
    const auto gr = gale_ryser(mg);
    feasible = gr.feasible;
    report["kind"] = "bipartite";
    report["m"] = mg.num_rows();
    report["n"] = mg.num_cols();
    report["balanced"] = gr.parity_ok;
    report["feasible"] = gr.feasible;
    report["strictly_feasible"] = gr.strictly_feasible;
    report["first_violated_k"] = gr.first_violated_k ? nlohmann::json(*gr.first_violated_k) : nlohmann::json();
    try {
      report["delta_observed"] = tameness_observed(solve_maxent_bipartite(mg));
    } catch (const Error& e) {
      report["delta_observed"] = nullptr;
      report["maxent_error"] = e.what();
    }
    if (!json) {
      out << "kind: bipartite, m = " << mg.num_rows() << ", n = " << mg.num_cols() << "\n";
      if (!gr.parity_ok) out << "feasible: no (row and column totals differ)\n";
      else if (gr.first_violated_k) out << "feasible: no (GR violated at k=" << *gr.first_violated_k << ")\n";
      else out << "feasible: yes\n";
      out << "strictly feasible: " << (gr.strictly_feasible ? "yes" : "no") << "\n";
    }
  }
  if (json) {
    write_json(out, report);
  } else if (report["delta_observed"].is_null()) {
    out << "observed delta: n/a (" << report["maxent_error"].get<std::string>() << ")\n";
  } else {
    out << "observed delta: " << report["delta_observed"].get<double>() << "\n";
  }
  return feasible ? kOk : kInfeasible;
}

inline nlohmann::json term(const char* name, double value) { return {{"name", name}, {"value", value + 0.0}}; }  // no "-0"

inline int cmd_count(const InputSpec& spec, const Common& c, bool exact, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const SolverOptions opts{c.tol, 100};
  const unsigned threads = threads_of(c);
  nlohmann::json j;
  double ln_count = 0.0;
  if (spec.kind == InputSpec::Kind::graph) {
    const DegreeSequence d(spec.degrees);
    const auto r = count_graphs(d, opts, threads);
    ln_count = r.ln_count;
    j["kind"] = "graph";
    j["ln_count"] = r.ln_count;
    j["count"] = r.count ? nlohmann::json(*r.count) : nlohmann::json();
    j["entropy"] = r.entropy_term;
    j["log_det"] = r.log_det_Q;
    j["mu"] = r.mu;
    j["nu"] = r.nu;
    j["delta_observed"] = r.delta_observed;
    j["iterations"] = r.iterations;
    j["log2_term"] = r.log2_term;
    j["entropy_term"] = r.entropy_term;
    j["gaussian_term"] = r.gaussian_term;
    j["edgeworth_term"] = r.edgeworth_term;
    const double n = static_cast<double>(d.size());
    j["terms"] = nlohmann::json::array({term("ln 2", r.log2_term), term("entropy", r.entropy_term),
                                        term("-(n/2) ln 2pi", -0.5 * n * std::log(2.0 * std::numbers::pi)),
                                        term("-(1/2) log_det", -0.5 * r.log_det_Q), term("-mu/2", -r.mu / 2.0),
                                        term("nu", r.nu)});
    if (exact) {
      const auto e = exact_count_graphs(d);
      j["exact_count"] = big_to_json(e.value);
      j["ratio"] = ratio_to(e.value, r.ln_count);
    }
  } else {
    const BipartiteMargins mg(spec.rows, spec.cols);
    const auto r = count_bipartite(mg, opts, threads);
    ln_count = r.ln_count;
    j["kind"] = "bipartite";
    j["ln_count"] = r.ln_count;
    j["count"] = r.count ? nlohmann::json(*r.count) : nlohmann::json();
    j["entropy"] = r.entropy_term;
    j["log_det"] = r.log_pdet;
    j["mu"] = r.mu;
    j["nu"] = r.nu;
    j["delta_observed"] = r.delta_observed;
    j["iterations"] = r.iterations;
    j["entropy_term"] = r.entropy_term;
    j["gaussian_term"] = r.gaussian_term;
    j["edgeworth_term"] = r.edgeworth_term;
    const double dim = static_cast<double>(mg.num_rows() + mg.num_cols());
    j["terms"] = nlohmann::json::array({term("entropy", r.entropy_term), term("(1/2) ln(m+n)", 0.5 * std::log(dim)),
                                        term("-((m+n-1)/2) ln 4pi", -0.5 * (dim - 1) * std::log(4.0 * std::numbers::pi)),
                                        term("-(1/2) log_det", -0.5 * r.log_pdet), term("-mu/2", -r.mu / 2.0),
                                        term("nu", r.nu)});
    if (exact) {
      const auto e = exact_count_bipartite(mg);
      j["exact_count"] = big_to_json(e.value);
      j["ratio"] = ratio_to(e.value, r.ln_count);
    }
  }
  j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.json) {
    write_json(out, j);
    return kOk;
  }
  out << std::setprecision(12);
  out << "ln_count: " << ln_count << "\n";
  for (const auto& t : j["terms"]) out << "  " << t["name"].get<std::string>() << ": " << t["value"].get<double>() << "\n";
  out << "mu: " << j["mu"].get<double>() << ", nu: " << j["nu"].get<double>() << "\n";
  if (!j["count"].is_null()) out << "count: " << j["count"].get<double>() << "\n";
  out << "observed delta: " << j["delta_observed"].get<double>() << ", iterations: " << j["iterations"].get<int>()
      << "\n";
  if (exact) out << "exact_count: " << j["exact_count"].dump() << ", ratio: " << j["ratio"].get<double>() << "\n";
  return kOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymptotic and exact counts of graphs with given degrees and of 0-1 matrices with given margins"};
  app.require_subcommand(1);

  detail::Common check_opts, count_opts, sample_opts, exact_opts, maxent_opts;
  auto* check = app.add_subcommand("check", "feasibility and tameness report");
  detail::add_common(check, check_opts);
  check->add_flag("--json", check_opts.json, "emit JSON");

  auto* count = app.add_subcommand("count", "asymptotic count");
  detail::add_common(count, count_opts);
  bool with_exact = false;
  count->add_flag("--json", count_opts.json, "emit JSON");
  count->add_option("--tol", count_opts.tol, "solver tolerance (default 1e-10 * max degree)");
  count->add_flag("--exact", with_exact, "also run the exact oracle and report the ratio");

  auto* sample = app.add_subcommand("sample", "uniform random graphs, one edge list per line");
  detail::add_common(sample, sample_opts);
  int k = 1;
  std::uint64_t seed = 0;
  std::uint64_t max_trials = 10'000'000;
  std::string sample_method = "rejection";
  sample->add_option("-k", k, "number of graphs")->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("--max-trials", max_trials, "rejection budget per graph");
  sample->add_option("--method", sample_method, "rejection or exact")->check(CLI::IsMember({"rejection", "exact"}));

  auto* exact = app.add_subcommand("exact", "exact count from an oracle");
  detail::add_common(exact, exact_opts);
  std::string method = "auto";
  exact->add_option("--method", method, "backtrack, dp, fourier or auto")
      ->check(CLI::IsMember({"backtrack", "dp", "fourier", "auto"}));

  auto* maxent = app.add_subcommand("maxent", "maximum entropy matrix summary as JSON");
  detail::add_common(maxent, maxent_opts);
  maxent->add_option("--tol", maxent_opts.tol, "solver tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (check->parsed()) return detail::cmd_check(detail::resolve_input(check_opts, in), check_opts.json, out);
    if (count->parsed()) return detail::cmd_count(detail::resolve_input(count_opts, in), count_opts, with_exact, out);
    if (sample->parsed()) {
      const auto spec = detail::resolve_input(sample_opts, in);
      if (spec.kind != InputSpec::Kind::graph) {
        err << "sample: only degree sequences are supported\n";
        return kUsage;
      }
      const DegreeSequence d(spec.degrees);
      if (!check_parity(d)) throw Error(ErrorKind::OddParity, "sum of degrees is odd; no graph exists");
      if (!erdos_gallai(d).feasible) throw Error(ErrorKind::Infeasible, "Erdos-Gallai conditions fail");
      if (sample_method == "exact") {
        GraphCountingEngine engine;
        for (int i = 0; i < k; ++i)
          out << detail::edge_line(sample_uniform_exact(d, engine, seed, static_cast<std::uint64_t>(i))) << "\n";
        err << "exact sampler: " << engine.states() << " memoised states\n";
        return kOk;
      }
      const auto sol = proposal_tilt(d);
      if (!(sol.residual_inf <= sol.tol)) err << "no interior maximum entropy point; proposing with zeta = 1/2\n";
      SamplerOptions opts;
      opts.seed = seed;
      opts.max_trials = max_trials;
      opts.threads = detail::threads_of(sample_opts);
      std::uint64_t total = 0;
      for (int i = 0; i < k; ++i) {
        const auto res = sample_uniform(d, sol, opts);
        out << detail::edge_line(res.graph) << "\n";
        err << "graph " << i + 1 << ": trials used " << res.trials_used << "\n";
        total += res.trials_used;
        opts.first_trial = res.trial_index + 1;
      }
      err << "total trials: " << total << ", acceptance rate " << static_cast<double>(k) / static_cast<double>(total)
          << "\n";
      return kOk;
    }
    if (exact->parsed()) {
      const auto spec = detail::resolve_input(exact_opts, in);
      const unsigned threads = detail::threads_of(exact_opts);
      if (spec.kind == InputSpec::Kind::bipartite) {
        if (method != "auto" && method != "dp") {
          err << "exact: method " << method << " is not available for margins\n";
          return kUsage;
        }
        out << exact_count_bipartite(BipartiteMargins(spec.rows, spec.cols)).value << "\n";
        return kOk;
      }
      const DegreeSequence d(spec.degrees);
      if (method == "dp") {
        err << "exact: method dp is for margins; use backtrack or fourier\n";
        return kUsage;
      }
      if (method == "fourier") {
        ExactCount c;
        try {
          c = fourier_count_graphs(d, solve_maxent(d), threads);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DivergedToBoundary && e.kind() != ErrorKind::Infeasible &&
              e.kind() != ErrorKind::MaxIterExceeded)
            throw;
          c = fourier_count_graphs(d, threads);
        }
        out << c.value << "\n";
        return kOk;
      }
      out << exact_count_graphs(d).value << "\n";
      return kOk;
    }
    if (maxent->parsed()) {
      const auto spec = detail::resolve_input(maxent_opts, in);
      const SolverOptions opts{maxent_opts.tol, 100};
      nlohmann::json j;
      if (spec.kind == InputSpec::Kind::graph) {
        const auto sol = solve_maxent(DegreeSequence(spec.degrees), opts);
        j = {{"kind", "graph"},         {"lambda", sol.lambda},         {"entropy", sol.entropy},
             {"zeta_min", sol.zeta_min}, {"zeta_max", sol.zeta_max},     {"residual", sol.residual_inf},
             {"tol", sol.tol},           {"iterations", sol.iterations}, {"delta_observed", tameness_observed(sol)}};
      } else {
        const auto sol = solve_maxent_bipartite(BipartiteMargins(spec.rows, spec.cols), opts);
        j = {{"kind", "bipartite"},         {"lambda_rows", sol.lambda_rows}, {"lambda_cols", sol.lambda_cols},
             {"entropy", sol.entropy},       {"zeta_min", sol.zeta_min},       {"zeta_max", sol.zeta_max},
             {"residual", sol.residual_inf}, {"tol", sol.tol},                 {"iterations", sol.iterations},
             {"delta_observed", tameness_observed(sol)}};
      }
      detail::write_json(out, j);
      return kOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return kUsage;
}

}  // namespace degcount::cli
