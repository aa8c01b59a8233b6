#ifndef PCHSAT_CLI_HPP
#define PCHSAT_CLI_HPP

// Command-line front end. JSON reports go to `out`, one-line summaries and
// diagnostics to `err`. Exit codes: 0 SAT / verified, 1 UNSAT / rejected,
// 2 error (10 and 20 replace 0 and 1 under --dimacs-exit).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pchsat/cf_solver.hpp"
#include "pchsat/decomp.hpp"
#include "pchsat/formula.hpp"
#include "pchsat/oracle.hpp"
#include "pchsat/prob_solver.hpp"
#include "pchsat/reductions.hpp"

namespace pchsat {

namespace cli_detail {

inline std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::uint64_t parse_cap(const std::string& text, const char* what) {
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno != 0 || text[0] == '-' || v == 0)
    throw ValidationError(std::string("invalid ") + what + " '" + text + "'");
  return v;
}

inline const char* fragment_name(Depth d) { return d == Depth::prob ? "prob-lin" : "cf-lin"; }

struct SolveArgs {
  std::string input;
  std::string fragment = "auto";
  std::string decomp = "greedy";
  std::string certificate;
  std::string cap;
  unsigned threads = 1;
  bool verify = false;
  bool no_timing = false;
  bool dimacs_exit = false;
};

struct Caps {
  std::uint64_t lp = kDefaultLpVariableCap;
  std::uint64_t function_space = kDefaultFunctionSpaceCap;
  std::uint64_t joint = kDefaultJointCap;
  std::uint64_t support = kDefaultSupportCap;
};

/// PCHSAT_CAP replaces every default cap; an explicit --cap wins over it.
inline Caps resolve_caps(const std::string& flag) {
  Caps caps;
  std::string text = flag;
  if (text.empty())
    if (const char* env = std::getenv("PCHSAT_CAP")) text = env;
  if (!text.empty()) {
    std::uint64_t c = parse_cap(text, "cap");
    caps = Caps{c, c, c, c};
  }
  return caps;
}

inline DecompositionStrategy parse_strategy(const std::string& s) {
  return s == "exact" ? DecompositionStrategy::exact : DecompositionStrategy::greedy_minfill;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  os << text;
}

inline int solve_command(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  using nlohmann::json;
  auto start = std::chrono::steady_clock::now();
  Formula f = parse(read_input(a.input));
  FragmentClass cls = validate_and_classify(f);
  Caps caps = resolve_caps(a.cap);
  std::string fragment = a.fragment == "auto" ? fragment_name(cls.depth) : a.fragment;
  json report;
  report["input"] = a.input;
  report["fragment"] = fragment;
  report["class"] = {{"depth", to_string(cls.depth)}, {"breadth", to_string(cls.breadth)}};
  json params{{"n", f.num_variables()}, {"d", f.domain.size()}, {"constraints", f.constraints.size()}};
  bool sat = false;
  json certificate;
  if (fragment == "prob-lin") {
    if (cls.depth != Depth::prob) throw FragmentMismatch("formula uses interventions; prob-lin needs none");
    ProbSolveOptions opt;
    opt.strategy = parse_strategy(a.decomp);
    opt.lp.max_variables = caps.lp;
    ProbVerdict v = solve_prob(f, opt);
    sat = v.satisfiable;
    params["width"] = v.width;
    params["solved_domain_size"] = v.solved.domain.size();
    params["lp_variables"] = v.lp_variables;
    params["lp_rows"] = v.lp_rows;
    params["pivots"] = v.pivots;
    if (sat) {
      if (a.verify) {
        bool ok = verify_certificate(f, *v.certificate) && satisfies(reconstruct_scm(*v.certificate), f, caps.support);
        if (!ok) throw InternalError("certificate failed re-verification");
        report["verified"] = true;
      }
      certificate = to_json(*v.certificate);
    } else {
      json farkas = json::array();
      for (const auto& y : v.farkas) farkas.push_back(to_string(y));
      certificate = {{"kind", "farkas"}, {"multipliers", farkas}};
    }
  } else {
    CfSolveOptions opt;
    opt.function_space_cap = caps.function_space;
    opt.lp.max_variables = caps.lp;
    opt.threads = a.threads;
    CfVerdict v = solve_counterfactual(f, opt);
    sat = v.satisfiable;
    params["orderings_tried"] = v.orderings_tried;
    params["function_space_size"] = v.function_space_size;
    params["lp_columns"] = v.lp_columns;
    params["lp_rows"] = v.lp_rows;
    params["pivots"] = v.pivots;
    if (sat) {
      if (a.verify) {
        if (!verify_certificate(f, *v.model, caps.support)) throw InternalError("certificate failed re-verification");
        report["verified"] = true;
      }
      certificate = to_json(*v.model);
    }
  }
  report["verdict"] = sat ? "SAT" : "UNSAT";
  report["parameters"] = params;
  if (!certificate.is_null()) {
    if (!a.certificate.empty()) {
      write_file(a.certificate, certificate.dump(2) + "\n");
      report["certificate"] = a.certificate;
    } else {
      report["certificate"] = certificate;
    }
  }
  if (!a.no_timing)
    report["timing_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out << report.dump(2) << "\n";
  err << (sat ? "SAT" : "UNSAT") << " (" << fragment << ")\n";
  if (a.dimacs_exit) return sat ? 10 : 20;
  return sat ? 0 : 1;
}

inline int verify_command(const std::string& formula_path, const std::string& cert_path, const std::string& cap,
                          std::ostream& out, std::ostream& err) {
  Formula f = parse(read_input(formula_path));
  FragmentClass cls = validate_and_classify(f);
  Caps caps = resolve_caps(cap);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_input(cert_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed certificate: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("certificate has no kind");
  std::string kind = j["kind"].get<std::string>();
  bool ok = false;
  try {
    if (kind == "bag-marginals") {
      if (cls.depth != Depth::prob) throw FragmentMismatch("bag-marginal certificate for a formula with interventions");
      ok = verify_certificate(f, bag_certificate_from_json(j));
    } else if (kind == "canonical-model") {
      ok = verify_certificate(f, canonical_model_from_json(j), caps.support);
    } else {
      throw ValidationError("unknown certificate kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed certificate: ") + e.what());
  }
  out << nlohmann::json{{"kind", kind}, {"verified", ok}}.dump(2) << "\n";
  err << (ok ? "certificate verified" : "certificate rejected") << "\n";
  return ok ? 0 : 1;
}

inline int oracle_command(const std::string& kind, const std::string& path, std::size_t k, const std::string& cap,
                          std::ostream& out, std::ostream& err) {
  nlohmann::json report{{"oracle", kind}};
  bool sat = false;
  if (kind == "prob") {
    Formula f = parse(read_input(path));
    OracleVerdict v = prob_joint_oracle(f, resolve_caps(cap).joint);
    sat = v.satisfiable;
    report["joint_size"] = v.joint.probability.size();
  } else if (kind == "cnf") {
    sat = truth_table_sat(parse_dimacs(read_input(path)));
  } else {
    sat = max_clique_exists(parse_colored_graph(read_input(path)), k);
    report["k"] = k;
  }
  report["verdict"] = sat ? "SAT" : "UNSAT";
  out << report.dump(2) << "\n";
  err << (sat ? "SAT" : "UNSAT") << " (" << kind << " oracle)\n";
  return sat ? 0 : 1;
}

inline int gen_command(const std::string& kind, const std::string& path, std::size_t k, std::ostream& out) {
  Formula f;
  if (kind == "threesat-base") f = gen_threesat_probbase(parse_dimacs(read_input(path)));
  else if (kind == "threesat-causal") f = gen_threesat_causal(parse_dimacs(read_input(path)));
  else f = gen_clique_probbase(parse_colored_graph(read_input(path)), k);
  out << to_text(f);
  return 0;
}

inline int decomp_command(const std::string& path, const std::string& strategy, const std::string& format,
                          std::ostream& out) {
  Formula f = parse(read_input(path));
  validate(f);
  PrimalGraph g = build_primal_graph(f);
  TreeDecomposition td = compute_decomposition(g, parse_strategy(strategy));
  if (format == "pace") {
    out << to_pace(td);
    return 0;
  }
  NiceTreeDecomposition nt = make_nice(td);
  out << nlohmann::json{{"width", td.width()}, {"nice", to_json(nt, f.variables)}}.dump(2) << "\n";
  return 0;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Satisfiability of linear constraints over probabilistic, interventional and counterfactual terms"};
  app.require_subcommand(1);

  cli_detail::SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Decide a formula and print a JSON report");
  solve->add_option("input", sa.input, "Formula file, or - for stdin")->required();
  solve->add_option("--fragment", sa.fragment, "auto, prob-lin or cf-lin")
      ->check(CLI::IsMember({"auto", "prob-lin", "cf-lin"}));
  solve->add_flag("--verify", sa.verify, "Re-check the certificate before reporting");
  solve->add_option("--decomp", sa.decomp, "greedy or exact")->check(CLI::IsMember({"greedy", "exact"}));
  solve->add_option("--cap", sa.cap, "Cap on LP variables, function tuples and supports");
  solve->add_option("--certificate", sa.certificate, "Write the certificate here instead of inline");
  solve->add_flag("--no-timing", sa.no_timing, "Omit timing so output is reproducible");
  solve->add_flag("--dimacs-exit", sa.dimacs_exit, "Exit 10 for SAT and 20 for UNSAT");
  solve->add_option("--threads", sa.threads, "Orderings solved concurrently")->check(CLI::PositiveNumber);

  std::string vformula, vcert, vcap;
  auto* verify = app.add_subcommand("verify", "Check a certificate against a formula");
  verify->add_option("formula", vformula)->required();
  verify->add_option("certificate", vcert)->required();
  verify->add_option("--cap", vcap, "Cap on evaluated supports");

  std::string okind = "prob", opath, ocap;
  std::size_t ok = 3;
  auto* oracle = app.add_subcommand("oracle", "Brute-force reference answer");
  oracle->add_option("input", opath)->required();
  oracle->add_option("--kind", okind, "prob (formula), cnf (DIMACS) or clique (colored graph)")
      ->check(CLI::IsMember({"prob", "cnf", "clique"}));
  oracle->add_option("--k", ok, "Clique size");
  oracle->add_option("--cap", ocap, "Cap on the joint distribution size");

  std::string gkind, gpath;
  std::size_t gk = 3;
  auto* gen = app.add_subcommand("gen", "Generate a formula from a hardness reduction");
  gen->add_option("kind", gkind, "threesat-base, threesat-causal or clique")
      ->required()
      ->check(CLI::IsMember({"threesat-base", "threesat-causal", "clique"}));
  gen->add_option("input", gpath, "DIMACS file, or colored graph for clique")->required();
  gen->add_option("--k", gk, "Number of colors");

  std::string dpath, dstrategy = "greedy", dformat = "json";
  auto* decomp = app.add_subcommand("decomp", "Tree decomposition of a formula's primal graph");
  decomp->add_option("input", dpath)->required();
  decomp->add_option("--decomp", dstrategy)->check(CLI::IsMember({"greedy", "exact"}));
  decomp->add_option("--format", dformat)->check(CLI::IsMember({"json", "pace"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*solve) return cli_detail::solve_command(sa, out, err);
    if (*verify) return cli_detail::verify_command(vformula, vcert, vcap, out, err);
    if (*oracle) return cli_detail::oracle_command(okind, opath, ok, ocap, out, err);
    if (*gen) return cli_detail::gen_command(gkind, gpath, gk, out);
    return cli_detail::decomp_command(dpath, dstrategy, dformat, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << "\n";
  } catch (const FragmentMismatch& e) {
    err << "fragment mismatch: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  }
  return 2;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"pchsat"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pchsat

#endif  // PCHSAT_CLI_HPP
