// tap_cli: generate, solve, compare and check tree augmentation instances.
//
// Exit codes: 0 ok, 1 invalid or infeasible input, 2 a check failed,
// 3 the oracle budget ran out on every compared instance.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tap/tap.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitUnknown = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Inputs are shadow-closed on load; closing never changes the optimum, and a
// shadow in the output can be swapped for any input link containing it.
tap::Instance load_instance(const std::string& path) {
  return tap::shadow_close(tap::parse_instance(read_file(path)));
}

// Ratios always print as p/q, integers included.
std::string fraction(const tap::Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::uint64_t default_oracle_budget() {
  if (const char* env = std::getenv("TAP_ORACLE_BUDGET")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed TAP_ORACLE_BUDGET='" << env << "'\n";
    }
  }
  return tap::kDefaultOracleBudget;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string family;
  int k = 1;
  int nodes = 12;
  std::uint64_t seed = 1;
  double factor = tap::kDefaultExtraLinkFactor;
  bool biconnected = false;
  std::string name = "PATH3";
  std::string out;
};

int run_gen(const GenArgs& a) {
  tap::Instance inst = tap::gen_fixture("PATH3");
  std::optional<tap::FractionalAssignment> x;
  std::string summary;
  if (a.family == "tight") {
    inst = tap::gen_tight(a.k, a.biconnected);
    summary = "tight k=" + std::to_string(a.k) + (a.biconnected ? " biconnected" : "") +
              " expected F=" + std::to_string(3 * a.k + 2) + " OPT=" + std::to_string(2 * a.k + 2);
  } else if (a.family == "clawpath") {
    auto cp = tap::gen_clawpath(a.k);
    inst = std::move(cp.instance);
    x = std::move(cp.x);
    summary = "clawpath k=" + std::to_string(a.k) + " x(E)=" + tap::to_string(x->total());
  } else if (a.family == "random") {
    inst = tap::gen_random_stemless(a.nodes, a.seed, a.factor);
    summary = "random nodes=" + std::to_string(a.nodes) + " seed=" + std::to_string(a.seed);
  } else if (a.family == "fixture") {
    inst = tap::gen_fixture(a.name);
    summary = "fixture " + a.name;
  } else {
    throw CLI::ValidationError("family", "unknown family '" + a.family + "'");
  }
  summary += " nodes=" + std::to_string(inst.node_count()) + " links=" + std::to_string(inst.link_count());
  if (a.out.empty()) {
    std::cout << tap::serialize(inst);
    if (x) std::cout << tap::serialize(*x);
    std::cerr << summary << "\n";
  } else {
    write_file(a.out, tap::serialize(inst));
    if (x) {
      write_file(a.out + ".x", tap::serialize(*x));
      summary += " assignment=" + a.out + ".x";
    }
    std::cout << summary << " -> " << a.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string input;
  bool trace = false;
  std::string dot_dir;
  std::string force_matching;
};

int run_solve(const SolveArgs& a) {
  const tap::Instance inst = load_instance(a.input);
  tap::SolveOptions opts;
  if (!a.force_matching.empty()) opts.forced_matching = tap::parse_matching(read_file(a.force_matching));
  int dot_index = 0;
  if (!a.dot_dir.empty()) {
    fs::create_directories(a.dot_dir);
    opts.on_contraction = [&](const tap::ContractedTree& ct, const tap::MatchingState&,
                              const tap::IterationEvent&, std::span<const tap::ImagePair>) {
      std::ostringstream name;
      name << "iter_" << std::setw(3) << std::setfill('0') << dot_index++;
      write_file((fs::path(a.dot_dir) / (name.str() + ".dot")).string(), tap::to_dot(ct, name.str()));
    };
  }
  const tap::SolveResult res = tap::solve(inst, opts);
  std::cout << "F=" << res.F.size() << "\n";
  for (const tap::Link& l : res.sorted_cover()) std::cout << "link " << l.u << " " << l.v << "\n";
  if (a.trace) {
    for (const auto& ev : res.trace) std::cout << tap::format_event(ev) << "\n";
  }
  std::cout << "deficient trees handled: " << res.stats.deficient_handled << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::vector<std::string> inputs;
  std::string dir;
  std::uint64_t budget = 0;
};

int run_compare(const CompareArgs& a) {
  std::vector<std::string> files = a.inputs;
  if (!a.dir.empty()) {
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(a.dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".tap") found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw CLI::ValidationError("compare", "no input instances");

  bool flagged = false;
  bool invalid = false;
  std::size_t unknown = 0;
  std::optional<tap::Rational> max_ratio;
  std::cout << std::left << std::setw(32) << "# instance" << std::setw(8) << "F" << std::setw(8) << "OPT"
            << "ratio\n";
  for (const std::string& path : files) {
    const std::string label = fs::path(path).filename().string();
    try {
      const tap::Instance inst = load_instance(path);
      const tap::SolveResult res = tap::solve(inst);
      const tap::OptResult opt = tap::opt_cover(inst, a.budget);
      std::cout << std::setw(32) << label << std::setw(8) << res.F.size();
      if (!opt.exact) {
        ++unknown;
        std::cout << std::setw(8) << "unknown" << "unknown\n";
        continue;
      }
      const tap::Rational ratio(static_cast<std::int64_t>(res.F.size()), opt.opt_size);
      const bool bad = 2 * res.F.size() > 3 * static_cast<std::size_t>(opt.opt_size);
      flagged = flagged || bad;
      if (!max_ratio || ratio > *max_ratio) max_ratio = ratio;
      std::cout << std::setw(8) << opt.opt_size << fraction(ratio) << (bad ? "  RATIO-VIOLATION" : "")
                << "\n";
    } catch (const std::exception& e) {
      invalid = true;
      std::cout << std::setw(32) << label << "error: " << e.what() << "\n";
    }
  }
  std::cout << "max ratio: " << (max_ratio ? fraction(*max_ratio) : std::string("unknown")) << "\n";
  if (flagged) return kExitCheckFailed;
  if (invalid) return kExitInvalid;
  if (unknown == files.size()) return kExitUnknown;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string input;
  std::string assignment;
  std::string what;
  std::string epsilon = "0";
  std::string scale = "1";
  std::string force_matching;
  std::uint64_t budget = 0;
};

int run_check(const CheckArgs& a) {
  const tap::Instance inst = load_instance(a.input);
  std::optional<tap::FractionalAssignment> x;
  if (!a.assignment.empty()) x = tap::parse_assignment(read_file(a.assignment), inst);
  std::optional<std::vector<tap::Link>> forced;
  if (!a.force_matching.empty()) forced = tap::parse_matching(read_file(a.force_matching));
  auto need_x = [&]() -> const tap::FractionalAssignment& {
    if (!x) throw CLI::ValidationError("--assignment", "required for --what " + a.what);
    return *x;
  };

  if (a.what == "lp0") {
    const tap::Lp0Report r = tap::check_lp0(inst, need_x());
    for (const auto& v : r.covering) {
      std::cout << "covering " << v.edge.first << "-" << v.edge.second << " slack " << tap::to_string(v.slack)
                << "\n";
    }
    for (const auto& v : r.overlapping) {
      std::cout << "overlap " << tap::to_string(v.l1) << " " << tap::to_string(v.l2) << " excess "
                << tap::to_string(v.excess) << "\n";
    }
    for (const auto& v : r.bounds) {
      std::cout << "bound " << tap::to_string(v.link) << " " << tap::to_string(v.value) << "\n";
    }
    std::cout << "lp0: " << (r.ok() ? "feasible" : "infeasible") << "\n";
    return r.ok() ? kExitOk : kExitCheckFailed;
  }
  if (a.what == "potential") {
    const tap::MatchingState ms =
        forced ? tap::forced_matching_state(inst, *forced) : tap::compute_matching_state(inst);
    const tap::Rational eps = tap::parse_rational(a.epsilon);
    const auto cmp = tap::compare_potential(inst, need_x(), ms, eps);
    std::cout << "|M|=" << ms.m_original.size() << " |U|=" << ms.u_original.size()
              << " x(E)=" << tap::to_string(need_x().total()) << "\n";
    std::cout << "potential " << tap::to_string(cmp.lhs) << " bound " << tap::to_string(cmp.rhs) << " epsilon "
              << tap::to_string(eps) << "\n";
    std::cout << (cmp.holds() ? "inequality holds" : "inequality violated") << "\n";
    return cmp.holds() ? kExitOk : kExitCheckFailed;
  }
  if (a.what == "polytope") {
    const tap::Rational scale = tap::parse_rational(a.scale);
    const bool member = tap::matching_polytope_member(inst, need_x(), scale);
    std::cout << "matching polytope (scale " << tap::to_string(scale) << "): " << (member ? "member" : "not a member")
              << "\n";
    return member ? kExitOk : kExitCheckFailed;
  }
  if (a.what == "audit") {
    tap::FractionalAssignment audited;
    if (x) {
      audited = *x;
    } else {
      const tap::OptResult opt = tap::opt_cover(inst, a.budget);
      if (!opt.exact) {
        std::cout << "oracle budget exceeded\n";
        return kExitUnknown;
      }
      audited = tap::FractionalAssignment::indicator(tap::shadow_minimalize(inst, opt.cover));
      std::cout << "x = shadow-minimalized optimum of size " << opt.opt_size << "\n";
    }
    const tap::CreditReport r = tap::audit_solve(inst, audited, forced);
    for (const auto& row : r.rows) {
      std::cout << (row.ok ? "ok   " : "FAIL ") << row.event << " cost " << row.cost << " released "
                << tap::to_string(row.released) << "\n";
    }
    for (const auto& v : r.violations) std::cout << "violation " << v << "\n";
    std::cout << "|F|=" << r.final_total_cost << " potential " << tap::to_string(r.potential) << "\n";
    std::cout << "audit: " << (r.final_ok ? "pass" : "fail") << "\n";
    return r.final_ok ? kExitOk : kExitCheckFailed;
  }
  throw CLI::ValidationError("--what", "unknown check '" + a.what + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree augmentation: generators, solver, exact oracle and certificates"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated instance");
  gen_cmd->add_option("family", gen.family, "tight | clawpath | random | fixture")->required();
  gen_cmd->add_option("--k", gen.k, "Family parameter k")->check(CLI::Range(1, 10000));
  gen_cmd->add_option("--nodes", gen.nodes, "Node count for random instances")->check(CLI::Range(2, 1000000));
  gen_cmd->add_option("--seed", gen.seed, "Seed for random instances");
  gen_cmd->add_option("--factor", gen.factor, "Extra-link factor for random instances")->check(CLI::NonNegativeNumber);
  gen_cmd->add_flag("--biconnected", gen.biconnected, "Add the cross-block links (tight)");
  gen_cmd->add_option("--name", gen.name, "Fixture name: PATH3 | STAR4 | DEF3 | DEF3x2");
  gen_cmd->add_option("-o,--out", gen.out, "Output path (assignment goes to <out>.x); stdout if absent");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run the approximation algorithm");
  solve_cmd->add_option("input", solve.input, "Instance file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_flag("--trace", solve.trace, "Print one line per contraction");
  solve_cmd->add_option("--dot", solve.dot_dir, "Write the contracted tree before every contraction");
  solve_cmd->add_option("--force-matching", solve.force_matching, "Matching file (lines `m u v`)")
      ->check(CLI::ExistingFile);

  CompareArgs compare;
  compare.budget = default_oracle_budget();
  auto* compare_cmd = app.add_subcommand("compare", "Solver size against the exact optimum");
  compare_cmd->add_option("inputs", compare.inputs, "Instance files")->check(CLI::ExistingFile);
  compare_cmd->add_option("--dir", compare.dir, "Directory of *.tap files")->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--oracle-budget", compare.budget, "Branch-and-bound node budget (env TAP_ORACLE_BUDGET)");

  CheckArgs check;
  check.budget = default_oracle_budget();
  auto* check_cmd = app.add_subcommand("check", "Certificate checks on an assignment");
  check_cmd->add_option("input", check.input, "Instance file")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--assignment", check.assignment, "Assignment file (lines `x u v p/q`)")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--what", check.what, "lp0 | potential | polytope | audit")->required();
  check_cmd->add_option("--epsilon", check.epsilon, "Epsilon for the potential comparison (p/q)");
  check_cmd->add_option("--scale", check.scale, "Scale for the polytope check (p/q)");
  check_cmd->add_option("--force-matching", check.force_matching, "Matching file (lines `m u v`)")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--oracle-budget", check.budget, "Budget when audit computes its own optimum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*solve_cmd) return run_solve(solve);
    if (*compare_cmd) return run_compare(compare);
    if (*check_cmd) return run_check(check);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const tap::InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}
