// Command-line front end: closure tables, discovery bounds, permutation
// p-values, Monte-Carlo composite p-values, and a small built-in
// three-mean example wiring everything together.

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctp/ctp.hpp"

namespace {

struct CommonOpts {
  std::string input;
  std::string test = "bonferroni";
  std::string cov;
  std::string constraints;
  std::string format = "json";
  std::string out;
  double alpha = 0.05;
  bool alpha_set = false;
  std::uint64_t sims = ctp::ResamplingConfig::kDefaultReplications;
  std::uint64_t seed = 0;
  int max_width = ctp::ClosureTable::kDefaultMaxWidth;
};

void write_output(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file " + out);
  os << text;
}

std::string json_text(const ctp::json& j) { return j.dump(2) + "\n"; }

ctp::Subset parse_subset(const std::string& arg, int n) {
  std::vector<int> idx;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      const int v = std::stoi(tok);
      if (v < 1 || v > n)
        throw std::invalid_argument("subset index " + tok + " outside 1.." + std::to_string(n));
      idx.push_back(v - 1);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad subset component '" + tok + "'");
    }
  }
  if (idx.empty()) throw std::invalid_argument("empty subset argument");
  return ctp::Subset::from_indices(idx);
}

ctp::LocalTest make_test(const CommonOpts& opt, int n) {
  if (opt.test == "bonferroni") return ctp::LocalTest::bonferroni();
  if (opt.test == "simes") return ctp::LocalTest::simes();
  if (opt.test == "fisher") return ctp::LocalTest::fisher_chisq();
  if (opt.test == "fisher-mc") {
    if (opt.cov.empty())
      throw std::invalid_argument("--test fisher-mc requires --cov");
    auto cov = ctp::read_covariance_csv_file(opt.cov);
    if (cov.dim() != n)
      throw std::invalid_argument("covariance dimension != number of hypotheses");
    return ctp::LocalTest::fisher_montecarlo(
        ctp::ResamplingConfig(opt.sims, opt.seed, std::move(cov)));
  }
  throw std::invalid_argument("unknown test '" + opt.test +
                              "' (expected bonferroni, simes, fisher, fisher-mc)");
}

std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", p);
  return buf;
}

std::string lattice_text(const ctp::HypothesisFamily& family,
                         const ctp::ClosureTable& table,
                         const ctp::AdjustedResult& adjusted) {
  std::ostringstream os;
  os << "subset\tlocal_p\tadjusted_p";
  if (adjusted.alpha()) os << "\trejected";
  os << '\n';
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << table.n()); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    return std::popcount(a) != std::popcount(b) ? std::popcount(a) < std::popcount(b) : a < b;
  });
  for (const auto m : masks) {
    const ctp::Subset s(m);
    os << ctp::subset_label(s, family) << '\t' << format_p(table.local_p(s)) << '\t'
       << format_p(adjusted.adjusted(s));
    if (adjusted.alpha()) os << '\t' << (adjusted.rejected(s) ? "yes" : "no");
    os << '\n';
  }
  return os.str();
}

std::string lattice_csv(const ctp::ClosureTable& table,
                        const ctp::AdjustedResult& adjusted) {
  std::ostringstream os;
  os << "subset,local_p,adjusted_p";
  if (adjusted.alpha()) os << ",rejected";
  os << '\n';
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << table.n()); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    return std::popcount(a) != std::popcount(b) ? std::popcount(a) < std::popcount(b) : a < b;
  });
  for (const auto m : masks) {
    const ctp::Subset s(m);
    std::string ids;
    s.for_each([&](int i) {
      if (!ids.empty()) ids += ';';
      ids += std::to_string(i + 1);
    });
    os << ids << ',' << format_p(table.local_p(s)) << ',' << format_p(adjusted.adjusted(s));
    if (adjusted.alpha()) os << ',' << (adjusted.rejected(s) ? "true" : "false");
    os << '\n';
  }
  return os.str();
}

int run_closure(const CommonOpts& opt) {
  const auto records = ctp::read_pvalue_csv_file(opt.input);
  std::vector<std::string> labels;
  std::vector<double> pvals;
  for (const auto& r : records) {
    labels.push_back(r.id);
    pvals.push_back(r.p);
  }
  const std::optional<double> alpha =
      opt.alpha_set ? std::optional<double>(opt.alpha) : std::nullopt;
  const bool is_mc = opt.test == "fisher-mc";
  const std::optional<std::uint64_t> seed =
      is_mc ? std::optional<std::uint64_t>(opt.seed) : std::nullopt;
  const std::optional<std::uint64_t> sims =
      is_mc ? std::optional<std::uint64_t>(opt.sims) : std::nullopt;

  if (!opt.constraints.empty()) {
    const auto family = ctp::read_constraints_csv_file(opt.constraints, labels);
    const auto test = make_test(opt, family.size());
    const auto closure = ctp::build_constrained_closure(family, pvals, test);
    if (opt.format == "json")
      write_output(opt.out, json_text(ctp::constrained_lattice_json(
                                family, closure, opt.test, alpha, seed, sims)));
    else if (opt.format == "dot")
      write_output(opt.out, ctp::constrained_lattice_dot(family, closure, alpha));
    else
      throw std::invalid_argument("--constraints supports --format json or dot");
    return 0;
  }

  const ctp::HypothesisFamily family(labels);
  const auto test = make_test(opt, family.size());
  const auto table = ctp::build_closure(family, pvals, test, opt.max_width);
  const auto adjusted = ctp::adjust_all(table, alpha);

  if (opt.format == "json")
    write_output(opt.out, json_text(ctp::lattice_json(family, table, adjusted,
                                                      opt.test, seed, sims)));
  else if (opt.format == "dot")
    write_output(opt.out, ctp::lattice_dot(family, table, adjusted));
  else if (opt.format == "csv")
    write_output(opt.out, lattice_csv(table, adjusted));
  else if (opt.format == "text")
    write_output(opt.out, lattice_text(family, table, adjusted));
  else
    throw std::invalid_argument("unknown format '" + opt.format + "'");
  return 0;
}

int run_bounds(const CommonOpts& opt, const std::vector<std::string>& subset_args,
               int claim_k) {
  std::vector<std::string> labels;
  std::optional<ctp::ClosureTable> table;

  if (opt.input.size() >= 5 &&
      opt.input.substr(opt.input.size() - 5) == ".json") {
    std::ifstream in(opt.input);
    if (!in) throw std::runtime_error("cannot open " + opt.input);
    ctp::json j = ctp::json::parse(in);
    table.emplace(ctp::table_from_json(j, &labels));
  } else {
    const auto records = ctp::read_pvalue_csv_file(opt.input);
    std::vector<double> pvals;
    for (const auto& r : records) {
      labels.push_back(r.id);
      pvals.push_back(r.p);
    }
    if (!opt.constraints.empty()) {
      // constrained bounds: tau over the deduplicated lattice
      const auto family = ctp::read_constraints_csv_file(opt.constraints, labels);
      const auto test = make_test(opt, family.size());
      const auto closure = ctp::build_constrained_closure(family, pvals, test);
      ctp::json reports = ctp::json::array();
      std::ostringstream text;
      for (const auto& arg : subset_args) {
        const auto I = parse_subset(arg, family.size());
        const int tau = ctp::tau_upper_constrained(closure, I, opt.alpha, family);
        ctp::json r;
        r["subset"] = ctp::subset_to_json(I);
        r["alpha"] = opt.alpha;
        r["constrained"] = true;
        r["tau_upper"] = tau;
        r["false_lower"] = I.count() - tau;
        reports.push_back(std::move(r));
        text << "tau(" << arg << ") <= " << tau << " at alpha=" << opt.alpha
             << " (constrained; confidence set {0,...," << tau << "})\n";
      }
      if (opt.format == "json")
        write_output(opt.out, json_text(reports.size() == 1 ? reports[0] : reports));
      else
        write_output(opt.out, text.str());
      return 0;
    }
    const ctp::HypothesisFamily family(labels);
    const auto test = make_test(opt, family.size());
    table.emplace(ctp::build_closure(family, pvals, test, opt.max_width));
  }

  const ctp::HypothesisFamily family(labels);
  const auto adjusted = ctp::adjust_all(*table);
  ctp::json reports = ctp::json::array();
  std::ostringstream text;
  for (const auto& arg : subset_args) {
    const auto I = parse_subset(arg, table->n());
    const auto bound = ctp::confidence_report(adjusted, I, opt.alpha);
    reports.push_back(ctp::bound_json(bound));
    if (claim_k > 0) {
      const double p = ctp::claim_adjusted_p(adjusted, I, claim_k);
      text << "at least " << claim_k << " false among " << arg
           << " (adjusted p=" << format_p(p) << ")\n";
    } else {
      text << ctp::claim_sentence(bound, family) << '\n'
           << "tau(" << arg << ") <= " << bound.tau_upper << " at alpha=" << opt.alpha
           << " (confidence set {0,...," << bound.tau_upper << "})\n";
    }
  }
  if (opt.format == "json")
    write_output(opt.out, json_text(reports.size() == 1 ? reports[0] : reports));
  else if (opt.format == "text")
    write_output(opt.out, text.str());
  else
    throw std::invalid_argument("bounds supports --format json or text");
  return 0;
}

int run_permute(const CommonOpts& opt, std::uint64_t perms, bool exhaustive,
                const std::string& method) {
  const auto data = ctp::read_dataset_csv_file(opt.input);
  const auto plan = exhaustive ? ctp::PermutationPlan::exhaustive()
                               : ctp::PermutationPlan::monte_carlo(perms, opt.seed);

  std::vector<double> p;
  if (method == "marginal")
    p = ctp::permutation_marginal_pvalues(data, plan);
  else if (method == "minp")
    p = ctp::westfall_young_minp(data, plan);
  else if (method == "closed-bonferroni")
    p = ctp::closed_bonferroni_permutation(data, plan);
  else
    throw std::invalid_argument("unknown method '" + method +
                                "' (expected marginal, minp, closed-bonferroni)");

  if (opt.format == "json") {
    ctp::json out;
    out["method"] = method;
    out["mode"] = exhaustive ? "exhaustive" : "monte-carlo";
    if (!exhaustive) {
      out["perms"] = perms;
      out["seed"] = opt.seed;
    }
    ctp::json vars = ctp::json::array(), ps = ctp::json::array();
    for (int v = 0; v < data.variables(); ++v) {
      vars.push_back(data.variable_label(v));
      ps.push_back(p[static_cast<std::size_t>(v)]);
    }
    out["variables"] = std::move(vars);
    out["p"] = std::move(ps);
    write_output(opt.out, json_text(out));
  } else if (opt.format == "csv") {
    std::ostringstream os;
    os << "variable,p\n";
    for (int v = 0; v < data.variables(); ++v)
      os << data.variable_label(v) << ',' << format_p(p[static_cast<std::size_t>(v)]) << '\n';
    write_output(opt.out, os.str());
  } else {
    std::ostringstream os;
    for (int v = 0; v < data.variables(); ++v)
      os << data.variable_label(v) << '\t' << format_p(p[static_cast<std::size_t>(v)]) << '\n';
    write_output(opt.out, os.str());
  }
  return 0;
}

// The built-in three-mean worked example: observations (-2, 0, 2) with
// unit variance, pairwise-difference hypotheses, the induced singular
// correlation matrix, Monte-Carlo Fisher closure, and tau bounds for
// {1,3} with and without logical constraints.
int run_example(std::uint64_t sims, std::uint64_t seed, double alpha,
                const std::string& out_dir) {
  const double y1 = -2.0, y2 = 0.0, y3 = 2.0;
  const double z1 = ctp::pairwise_contrast_z(y1, y2, 1.0);
  const double z2 = ctp::pairwise_contrast_z(y1, y3, 1.0);
  const double z3 = ctp::pairwise_contrast_z(y2, y3, 1.0);
  const std::vector<double> p{ctp::two_sided_z_pvalue(z1), ctp::two_sided_z_pvalue(z2),
                              ctp::two_sided_z_pvalue(z3)};
  const std::vector<double> c{
      ctp::fisher_statistic(std::vector<double>{p[0], p[1]}),
      ctp::fisher_statistic(std::vector<double>{p[0], p[2]}),
      ctp::fisher_statistic(std::vector<double>{p[1], p[2]}),
      ctp::fisher_statistic(p)};

  char buf[256];
  std::snprintf(buf, sizeof(buf), "z = (%.6f, %.6f, %.6f)\n", z1, z2, z3);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "p = (%.6f, %.6f, %.6f)\n", p[0], p[1], p[2]);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "c = (%.6f, %.6f, %.6f, %.6f)\n", c[0], c[1], c[2], c[3]);
  std::cout << buf;

  // correlations of the pairwise contrasts (z3 = z2 - z1: singular PSD)
  ctp::CovarianceMatrix cov(3, {1.0, 0.5, -0.5, 0.5, 1.0, 0.5, -0.5, 0.5, 1.0});
  const auto test = ctp::LocalTest::fisher_montecarlo(
      ctp::ResamplingConfig(sims, seed, cov));

  std::vector<std::string> labels{"H1", "H2", "H3"};
  const ctp::HypothesisFamily free_family(labels);
  const auto table = ctp::build_closure(free_family, p, test, 24, 0);
  const auto adjusted = ctp::adjust_all(table, alpha);

  std::cout << "\nFree combinations (fisher-mc, B=" << sims << ", seed=" << seed
            << ", alpha=" << alpha << "):\n"
            << lattice_text(free_family, table, adjusted);

  const auto I = ctp::Subset::from_indices({0, 2});
  const auto bound = ctp::confidence_report(adjusted, I, alpha);
  std::cout << "\ntau({1,3}) <= " << bound.tau_upper << "  (confidence set {0,...,"
            << bound.tau_upper << "})\n"
            << ctp::claim_sentence(bound, free_family) << '\n';

  // the same three hypotheses as equalities mu1=mu2, mu1=mu3, mu2=mu3
  const ctp::HypothesisFamily constrained_family(
      labels, {{0, 1}, {0, 2}, {1, 2}}, 3);
  const auto closure = ctp::build_constrained_closure(constrained_family, p, test, 0);
  const int tau_c =
      ctp::tau_upper_constrained(closure, I, alpha, constrained_family);
  std::cout << "\nWith logical constraints (mu1=mu2, mu1=mu3, mu2=mu3): "
            << closure.distinct().size() << " distinct hypotheses\n"
            << "tau_constrained({1,3}) <= " << tau_c << "  (confidence set {0,...,"
            << tau_c << "})\n";

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto base = std::filesystem::path(out_dir);
    std::ofstream(base / "free.json")
        << json_text(ctp::lattice_json(free_family, table, adjusted, "fisher-mc",
                                       seed, sims));
    std::ofstream(base / "free.dot") << ctp::lattice_dot(free_family, table, adjusted);
    std::ofstream(base / "constrained.json")
        << json_text(ctp::constrained_lattice_json(constrained_family, closure,
                                                   "fisher-mc", alpha, seed, sims));
    std::ofstream(base / "constrained.dot")
        << ctp::constrained_lattice_dot(constrained_family, closure, alpha);
    std::ofstream(base / "bounds.json") << json_text(ctp::bound_json(bound));
    std::cout << "\nartifacts written to " << out_dir << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed testing procedures: closure-adjusted p-values, "
               "true-null confidence bounds, and resampling-based composite tests"};
  app.require_subcommand(1);

  CommonOpts opt;
  std::vector<std::string> subset_args;
  int claim_k = 0;
  std::uint64_t perms = 10'000;
  bool exhaustive = false;
  std::string method = "closed-bonferroni";

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    auto* in = cmd->add_option("--input", opt.input, "input file");
    if (needs_input) in->required();
    cmd->add_option("--alpha", opt.alpha, "FWER level in (0,1)")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12))
        ->each([&](const std::string&) { opt.alpha_set = true; });
    cmd->add_option("--format", opt.format, "output format: json, csv, dot, text");
    cmd->add_option("--out", opt.out, "output path (default stdout)");
    cmd->add_option("--seed", opt.seed, "RNG seed");
  };

  auto* closure = app.add_subcommand("closure", "closure-adjusted p-values for the full lattice");
  add_common(closure, true);
  closure->add_option("--test", opt.test, "local test: bonferroni, simes, fisher, fisher-mc");
  closure->add_option("--cov", opt.cov, "correlation matrix CSV (fisher-mc)");
  closure->add_option("--sims", opt.sims, "Monte-Carlo replications");
  closure->add_option("--constraints", opt.constraints, "equality-constraint CSV");
  closure->add_option("--max-width", opt.max_width, "full-enumeration cap");

  auto* bounds = app.add_subcommand("bounds", "confidence bounds on the number of true nulls");
  add_common(bounds, true);
  bounds->add_option("--test", opt.test, "local test (CSV input)");
  bounds->add_option("--cov", opt.cov, "correlation matrix CSV (fisher-mc)");
  bounds->add_option("--sims", opt.sims, "Monte-Carlo replications");
  bounds->add_option("--constraints", opt.constraints, "equality-constraint CSV");
  bounds->add_option("--subset", subset_args, "query subset, comma-separated 1-based indices")
      ->required();
  bounds->add_option("--k", claim_k, "claim level to report (text format)");

  auto* permute = app.add_subcommand("permute", "permutation p-values for two-group data");
  add_common(permute, true);
  permute->add_option("--perms", perms, "sampled arrangements (monte-carlo)");
  permute->add_flag("--exhaustive", exhaustive, "enumerate all label arrangements");
  permute->add_option("--method", method, "marginal, minp, closed-bonferroni");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo composite p-values");
  add_common(simulate, true);
  simulate->add_option("--cov", opt.cov, "correlation matrix CSV")->required();
  simulate->add_option("--sims", opt.sims, "Monte-Carlo replications");

  auto* example = app.add_subcommand("example", "built-in three-mean worked example");
  std::uint64_t ex_sims = ctp::ResamplingConfig::kDefaultReplications;
  double ex_alpha = 0.05;
  std::string ex_out;
  example->add_option("--sims", ex_sims, "Monte-Carlo replications");
  example->add_option("--seed", opt.seed, "RNG seed");
  example->add_option("--alpha", ex_alpha, "FWER level");
  example->add_option("--out", ex_out, "directory for JSON/DOT artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(closure)) return run_closure(opt);
    if (app.got_subcommand(bounds)) return run_bounds(opt, subset_args, claim_k);
    if (app.got_subcommand(permute)) return run_permute(opt, perms, exhaustive, method);
    if (app.got_subcommand(simulate)) {
      opt.test = "fisher-mc";
      return run_closure(opt);
    }
    if (app.got_subcommand(example))
      return run_example(ex_sims, opt.seed, ex_alpha, ex_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
