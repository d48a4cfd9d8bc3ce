#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nullcone/builtin.hpp"
#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"
#include "nullcone/moment.hpp"
#include "nullcone/strata.hpp"
#include "nullcone/torus.hpp"
#include "report.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kReportFormat = "nullcone-report/1";

// exit codes: 0 success, 2 validation error, 3 non-convergence, 4 cap exceeded
enum ExitCode { kOk = 0, kValidation = 2, kNonConvergence = 3, kCapExceeded = 4 };

using Eigen::VectorXd;
using namespace nullcone;

LinearAction resolve_action(const std::string& spec) {
  if (spec == "scaling-r2" || spec.rfind("sl-conj:", 0) == 0 ||
      spec.rfind("brackets:", 0) == 0)
    return make_named_action(spec);
  return load_action(spec);
}

VectorXd parse_vector(const std::string& arg, int expected_dim) {
  std::string text = arg;
  if (std::filesystem::exists(arg)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  for (char& c : text)
    if (c == ',' || c == '\n' || c == '\t' || c == '\r') c = ' ';
  std::istringstream is(text);
  std::vector<double> vals;
  double x;
  while (is >> x) vals.push_back(x);
  if (static_cast<int>(vals.size()) != expected_dim) {
    std::ostringstream os;
    os << "vector has " << vals.size() << " entries, the action needs " << expected_dim;
    throw ValidationError(os.str());
  }
  VectorXd v(expected_dim);
  for (int i = 0; i < expected_dim; ++i) v[i] = vals[i];
  return v;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open output file '" + out_path + "'");
    out << text;
  }
}

struct CommonOptions {
  std::string action;
  std::string vector;
  std::string out;
  std::string trace;
  double tol = 1e-10;
  long max_steps = 1000000;
  long samples = 0;
  std::uint64_t seed = 12345;
  std::string supports;
};

void report_header(cli::Report& rep, const LinearAction& act, const CommonOptions& opt) {
  rep.kv("format", kReportFormat);
  rep.kv("tool_version", kVersion);
  rep.kv("action", act.name());
  rep.kv("dim_v", act.dim_v());
  rep.kv("dim_g", act.dim_g());
  rep.kv("dim_k", act.dim_k());
  rep.kv("dim_p", act.dim_p());
  rep.kv("grad_tol", opt.tol);
  rep.kv("max_steps", opt.max_steps);
  rep.kv("seed", static_cast<long>(opt.seed));
}

void label_block(cli::Report& rep, const std::string& prefix, const StratumLabel& label) {
  rep.kv(prefix + ".norm", label.norm);
  rep.kv(prefix + ".spectrum", label.spectrum);
  rep.kv(prefix + ".canonicalized", label.canonicalized);
}

int cmd_analyze(const CommonOptions& opt) {
  LinearAction act = resolve_action(opt.action);
  VectorXd v = parse_vector(opt.vector, act.dim_v());
  if (v.norm() == 0.0)
    throw ValidationError("analyze needs a nonzero vector (0 is a fixed point)");

  FlowOptions fopts;
  fopts.grad_tol = opt.tol;
  fopts.max_steps = opt.max_steps;

  cli::Report rep;
  report_header(rep, act, opt);
  rep.kv("vector", v);

  rep.section("stratum");
  LabeledFlow lf = stratum_label(v, act, fopts);
  label_block(rep, "label", lf.label);
  rep.kv("flow.steps", lf.flow.steps);
  rep.kv("flow.converged", lf.flow.converged);
  rep.kv("flow.gradient_residual", lf.flow.gradient_residual);
  rep.kv("flow.energy", lf.flow.energy_trace.back());
  rep.kv("flow.accelerated", lf.flow.accelerated);

  rep.section("minimal_vector");
  DescentResult des = minimal_vector_descent(v, act);
  rep.kv("status", des.status == DescentStatus::semistable ? "semistable"
                   : des.status == DescentStatus::null     ? "null"
                                                           : "stalled");
  rep.kv("iterations", des.iterations);
  rep.kv("moment_norm", des.moment_norm);
  rep.kv("norm_ratio", des.norm_ratio);
  if (des.status == DescentStatus::semistable) rep.kv("vector", des.vector);

  rep.section("null_cone");
  rep.kv("member", des.status == DescentStatus::null);

  bool torus_converged = true;
  if (act.abelian()) {
    rep.section("torus");
    SupportSet s = orbit_support(v, act);
    VectorXd support(s.indices.size()), signs(s.indices.size());
    for (std::size_t i = 0; i < s.indices.size(); ++i) {
      support[static_cast<int>(i)] = s.indices[i];
      signs[static_cast<int>(i)] = s.signs[s.indices[i]];
    }
    rep.kv("support", support);
    rep.kv("signs", signs);
    const bool closed = is_orbit_closed(v, act);
    rep.kv("orbit_closed", closed);
    if (!closed) {
      Destabilizer d = destabilizing_direction(v, act);
      rep.kv("destabilizer", d.direction_t);
      rep.kv("destabilizer_limit", d.limit);
    }
    VectorXd rep_vec = closed_orbit_in_closure(v, act);
    rep.kv("closed_orbit_representative", rep_vec);
    SeparationFamily fam = separation_family(act);
    rep.kv("family_size", fam.functions.size());
    bool disc = false;
    const bool null_t = is_in_null_cone_torus(v, act, &fam, &disc);
    rep.kv("null_cone", null_t);
    rep.kv("phi_norm", evaluate_phi(v, fam, act).norm());
    rep.kv("phi_cross_check_consistent", !disc);
  }

  emit(rep.str(), opt.out);
  if (!lf.flow.converged || des.status == DescentStatus::stalled || !torus_converged)
    return kNonConvergence;
  return kOk;
}

int cmd_flow(const CommonOptions& opt) {
  LinearAction act = resolve_action(opt.action);
  VectorXd v = parse_vector(opt.vector, act.dim_v());
  if (v.norm() == 0.0) throw ValidationError("flow needs a nonzero starting vector");

  FlowOptions fopts;
  fopts.grad_tol = opt.tol;
  fopts.max_steps = opt.max_steps;
  fopts.trace_stride = 1;
  FlowResult res = flow(v, act, fopts);

  std::ostringstream csv;
  csv << "step,time,energy,grad_norm";
  for (int i = 0; i < act.dim_v(); ++i) csv << ",v" << i;
  csv << "\n";
  for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
    const auto& [t, x] = res.trajectory[k];
    const double energy = moment(x, act).energy;
    const double gn = grad_energy(x, act).norm();
    csv << k << "," << cli::format_double(t) << "," << cli::format_double(energy) << ","
        << cli::format_double(gn);
    for (int i = 0; i < x.size(); ++i) csv << "," << cli::format_double(x[i]);
    csv << "\n";
  }

  cli::Report rep;
  report_header(rep, act, opt);
  rep.kv("vector", v);
  rep.section("flow");
  rep.kv("steps", res.steps);
  rep.kv("converged", res.converged);
  rep.kv("gradient_residual", res.gradient_residual);
  rep.kv("energy", res.energy_trace.back());
  rep.kv("rows", static_cast<long>(res.trajectory.size()));
  LabeledFlow lf;
  lf.limit_moment = moment(res.limit, act);
  StratumLabel label = stratum_label(res.limit, act, fopts).label;
  label_block(rep, "label", label);

  if (opt.trace.empty()) {
    std::cout << csv.str();
    if (!opt.out.empty()) emit(rep.str(), opt.out);
  } else {
    emit(csv.str(), opt.trace);
    emit(rep.str(), opt.out);
  }
  return res.converged ? kOk : kNonConvergence;
}

int cmd_labels(const CommonOptions& opt) {
  LinearAction act = resolve_action(opt.action);

  CandidateOptions copts;
  if (!opt.supports.empty()) {
    std::ifstream in(opt.supports);
    if (!in) throw ValidationError("cannot open supports file '" + opt.supports + "'");
    std::vector<std::vector<int>> supports;
    std::string line;
    while (std::getline(in, line)) {
      for (char& c : line)
        if (c == ',') c = ' ';
      std::istringstream is(line);
      std::vector<int> s;
      int idx;
      while (is >> idx) s.push_back(idx);
      if (!s.empty()) supports.push_back(std::move(s));
    }
    copts.supports = std::move(supports);
  }
  CandidateLabels cl = candidate_labels(act, copts);

  cli::Report rep;
  report_header(rep, act, opt);
  rep.kv("samples", opt.samples);
  rep.section("census");
  rep.kv("distinct_weights", cl.distinct_weights.size());
  rep.kv("candidates", cl.confirmed.size());
  rep.kv("unconfirmed", cl.unconfirmed.size());

  std::vector<long> hits(cl.confirmed.size(), 0);
  long unmatched = 0;
  bool all_converged = true;
  if (opt.samples > 0) {
    detail::Rng rng(opt.seed);
    FlowOptions fopts;
    fopts.grad_tol = opt.tol;
    fopts.max_steps = opt.max_steps;
    // Uniform starts only ever see the open stratum: the deeper strata are
    // stable sets of saddles and positive-codimension. Interleave starts at
    // critical points of each nonzero candidate, obtained by restricted
    // moment descent on the zero slice (the H_beta minimal vectors are
    // exactly the critical points over beta). Candidates whose slice always
    // collapses have empty strata and collect no hits.
    std::vector<BetaAdapted> seeded;
    for (std::size_t c = 0; c < cl.confirmed.size(); ++c) {
      if (cl.confirmed[c].label.norm < 1e-12) continue;
      BetaAdapted ad = beta_adapted(cl.confirmed[c].beta_p_coords, act);
      if (ad.v_zero.cols() == 0) continue;
      seeded.push_back(std::move(ad));
    }
    for (long s = 0; s < opt.samples; ++s) {
      VectorXd start;
      if (s % 2 == 1 && !seeded.empty()) {
        const auto& ad = seeded[(s / 2) % seeded.size()];
        VectorXd v0 = ad.v_zero * rng.unit_vector(static_cast<int>(ad.v_zero.cols()));
        DescentOptions dopts;
        dopts.moment_tol = std::min(1e-13, 0.01 * opt.tol);  // land below the flow tolerance
        auto ss = is_semistable_for_hbeta(v0, ad, act, dopts);
        start = ss.semistable ? ss.descent.vector : v0;
        start /= start.norm();
      } else {
        start = rng.unit_vector(act.dim_v());
      }
      LabeledFlow lf = stratum_label(start, act, fopts);
      all_converged = all_converged && lf.flow.converged;
      bool matched = false;
      for (std::size_t c = 0; c < cl.confirmed.size(); ++c) {
        if (labels_equal(lf.label, cl.confirmed[c].label, 1e-6)) {
          ++hits[c];
          matched = true;
          break;
        }
      }
      if (!matched) ++unmatched;
    }
    rep.kv("unmatched_samples", unmatched);
    rep.kv("all_flows_converged", all_converged);
  }

  for (std::size_t c = 0; c < cl.confirmed.size(); ++c) {
    std::ostringstream key;
    key << "label" << c;
    rep.section(key.str());
    label_block(rep, key.str(), cl.confirmed[c].label);
    VectorXd subset(cl.confirmed[c].weight_subset.size());
    for (std::size_t i = 0; i < cl.confirmed[c].weight_subset.size(); ++i)
      subset[static_cast<int>(i)] = cl.confirmed[c].weight_subset[i];
    rep.kv(key.str() + ".weight_subset", subset);
    if (opt.samples > 0) rep.kv(key.str() + ".flow_hits", hits[c]);
  }

  emit(rep.str(), opt.out);
  if (opt.samples > 0 && !all_converged) return kNonConvergence;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment-map toolkit for linear actions of real reductive matrix groups"};
  app.require_subcommand(1);

  CommonOptions opt;

  auto add_common = [&](CLI::App* cmd, bool needs_vector) {
    cmd->add_option("--action", opt.action,
                    "action name (scaling-r2, sl-conj:<n>, brackets:<n>:<gl|sl>) or "
                    "path to an action JSON file")
        ->required();
    if (needs_vector)
      cmd->add_option("--vector", opt.vector, "comma-separated entries or a file path")
          ->required();
    cmd->add_option("--tol", opt.tol, "gradient-norm stopping tolerance");
    cmd->add_option("--max-steps", opt.max_steps, "flow step cap");
    cmd->add_option("--out", opt.out, "write the report to this file");
    cmd->add_option("--seed", opt.seed, "random seed (echoed in the report)");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "stratum, minimal vector and null-cone status");
  add_common(analyze, true);

  CLI::App* flow_cmd = app.add_subcommand("flow", "integrate the energy flow, write a CSV trajectory");
  add_common(flow_cmd, true);
  flow_cmd->add_option("--trace", opt.trace, "trajectory CSV path (default: stdout)");

  CLI::App* labels = app.add_subcommand("labels", "candidate stratum labels and a flow census");
  add_common(labels, false);
  labels->add_option("--samples", opt.samples, "number of random flow starts");
  labels->add_option("--supports", opt.supports,
                     "file with explicit weight-subset supports (comma-separated indices)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kValidation : kOk;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(opt);
    if (app.got_subcommand(flow_cmd)) return cmd_flow(opt);
    if (app.got_subcommand(labels)) return cmd_labels(opt);
  } catch (const nullcone::CapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapExceeded;
  } catch (const nullcone::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const nullcone::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const nullcone::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
