// Acceptance suite: one PASS/FAIL line per criterion with the measured
// values. Oracle and constant criteria (1-5, 8, 9) gate the exit status;
// the study trends (6, 7) are reported but do not, since they depend on
// stochastic training rather than on the correctness of the code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pinnopt/case_studies.hpp"
#include "pinnopt/experiment.hpp"
#include "pinnopt/milp_solver.hpp"
#include "pinnopt/nn_encode.hpp"
#include "pinnopt/pwl_approx.hpp"
#include "pinnopt/training.hpp"

using namespace pinnopt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int gate_failures = 0;
std::ofstream results_file;

void emit(const std::string& line) {
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
  results_file << line << '\n' << std::flush;
}

void report(int id, bool gating, bool pass, const std::string& title, const std::string& detail) {
  emit(std::string(pass ? "PASS " : "FAIL ") + std::to_string(id) + ' ' + title +
       (gating ? "" : " (trend, non-gating)") + ": " + detail);
  if (gating && !pass) ++gate_failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

bool close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

void pwl_fidelity() {
  const auto t0 = Clock::now();
  auto tanh_fn = [](double x) { return std::tanh(x); };
  const double e3 = pwl_max_error(tanh_pwl_ref(3), tanh_fn, -4.0, 4.0, 100000);
  const double e5 = pwl_max_error(tanh_pwl_ref(5), tanh_fn, -4.0, 4.0, 100000);
  const double t = seconds_since(t0);
  const bool pass = std::abs(e3 - 0.1240) <= 0.002 && std::abs(e5 - 0.0826) <= 0.002 && e5 < e3 && t < 1.0;
  report(1, true, pass, "PWL fidelity", fmt("max error 3-piece %.4f, 5-piece %.4f, %.3f s", e3, e5, t));
}

void tanh_encoding_soundness() {
  const auto t0 = Clock::now();
  rng::Engine e(20240501);
  int mismatches = 0, solves = 0;
  double worst_cc_sos2 = 0.0;
  for (int net = 0; net < 50; ++net) {
    const std::size_t n_in = 2 + rng::index(e, 5), n_h = 3 + rng::index(e, 8);
    const NetworkParams p = oracles::random_net(e, n_in, n_h);
    const SurrogateQuery q = SurrogateQuery::box(n_in);
    for (int pieces : {3, 5}) {
      const PwlFunction& f = tanh_pwl_ref(pieces);
      const auto g = oracles::grid_min(n_in, oracles::grid_points_for(n_in, 2e5),
                                       [&](const std::vector<double>& x) { return pwl_forward(p, f, x)[0]; });
      const double slack = oracles::lipschitz_inf(p, 0.76, 0.76) * g.spacing / 2;
      const MilpSolution cc = solve_milp(encode_pwl_cc(p, f, q).model);
      const MilpSolution s2 = solve_milp(encode_pwl_sos2(p, f, q).model);
      solves += 2;
      for (const MilpSolution* s : {&cc, &s2}) {
        const bool ok = s->status == SolveStatus::Optimal && s->objective <= g.value + 1e-6 &&
                        s->objective >= g.value - std::max(1e-6, slack + 1e-6);
        if (!ok) ++mismatches;
      }
      const double diff = std::abs(cc.objective - s2.objective);
      worst_cc_sos2 = std::max(worst_cc_sos2, diff);
      if (diff > 1e-6) ++mismatches;
    }
  }
  const double t = seconds_since(t0);
  report(2, true, mismatches == 0 && t < 300.0, "tanh encoding soundness",
         fmt("%d solves, %d mismatches, max |cc - sos2| %.2e, %.1f s", solves, mismatches, worst_cc_sos2, t));
}

void relu_soundness() {
  const auto t0 = Clock::now();
  rng::Engine e(99);
  int mismatches = 0;
  for (int net = 0; net < 20; ++net) {
    const std::size_t n_in = 2 + rng::index(e, 2), n_h = 3 + rng::index(e, 8);
    const NetworkParams p = oracles::random_net(e, n_in, n_h, Activation::relu(), Activation::identity());
    const MilpSolution s = solve_milp(encode_relu_bigm(p, SurrogateQuery::box(n_in)).model);
    const auto g = oracles::grid_min(n_in, 201, [&](const std::vector<double>& x) { return forward(p, x)[0]; });
    const double slack = oracles::lipschitz_inf(p, 1.0, 1.0) * g.spacing / 2;
    const bool ok = s.status == SolveStatus::Optimal && s.objective <= g.value + 1e-6 &&
                    s.objective >= g.value - slack - 1e-6;
    if (!ok) ++mismatches;
  }
  const double t = seconds_since(t0);
  report(3, true, mismatches == 0 && t < 120.0, "ReLU Big-M soundness",
         fmt("20 nets, %d mismatches vs 201-point grid, %.1f s", mismatches, t));
}

void solver_kernel() {
  rng::Engine e(4242);
  int milp_bad = 0, lp_bad = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t nb = 1 + rng::index(e, 12), nc = rng::index(e, 3), rows = 1 + rng::index(e, 4);
    const oracles::SmallMilp s = oracles::random_small_milp(e, nb, nc, rows);
    const double truth = oracles::enumerate_min(s);
    const MilpSolution got = solve_milp(s.model);
    const double value = got.status == SolveStatus::Infeasible ? std::numeric_limits<double>::infinity() : got.objective;
    if (!close(value, truth, 1e-6)) ++milp_bad;
  }
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng::index(e, 3), rows = 1 + rng::index(e, 4);
    const auto [dense, model] = oracles::random_lp(e, n, rows);
    const double truth = oracles::vertex_min(dense);
    const LpSolution got = solve_lp(model);
    const double value = got.status == SolveStatus::Infeasible ? std::numeric_limits<double>::infinity() : got.objective;
    if (!close(value, truth, 1e-6)) ++lp_bad;
  }
  report(4, true, milp_bad == 0 && lp_bad == 0, "solver kernel",
         fmt("MILP vs enumeration %d/100 mismatches, LP vs vertices %d/100 mismatches", milp_bad, lp_bad));
}

double loss_of(const NetworkParams& p, const Dataset& d, const LossSpec& s) {
  return s.kind == LossSpec::Kind::Mse ? mse_loss(p, d) : physics_eval(*s.term, p, d);
}

double worst_gradient_error(NetworkParams p, const Dataset& d, const LossSpec& s) {
  NetworkParams g = gradient(p, d, s);
  std::vector<double*> pe, ge;
  for (auto* q : {&p, &g}) {
    auto& out = q == &p ? pe : ge;
    for (double& v : q->A.flat()) out.push_back(&v);
    for (double& v : q->B.flat()) out.push_back(&v);
    for (double& v : q->C) out.push_back(&v);
    for (double& v : q->D) out.push_back(&v);
  }
  double scale = 0.0;
  for (double* v : ge) scale = std::max(scale, std::abs(*v));
  double worst = 0.0;
  for (std::size_t k = 0; k < pe.size(); ++k) {
    const double x = *pe[k], h = 1e-5 * std::max(1.0, std::abs(x));
    *pe[k] = x + h;
    const double up = loss_of(p, d, s);
    *pe[k] = x - h;
    const double down = loss_of(p, d, s);
    *pe[k] = x;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(*ge[k]), 1e-3 * scale, 1e-300});
    worst = std::max(worst, std::abs(fd - *ge[k]) / denom);
  }
  return worst;
}

void gradients() {
  struct Case {
    cases::CaseId id;
    PhysicsTerm term;
    std::size_t n_in, n_out;
  };
  double worst_mse = 0.0, worst_phys = 0.0;
  for (const Case& c : {Case{cases::CaseId::Blending, PhysicsTerm::blending(), 4, 2},
                        Case{cases::CaseId::Column, PhysicsTerm::column(), 7, 1},
                        Case{cases::CaseId::Cdu, PhysicsTerm::cdu(), 6, 6}}) {
    cases::DatasetOptions o;
    o.samples = 40;
    o.seed = 11;
    const Dataset d = cases::make_dataset(c.id, o);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      TrainingConfig tc;
      tc.seed = seed;
      const NetworkParams p = initialize_params(c.n_in, 5, c.n_out, Activation::tanh(), Activation::tanh(), tc);
      worst_mse = std::max(worst_mse, worst_gradient_error(p, d, LossSpec::mse()));
      worst_phys = std::max(worst_phys, worst_gradient_error(p, d, LossSpec::physics(c.term)));
    }
  }
  report(5, true, worst_mse < 1e-5 && worst_phys < 1e-5, "gradient suite",
         fmt("worst relative error MSE %.2e, physics %.2e", worst_mse, worst_phys));
}

ExperimentConfig defaults_for(cases::CaseId id) {
  std::istringstream in("case = " + cases::to_string(id) + "\n");
  return parse_experiment_config(in);
}

const AggregateRow* row_of(const ReportBundle& b, TrainingMode mode, int pieces) {
  for (const AggregateRow& a : b.aggregate)
    if (a.mode == mode && a.pieces == pieces) return &a;
  return nullptr;
}

std::string reports_of(const ReportBundle& b) {
  return runs_csv(b) + aggregate_csv(b) + summary_markdown(b);
}

void blending_study(std::string& first_reports) {
  const auto t0 = Clock::now();
  const ReportBundle b = run_experiment(defaults_for(cases::CaseId::Blending));
  first_reports = reports_of(b);
  const double t = seconds_since(t0);
  const AggregateRow* plus = row_of(b, TrainingMode::PiPlusBiobjective, 5);
  const AggregateRow* minus = row_of(b, TrainingMode::PiMinus, 5);
  if (!plus || !minus || b.has_failures()) {
    report(6, false, false, "blending study", "pipeline failures, see runs.csv");
    return;
  }
  // Matched seeds: both modes feasible after replay.
  double gap_plus = 0.0, gap_minus = 0.0;
  std::size_t matched = 0;
  for (const RunRecord& p : b.runs) {
    if (p.mode != TrainingMode::PiPlusBiobjective || !p.fp_feasible) continue;
    for (const RunRecord& m : b.runs)
      if (m.mode == TrainingMode::PiMinus && m.seed == p.seed && m.pieces == p.pieces && m.fp_feasible) {
        gap_plus += p.fp_gap;
        gap_minus += m.fp_gap;
        ++matched;
      }
  }
  if (matched > 0) {
    gap_plus /= static_cast<double>(matched);
    gap_minus /= static_cast<double>(matched);
  }
  const bool pass = plus->recovered >= 3 && matched > 0 && gap_plus <= gap_minus && t < 300.0;
  report(6, false, pass, "blending study",
         fmt("PI+ recovered %zu/%zu; mean |x - 7/30| over %zu matched seeds PI+ %.4g vs PI- %.4g; %.1f s",
             plus->recovered, plus->runs, matched, gap_plus, gap_minus, t));
}

void cdu_study() {
  const auto t0 = Clock::now();
  ExperimentConfig c = defaults_for(cases::CaseId::Cdu);
  c.hidden = 10;
  c.pieces = {3, 5};
  const ReportBundle b = run_experiment(c);
  const double t = seconds_since(t0);
  const AggregateRow* p3 = row_of(b, TrainingMode::PiPlusBiobjective, 3);
  const AggregateRow* p5 = row_of(b, TrainingMode::PiPlusBiobjective, 5);
  const AggregateRow* m3 = row_of(b, TrainingMode::PiMinus, 3);
  const AggregateRow* m5 = row_of(b, TrainingMode::PiMinus, 5);
  if (!p3 || !p5 || !m3 || !m5 || b.has_failures()) {
    report(7, false, false, "CDU study", "pipeline failures, see runs.csv");
    return;
  }
  const bool deviation_ok = p3->mean_deviation < m3->mean_deviation && p5->mean_deviation < m5->mean_deviation;
  const bool sse_ok = p5->mean_sse <= p3->mean_sse;
  const bool pass = deviation_ok && sse_ok && t < 900.0;
  report(7, false, pass, "CDU study",
         fmt("mean deviation PI+ %.4g/%.4g vs PI- %.4g/%.4g (3/5-piece); PI+ mean SSE 5-piece %.3g vs 3-piece %.3g; "
             "feasible %zu+%zu+%zu+%zu of 20; %.1f s",
             p3->mean_deviation, p5->mean_deviation, m3->mean_deviation, m5->mean_deviation, p5->mean_sse,
             p3->mean_sse, p3->feasible, p5->feasible, m3->feasible, m5->feasible, t));
}

double cut_horner(double te) {
  return (((8.15e-11 * te - 2.84e-7) * te + 3.25e-4) * te - 0.047) * te + 4.04;
}

void cut_constants() {
  const double c230 = cases::cdu_cut(230.0), c1050 = cases::cdu_cut(1050.0);
  const double h230 = cut_horner(230.0), h1050 = cut_horner(1050.0);
  const bool pass = std::abs(c230 - h230) <= 1e-9 * std::abs(h230) && std::abs(c1050 - h1050) <= 1e-9 * std::abs(h1050) &&
                    std::abs(c230 - 7.197) < 5e-3 && std::abs(c1050 - 83.30) < 5e-3;
  report(8, true, pass, "cut constants", fmt("cut(230) %.6f (quoted 7.197), cut(1050) %.6f (quoted 83.30), Horner agreement 1e-9", c230, c1050));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(const std::string& blending_reports) {
  const ReportBundle again = run_experiment(defaults_for(cases::CaseId::Blending));
  bool same = reports_of(again) == blending_reports;

  ExperimentConfig c = defaults_for(cases::CaseId::Column);
  c.data.samples = 80;
  c.training.epochs = 400;
  c.seeds = {1, 2};
  c.pieces = {3};
  c.export_lp = true;
  const auto base = std::filesystem::temp_directory_path() / "pinnopt_acceptance";
  std::filesystem::remove_all(base);
  emit_reports(run_experiment(c), (base / "a").string());
  emit_reports(run_experiment(c), (base / "b").string());
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file() || entry.path().filename() == "timings.csv") continue;
    const auto rel = std::filesystem::relative(entry.path(), base / "a");
    same = same && slurp(entry.path()) == slurp(base / "b" / rel);
    ++files;
  }
  std::filesystem::remove_all(base);
  report(9, true, same && files > 0, "determinism",
         fmt("blending reports and %zu emitted column files %s across reruns", files,
             same ? "byte-identical" : "DIFFER"));
}

}  // namespace

/// Lines also go to acceptance_results.txt in the working directory, since
/// ctest hides the output of passing tests.
int main() {
  results_file.open("acceptance_results.txt");
  try {
    pwl_fidelity();
    tanh_encoding_soundness();
    relu_soundness();
    solver_kernel();
    gradients();
    std::string blending_reports;
    blending_study(blending_reports);
    cdu_study();
    cut_constants();
    determinism(blending_reports);
  } catch (const std::exception& e) {
    emit(std::string("FAIL acceptance aborted: ") + e.what());
    return 1;
  }
  emit(std::string(gate_failures == 0 ? "OK" : "NOT OK") + ": " + std::to_string(gate_failures) +
       " gating failure(s)");
  return gate_failures == 0 ? 0 : 1;
}
