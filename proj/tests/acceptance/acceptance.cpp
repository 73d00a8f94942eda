// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance [AC1 AC3 ...]   (no arguments runs everything)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bbmlab/bbmlab.hpp"

using namespace bbm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

SolverState evolve(SolverState s, double dt, double t_end) {
  const long steps = std::lround((t_end - s.t) / dt);
  for (long i = 0; i < steps; ++i) s = step_rk4(s, dt);
  return s;
}

double rel_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// ---------------------------------------------------------------------------

Outcome operator_correctness() {
  const auto g = make_grid(2048, 80.0, -40.0);
  std::vector<double> err(100);
  parallel_for(err.size(), [&](std::size_t i) {
    const Field f = random_trial_field(g, 2024, i, 0.0);
    const Field oracle = green_convolution_oracle(f);
    err[i] = l2_distance(bessel_inverse(f), oracle) / l2_norm(oracle);
  });
  const double worst = *std::max_element(err.begin(), err.end());
  return {worst < 1e-8, "max relative L2 error " + num(worst) + " over 100 fields"};
}

Outcome conservation() {
  const auto g = make_grid(4096, 400.0, -200.0);
  std::ostringstream d;
  bool ok = true;
  for (int p : {2, 3, 5}) {
    SolverState s{0.0, gaussian_data(0.01, 2.0, 0.0, g), p, 0};
    const auto c0 = conserved(s.u, p);
    s = evolve(s, 0.01, 100.0);
    const auto c1 = conserved(s.u, p);
    const double dm = std::abs(c1.mass - c0.mass) / std::abs(c0.mass);
    const double de = std::abs(c1.energy - c0.energy) / std::abs(c0.energy);
    ok = ok && dm < 1e-8 && de < 1e-8;
    d << "p=" << p << " mass " << num(dm) << " energy " << num(de) << "; ";
  }
  return {ok, d.str()};
}

Outcome solitary_wave_fidelity() {
  const auto g = make_grid(2048, 200.0, -100.0);
  auto error = [&](double dt) {
    SolverState s{0.0, solitary_wave(2, 1.5, -20.0, 0.0, g), 2, 0};
    s = evolve(s, dt, 20.0);
    return l2_distance(s.u, solitary_wave(2, 1.5, -20.0, s.t, g));
  };
  const double e_coarse = error(0.04);
  const double e_mid = error(0.02);
  const double e_fine = error(0.005);
  const double order = std::log2(e_coarse / e_mid);
  return {e_fine < 1e-5 && order >= 3.8,
          "L2 error " + num(e_fine) + " at dt=0.005; measured order " + num(order)};
}

Outcome virial_identity() {
  const auto g = make_grid(1024, 200.0, -100.0);
  const WeightProfile right_w = right_case_weight(0.5, 10.0);
  const WeightProfile left_w = left_case_weight(0.5, 10.0);
  constexpr double h = 1e-3;
  constexpr std::size_t runs = 5, per_run = 10;
  std::vector<double> fd(runs * per_run), qsn(runs * per_run);
  parallel_for(runs, [&](std::size_t run) {
    const int p = 2 + static_cast<int>(run % 4);
    const Field shape = random_trial_field(g, 404, run, 10.0);
    SolverState s{0.0, shape * (0.1 / h1_norm(shape)), p, 0};
    for (std::size_t k = 0; k < per_run; ++k) {
      if (k > 0) s = evolve(s, 0.05, s.t + 1.0);
      const Field plus = step_rk4(s, h).u;
      const Field minus = detail::rk4_advance(s.u, p, -h);
      double worst_fd = 0.0, worst_qsn = 0.0;
      for (const auto& [w, alpha] : {std::pair{right_w, 0.0}, std::pair{left_w, 1.0}}) {
        const double t = s.t;
        const double di = (functional_I(plus, w, t + h) - functional_I(minus, w, t - h)) / (2 * h);
        const double dj = (functional_J(plus, w, t + h, p) - functional_J(minus, w, t - h, p)) / (2 * h);
        worst_fd = std::max({worst_fd, rel_gap(di, dI_dt_rhs(s.u, w, t, p)), rel_gap(dj, dJ_dt_rhs(s.u, w, t, p))});
        worst_qsn = std::max(
            worst_qsn, decompose_QSN(s.u, w, t, p, alpha, std::numeric_limits<double>::infinity()).identity_residual);
      }
      fd[run * per_run + k] = worst_fd;
      qsn[run * per_run + k] = worst_qsn;
    }
  });
  const double wf = *std::max_element(fd.begin(), fd.end());
  const double wq = *std::max_element(qsn.begin(), qsn.end());
  return {wf < 1e-5 && wq < 1e-10,
          "50 states: finite-difference rel. error " + num(wf) + ", Q+S+N residual " + num(wq)};
}

Outcome weighted_identities() {
  const auto g = make_grid(2048, 200.0, -100.0);
  const WeightProfile right_w = right_case_weight(0.5, 10.0);
  const WeightProfile left_w = left_case_weight(0.5, 10.0);
  std::vector<double> ident(100), gsub(100);
  parallel_for(ident.size(), [&](std::size_t i) {
    const Field u = random_trial_field(g, 505, i, 10.0);
    const double t = 0.5 * static_cast<double>(i % 7);
    ident[i] = std::max(verify_weighted_identities(u, right_w, t).worst_relative(),
                        verify_weighted_identities(u, left_w, t).worst_relative());
    gsub[i] = verify_g_substitution(bessel_inverse(u), left_w, t).worst();
  });
  const double wi = *std::max_element(ident.begin(), ident.end());
  const double wg = *std::max_element(gsub.begin(), gsub.end());
  return {wi < 1e-9 && wg < 1e-9, "100 fields: weighted identities " + num(wi) + ", g-substitution " + num(wg)};
}

Outcome quartic_inequality() {
  const auto r = quartic_suite(make_grid(512, 60.0, -30.0), 1000, 606);
  const double root3 = std::sqrt(3.0);
  const auto g = make_grid(256, 2 * std::numbers::pi / root3, 0.0);
  const auto null = check_quartic_inequality(Field::from_function(g, [&](double x) { return std::sin(root3 * x); }));
  const double gap = r.metrics.at("max_relative_gap");
  return {r.passed() && gap < 1e-9 && std::abs(null.D) < 1e-10,
          std::to_string(r.failures) + "/" + std::to_string(r.trials) + " negative, max |D-D'|/scale " + num(gap) +
              ", null mode |D| " + num(std::abs(null.D))};
}

// The two decay runs are shared by the case-sign and decay criteria.
const std::vector<DecayReport>& decay_runs() {
  static const std::vector<DecayReport> runs = [] {
    std::vector<SimConfig> cfgs;
    for (double eps : {0.01, 0.005}) {
      SimConfig c;
      c.name = "decay_eps" + format_number(eps);
      c.p = 2;
      c.n_points = 8192;
      c.domain_length = 800.0;
      c.x_min = -200.0;
      c.dt = 0.02;
      c.t_end = 200.0;
      c.data = DataKind::Gaussian;
      c.epsilon = eps;
      c.data_width = 2.0;
      c.b = 0.5;
      c.a = 0.25;
      c.L = 50.0;
      c.sigma_tilde = 0.5;
      c.alpha_right = 0.0;
      c.alpha_left = 1.0;
      c.sigma_list = {-1.5, 0.1875};
      c.t0_list = {50.0, 100.0, 200.0};
      cfgs.push_back(c);
    }
    return sweep(cfgs);
  }();
  return runs;
}

Outcome case_signs() {
  const auto& rep = decay_runs().front();
  if (!rep.error.empty() || rep.blow_up || rep.tainted) return {false, "run failed: " + status_of(rep)};
  double worst_q = -std::numeric_limits<double>::infinity();
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    worst_q = std::max(worst_q, row.right_case.Q);
    worst_margin = std::min(worst_margin, row.coercivity_margin);
  }
  const auto& s = rep.summary;
  return {s.right_Q_nonpositive && s.left_coercivity_holds,
          std::to_string(rep.rows.size()) + " samples: max Q (x>0 case) " + num(worst_q) +
              ", min coercivity margin (x<0 case) " + num(worst_margin)};
}

Outcome lemma_suite() {
  LemmaSuiteConfig c;
  c.seed = 11;
  c.norm_trials = 200;
  c.norm_L = 20.0;
  c.norm_a = {1.0, 1.0, 1.0, 1.0};
  c.comparison_trials = 500;
  c.quartic_trials = 100;
  c.nonlinear_shapes = 8;
  c.nonlinear_p_list = {2, 3, 4, 5};
  c.nonlinear_eps_list = {0.1, 0.05, 0.025, 0.0125};
  c.nonlinear_L = 20.0;
  c.sigma_tilde = 0.5;
  c.weight_L_list = {50.0};
  bool ok = true;
  std::ostringstream d;
  for (const auto& r : run_lemma_suite(c)) {
    if (r.name == "comparison_principle") {
      ok = ok && r.passed() && r.trials == 500;
      d << "comparison " << r.failures << "/" << r.trials << "; ";
    } else if (r.name == "norm_equivalence_single_mode") {
      ok = ok && r.passed();
      d << "single mode err " << num(r.metrics.at("max_abs_error")) << "; ";
    } else if (r.name.rfind("nonlinear_bound_p", 0) == 0) {
      ok = ok && r.passed();
      d << r.name.substr(16) << " slope " << num(r.metrics.at("slope")) << "; ";
    }
  }
  return {ok, d.str()};
}

Outcome decay_surrogates() {
  const auto& runs = decay_runs();
  std::ostringstream d;
  bool ok = true;
  for (const auto& rep : runs) {
    if (!rep.error.empty() || rep.blow_up || rep.tainted) return {false, rep.config.name + " " + status_of(rep)};
    const auto& s = rep.summary;
    ok = ok && s.h1_left_decayed && s.h1_right_decayed;
    for (const auto& chk : s.shifted) ok = ok && chk.nonincreasing();
    for (double v : s.cumulative_final) ok = ok && std::isfinite(v);
    d << "eps=" << format_number(rep.config.epsilon) << " h1 right " << num(s.h1_right_final / s.h1_right_at_2)
      << " left " << num(s.h1_left_final / s.h1_left_at_2) << " of t=2; ";
  }
  const auto& a = runs[0].summary.cumulative_over_eps2;
  const auto& b = runs[1].summary.cumulative_over_eps2;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ratio = std::max(a[k], b[k]) / std::min(a[k], b[k]);
    ok = ok && ratio <= 4.0;
    d << "cum/eps^2 ratio s=" << format_number(runs[0].config.sigma_list[k]) << " " << num(ratio) << "; ";
  }
  d << "I_t0 nonincreasing for t0 in {50,100,200}";
  return {ok, d.str()};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("bbmlab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  auto body = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s.substr(s.find('\n') + 1);
  };
  auto run = [&](const std::string& config, const std::string& out) {
    CliOptions o;
    o.config_path = config;
    o.out_dir = (dir / out).string();
    o.quiet = true;
    return cmd_sweep(o);
  };
  const std::string src = std::string(BBMLAB_CONFIG_DIR) + "/sweep.ini";
  bool ok = run(src, "first") == kExitOk && run((dir / "first" / "manifest.json").string(), "again") == kExitOk;
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "first")) {
    if (e.path().extension() != ".csv") continue;
    ok = ok && body(e.path()) == body(dir / "again" / e.path().filename());
    ++compared;
  }
  fs::remove_all(dir);
  return {ok && compared > 0, std::to_string(compared) + " CSV bodies identical after manifest rerun"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"AC1", "operator correctness", operator_correctness},
      {"AC2", "conservation", conservation},
      {"AC3", "solitary-wave fidelity", solitary_wave_fidelity},
      {"AC4", "virial identity", virial_identity},
      {"AC5", "weighted identities", weighted_identities},
      {"AC6", "quartic inequality", quartic_inequality},
      {"AC7", "case signs", case_signs},
      {"AC8", "lemma suite", lemma_suite},
      {"AC9", "decay surrogates", decay_surrogates},
      {"AC10", "determinism", determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%-4s %s  %s: %s [%.1f s]\n", c.id.c_str(), o.pass ? "PASS" : "FAIL", c.title.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
