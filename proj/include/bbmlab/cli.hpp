#pragma once

// Command implementations behind the bbmlab executable. Each returns the
// process exit code:
//   0 ok, 1 configuration error, 2 tainted boundary, 3 blow-up guard tripped,
//   4 a verification failed (or a run failed for another reason).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bbmlab/config.hpp"
#include "bbmlab/decay.hpp"
#include "bbmlab/lemma_props.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/report.hpp"
#include "bbmlab/virial.hpp"

namespace bbm {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitTainted = 2, kExitBlowUp = 3, kExitCheckFailed = 4 };

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::filesystem::path prepare_out_dir(const CliOptions& o) {
  std::filesystem::path dir(o.out_dir.empty() ? "." : o.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void reject_sections(const ConfigFile& cf, const std::string& command, std::initializer_list<const char*> used) {
  for (const auto& s : cf.sections) {
    bool ok = false;
    for (const char* k : used) ok = ok || s.kind == k;
    if (!ok) throw ConfigError(cf.source, s.line, "section [" + s.kind + "] is not used by " + command);
  }
}

inline RunManifest new_manifest(const std::string& command, const CliOptions& o) {
  RunManifest m;
  m.command = command;
  m.config_path = o.config_path;
  m.timestamp = utc_timestamp();
  m.seed_override = o.seed;
  return m;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

/// Wraps a command body with the shared error-to-exit-code mapping.
template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

inline void write_decay_outputs(const std::filesystem::path& dir, const DecayReport& rep, const RunManifest& m) {
  write_file(dir / (rep.config.name + ".csv"), csv_comment_line(kDecayCsvSchema, m, rep.config.name) +
                                                   decay_csv_body(rep));
  auto j = summary_json(rep);
  j["manifest"] = to_json(m);
  write_file(dir / (rep.config.name + ".json"), dump(j));
}

inline void print_run_line(std::ostream& out, const DecayReport& rep) {
  const auto& s = rep.summary;
  out << rep.config.name << ": " << status_of(rep) << "  samples=" << rep.rows.size()
      << "  h1_left " << format_number(s.h1_left_at_2) << " -> " << format_number(s.h1_left_final)
      << "  h1_right " << format_number(s.h1_right_at_2) << " -> " << format_number(s.h1_right_final);
  for (std::size_t k = 0; k < s.cumulative_over_eps2.size(); ++k) {
    out << "  cum/eps^2[" << format_number(rep.config.sigma_list[k]) << "]="
        << format_number(s.cumulative_over_eps2[k]);
  }
  if (!rep.error.empty()) out << "  (" << rep.error << ")";
  out << "\n";
}

inline int exit_code_for(const std::vector<DecayReport>& reps) {
  int code = kExitOk;
  for (const auto& r : reps) {
    int c = kExitOk;
    if (!r.error.empty()) c = kExitCheckFailed;
    else if (r.blow_up) c = kExitBlowUp;
    else if (r.tainted) c = kExitTainted;
    code = std::max(code, c);
  }
  return code;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const CliOptions& o) {
  return detail::guarded([&] {
    const ConfigFile cf = load_config(o.config_path);
    detail::reject_sections(cf, "simulate", {"experiment"});
    auto cfgs = read_experiments(cf);
    if (cfgs.size() != 1) {
      throw ConfigError(cf.source, 0, "simulate needs exactly one [experiment] section (found " +
                                          std::to_string(cfgs.size()) + "); use sweep for several");
    }
    SimConfig cfg = cfgs.front();
    if (o.seed) cfg.seed = *o.seed;
    RunManifest m = detail::new_manifest("simulate", o);
    m.add_section("experiment " + cfg.name, experiment_values(cfg));

    const auto dir = detail::prepare_out_dir(o);
    const DecayReport rep = run_decay_experiment(cfg);
    detail::write_decay_outputs(dir, rep, m);
    detail::write_file(dir / "manifest.json", detail::dump(to_json(m)));
    if (!o.quiet) detail::print_run_line(std::cout, rep);
    return detail::exit_code_for({rep});
  });
}

inline int cmd_sweep(const CliOptions& o) {
  return detail::guarded([&] {
    const ConfigFile cf = load_config(o.config_path);
    detail::reject_sections(cf, "sweep", {"experiment"});
    auto cfgs = read_experiments(cf);
    if (cfgs.empty()) throw ConfigError(cf.source, 0, "sweep needs at least one [experiment] section");
    RunManifest m = detail::new_manifest("sweep", o);
    for (auto& c : cfgs) {
      if (o.seed) c.seed = *o.seed;
      m.add_section("experiment " + c.name, experiment_values(c));
    }

    const auto dir = detail::prepare_out_dir(o);
    const auto reps = sweep(cfgs);
    for (const auto& rep : reps) {
      detail::write_decay_outputs(dir, rep, m);
      if (!o.quiet) detail::print_run_line(std::cout, rep);
    }
    detail::write_file(dir / "sweep_summary.csv",
                       csv_comment_line(kSweepCsvSchema, m, "sweep") + sweep_csv_body(reps));
    detail::write_file(dir / "manifest.json", detail::dump(to_json(m)));
    return detail::exit_code_for(reps);
  });
}

// ---------------------------------------------------------------------------

/// Worst value of one identity check over the suite.
struct IdentityCheckResult {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  int worst_p = 0;
  std::size_t worst_trial = 0;
  bool passed() const { return worst <= tolerance; }
};

namespace detail {

inline double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

}  // namespace detail

/// Runs every identity check on `trials` states per power. Order of results
/// is fixed; values do not depend on the worker count.
inline std::vector<IdentityCheckResult> run_identity_suite(const IdentitySuiteConfig& c) {
  const GridPtr grid = make_grid(c.n_points, c.domain_length, c.x_min);
  const WeightProfile right_w = right_case_weight(c.b, c.L);
  const WeightProfile left_w = left_case_weight(c.sigma_tilde, c.L);
  constexpr double no_limit = std::numeric_limits<double>::infinity();
  static const char* names[] = {"weighted_identities", "g_substitution", "qsn_right_case",
                                "qsn_left_case",       "dI_dt_vs_flow",  "dJ_dt_vs_flow"};
  constexpr std::size_t nchecks = 6;
  const std::size_t nstates = c.trials * c.p_list.size();
  std::vector<std::array<double, nchecks>> values(nstates);

  parallel_for(nstates, [&](std::size_t idx) {
    const int p = c.p_list[idx / c.trials];
    const std::size_t trial = idx % c.trials;
    Field u = Field::zeros(grid);
    if (!c.zero_field && c.epsilon > 0.0) {
      const Field shape = random_trial_field(grid, c.seed, idx, 0.05 * c.domain_length);
      u = shape * (c.epsilon / h1_norm(shape));
    }
    (void)trial;
    const double t = 0.0;
    auto& v = values[idx];
    v[0] = std::max(verify_weighted_identities(u, right_w, t).worst_relative(),
                    verify_weighted_identities(u, left_w, t).worst_relative());
    v[1] = verify_g_substitution(bessel_inverse(u), left_w, t).worst();
    v[2] = decompose_QSN(u, right_w, t, p, 0.0, no_limit).identity_residual;
    v[3] = decompose_QSN(u, left_w, t, p, 1.0, no_limit).identity_residual;
    const double h = c.fd_step;
    const Field plus = detail::rk4_advance(u, p, h);
    const Field minus = detail::rk4_advance(u, p, -h);
    v[4] = 0.0;
    v[5] = 0.0;
    for (const WeightProfile* w : {&right_w, &left_w}) {
      const double fd_i = (functional_I(plus, *w, t + h) - functional_I(minus, *w, t - h)) / (2 * h);
      const double fd_j = (functional_J(plus, *w, t + h, p) - functional_J(minus, *w, t - h, p)) / (2 * h);
      v[4] = std::max(v[4], detail::relative_gap(fd_i, dI_dt_rhs(u, *w, t, p)));
      v[5] = std::max(v[5], detail::relative_gap(fd_j, dJ_dt_rhs(u, *w, t, p)));
    }
  });

  std::vector<IdentityCheckResult> out;
  for (std::size_t k = 0; k < nchecks; ++k) {
    IdentityCheckResult r;
    r.name = names[k];
    r.tolerance = k < 4 ? c.tolerance : c.fd_tolerance;
    for (std::size_t idx = 0; idx < nstates; ++idx) {
      if (values[idx][k] > r.worst || idx == 0) {
        r.worst = values[idx][k];
        r.worst_p = c.p_list[idx / c.trials];
        r.worst_trial = idx % c.trials;
      }
    }
    out.push_back(r);
  }
  return out;
}

inline int cmd_verify_identities(const CliOptions& o) {
  return detail::guarded([&] {
    const ConfigFile cf = load_config(o.config_path);
    detail::reject_sections(cf, "verify-identities", {"identities"});
    IdentitySuiteConfig c = read_identities(cf);
    if (o.seed) c.seed = *o.seed;
    RunManifest m = detail::new_manifest("verify-identities", o);
    m.add_section("identities", identity_values(c));

    const auto dir = detail::prepare_out_dir(o);
    const auto results = run_identity_suite(c);
    bool all = true;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      all = all && r.passed();
      if (!o.quiet) {
        std::cout << r.name << ": worst " << format_number(r.worst) << " (tolerance " << format_number(r.tolerance)
                  << ") " << (r.passed() ? "ok" : "FAILED") << "\n";
      }
      arr.push_back({{"name", r.name},
                     {"worst", r.worst},
                     {"tolerance", r.tolerance},
                     {"passed", r.passed()},
                     {"witness", {{"p", r.worst_p}, {"trial", r.worst_trial}, {"seed", c.seed}}}});
    }
    nlohmann::ordered_json j;
    j["passed"] = all;
    j["states"] = c.trials * c.p_list.size();
    j["checks"] = arr;
    j["manifest"] = to_json(m);
    detail::write_file(dir / "identities.json", detail::dump(j));
    detail::write_file(dir / "manifest.json", detail::dump(to_json(m)));
    return all ? kExitOk : kExitCheckFailed;
  });
}

// ---------------------------------------------------------------------------

/// Every lemma suite in a fixed order.
inline std::vector<PropertyReport> run_lemma_suite(const LemmaSuiteConfig& c) {
  std::vector<PropertyReport> out;

  {
    // Closed form on single modes with phi = 1.
    auto g = make_grid(256, 2 * std::numbers::pi, 0.0);
    PropertyReport r;
    r.name = "norm_equivalence_single_mode";
    r.seed = c.seed;
    const WeightProfile one{WeightShape::Constant, 0.0, 1.0};
    double worst = 0.0;
    for (int k = 1; k <= 8; ++k) {
      const Field u = Field::from_function(g, [k](double x) { return std::cos(k * x); });
      const double gap = std::abs(check_norm_equivalence(u, one, c.norm_a) - norm_equivalence_single_mode(k, c.norm_a));
      ++r.trials;
      if (gap > 1e-10) ++r.failures;
      if (gap >= worst) {
        worst = gap;
        r.witness = {{"k", k}};
      }
    }
    r.metrics["max_abs_error"] = worst;
    r.worst_margin = 1e-10 - worst;
    out.push_back(r);
  }
  out.push_back(norm_equivalence_suite(make_grid(2048, 20 * c.norm_L, -10 * c.norm_L), c.norm_L, c.norm_a,
                                       c.norm_trials, c.seed));
  out.push_back(comparison_principle_suite(make_grid(1024, 80.0, -40.0), c.comparison_trials, c.seed));
  out.push_back(quartic_suite(make_grid(512, 60.0, -30.0), c.quartic_trials, c.seed));
  {
    // Null direction k^2 = 3 on a commensurate box.
    auto g = make_grid(256, 2 * std::numbers::pi / std::sqrt(3.0), 0.0);
    const auto q = check_quartic_inequality(Field::from_function(g, [](double x) { return std::sin(std::sqrt(3.0) * x); }));
    PropertyReport r;
    r.name = "quartic_null_mode";
    r.seed = c.seed;
    r.trials = 1;
    r.failures = std::abs(q.D) < 1e-10 ? 0 : 1;
    r.worst_margin = 1e-10 - std::abs(q.D);
    r.metrics["D"] = q.D;
    r.metrics["D_square"] = q.D_square;
    out.push_back(r);
  }
  const auto nl_grid = make_grid(1024, 10 * c.nonlinear_L, -5 * c.nonlinear_L);
  for (int p : c.nonlinear_p_list) {
    out.push_back(check_nonlinear_bound(nl_grid, left_case_weight(c.sigma_tilde, c.nonlinear_L), p, 1.0,
                                        c.nonlinear_eps_list, c.nonlinear_shapes, c.seed));
  }
  for (double L : c.weight_L_list) {
    auto r = check_weight_hypotheses({WeightShape::Sech2, 0.0, L}, make_grid(2048, 20 * L, -10 * L));
    r.name += "_L" + format_number(L);
    r.seed = c.seed;
    out.push_back(r);
  }
  return out;
}

inline int cmd_lemma_tests(const CliOptions& o) {
  return detail::guarded([&] {
    const ConfigFile cf = load_config(o.config_path);
    detail::reject_sections(cf, "lemma-tests", {"lemmas"});
    LemmaSuiteConfig c = read_lemmas(cf);
    if (o.seed) c.seed = *o.seed;
    RunManifest m = detail::new_manifest("lemma-tests", o);
    m.add_section("lemmas", lemma_values(c));

    const auto dir = detail::prepare_out_dir(o);
    const auto reports = run_lemma_suite(c);
    bool all = true;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
      all = all && r.passed();
      if (!o.quiet) {
        std::cout << r.name << ": " << r.failures << "/" << r.trials << " failures, worst margin "
                  << format_number(r.worst_margin) << (r.passed() ? "" : "  FAILED") << "\n";
      }
      arr.push_back(to_json(r));
    }
    nlohmann::ordered_json j;
    j["passed"] = all;
    j["reports"] = arr;
    j["manifest"] = to_json(m);
    detail::write_file(dir / "lemmas.json", detail::dump(j));
    detail::write_file(dir / "manifest.json", detail::dump(to_json(m)));
    return all ? kExitOk : kExitCheckFailed;
  });
}

}  // namespace bbm
