#pragma once

// Serialisation of decay reports (CSV + JSON summary) and run manifests.
//
// CSV layout: line 1 is a '#' comment carrying the timestamp and provenance,
// line 2 is the header, then one row per sample. Everything after line 1 is a
// pure function of the resolved config, so reruns match byte for byte.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bbmlab/config.hpp"
#include "bbmlab/decay.hpp"

#ifndef BBMLAB_VERSION
#define BBMLAB_VERSION "1.0.0"
#endif

namespace bbm {

inline constexpr const char* kVersion = BBMLAB_VERSION;
inline constexpr const char* kDecayCsvSchema = "bbm-decay-csv v1";
inline constexpr const char* kSweepCsvSchema = "bbm-sweep-csv v1";

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance of one CLI invocation. `config` holds the resolved sections in
/// the form load_config accepts back.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string timestamp;
  std::optional<std::uint64_t> seed_override;
  nlohmann::ordered_json config = nlohmann::ordered_json::array();

  void add_section(const std::string& header, nlohmann::ordered_json values) {
    config.push_back({{"section", header}, {"values", std::move(values)}});
  }
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["version"] = kVersion;
  j["timestamp"] = m.timestamp;
  j["seed"] = m.seed_override ? nlohmann::ordered_json(*m.seed_override) : nlohmann::ordered_json(nullptr);
  j["config"] = m.config;
  return j;
}

// ---------------------------------------------------------------------------
// Decay CSV

inline std::vector<std::string> decay_csv_header(const SimConfig& c) {
  std::vector<std::string> h{"t", "mass", "energy", "h1_left", "h1_right"};
  for (double s : c.sigma_list) {
    h.push_back("density_s" + format_number(s));
    h.push_back("cumulative_s" + format_number(s));
  }
  for (const char* side : {"right", "left"}) {
    for (const char* q : {"Q", "S", "N", "dH_dt"}) h.push_back(std::string(q) + "_" + side);
  }
  h.insert(h.end(), {"coercivity_margin_left", "I_t0_margin", "boundary_energy"});
  return h;
}

inline void write_csv_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

/// The body (header row and data rows) without the comment line.
inline std::string decay_csv_body(const DecayReport& rep) {
  std::ostringstream out;
  write_csv_line(out, decay_csv_header(rep.config));
  for (const auto& r : rep.rows) {
    std::vector<std::string> cells{format_number(r.t), format_number(r.mass), format_number(r.energy),
                                   format_number(r.h1_left), format_number(r.h1_right)};
    for (std::size_t k = 0; k < r.density.size(); ++k) {
      cells.push_back(format_number(r.density[k]));
      cells.push_back(format_number(r.cumulative[k]));
    }
    for (const CaseSample* cs : {&r.right_case, &r.left_case}) {
      cells.push_back(format_number(cs->Q));
      cells.push_back(format_number(cs->S));
      cells.push_back(format_number(cs->N));
      cells.push_back(format_number(cs->dH_dt));
    }
    cells.push_back(format_number(r.coercivity_margin));
    cells.push_back(r.I_t0_margin ? format_number(*r.I_t0_margin) : std::string());
    cells.push_back(format_number(r.boundary_energy));
    write_csv_line(out, cells);
  }
  return out.str();
}

inline std::string csv_comment_line(const char* schema, const RunManifest& m, const std::string& run) {
  return std::string("# ") + schema + " run=" + run + " command=" + m.command + " version=" + kVersion +
         " generated=" + m.timestamp + "\n";
}

// ---------------------------------------------------------------------------
// JSON summary

namespace detail {

inline nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline std::string status_of(const DecayReport& rep) {
  if (!rep.error.empty()) return "error";
  if (rep.blow_up) return "blow_up";
  return rep.tainted ? "tainted" : "ok";
}

inline nlohmann::ordered_json summary_json(const DecayReport& rep) {
  using J = nlohmann::ordered_json;
  const auto& c = rep.config;
  const auto& s = rep.summary;
  J j;
  j["name"] = c.name;
  j["status"] = status_of(rep);
  j["error"] = rep.error.empty() ? J(nullptr) : J(rep.error);
  j["tainted"] = rep.tainted;
  j["blow_up"] = rep.blow_up;
  j["blow_up_time"] = rep.blow_up ? J(rep.blow_up_time) : J(nullptr);
  j["samples"] = rep.rows.size();
  j["t_final"] = rep.rows.empty() ? J(nullptr) : J(rep.rows.back().t);

  J regions;
  regions["h1_left_at_2"] = s.h1_left_at_2;
  regions["h1_left_final"] = s.h1_left_final;
  regions["h1_left_below_10pct"] = s.h1_left_decayed;
  regions["h1_right_at_2"] = s.h1_right_at_2;
  regions["h1_right_final"] = s.h1_right_final;
  regions["h1_right_below_10pct"] = s.h1_right_decayed;
  j["regions"] = regions;

  J sig = J::array();
  for (std::size_t k = 0; k < c.sigma_list.size() && k < s.cumulative_final.size(); ++k) {
    J e;
    e["sigma"] = c.sigma_list[k];
    e["cumulative_final"] = s.cumulative_final[k];
    e["cumulative_over_eps2"] = detail::number_or_null(s.cumulative_over_eps2[k]);
    e["density_min_fraction"] = detail::number_or_null(s.density_min_fraction[k]);
    e["density_dipped_below_10pct"] = static_cast<bool>(s.density_dipped[k]);
    e["increments_decay"] = static_cast<bool>(s.increments_decay[k]);
    sig.push_back(e);
  }
  j["weighted_densities"] = sig;

  J cases;
  cases["right_Q_nonpositive"] = s.right_Q_nonpositive;
  cases["right_dH_dt_nonpositive"] = s.right_dH_nonpositive;
  cases["left_coercivity_holds"] = s.left_coercivity_holds;
  cases["left_dH_dt_nonpositive"] = s.left_dH_nonpositive;
  cases["max_identity_residual"] = s.max_identity_residual;
  j["cases"] = cases;

  J shifted = J::array();
  for (const auto& chk : s.shifted) {
    J e;
    e["t0"] = chk.t0;
    e["samples"] = chk.values.size();
    e["worst_increment"] = chk.worst_increment();
    e["tolerance"] = chk.tolerance;
    e["nonincreasing"] = chk.nonincreasing();
    shifted.push_back(e);
  }
  j["shifted_functional"] = shifted;

  J cons;
  cons["max_mass_drift"] = s.max_mass_drift;
  cons["max_energy_drift"] = s.max_energy_drift;
  cons["max_boundary_energy"] = s.max_boundary_energy;
  j["conservation"] = cons;
  return j;
}

// ---------------------------------------------------------------------------
// Sweep summary CSV: one row per (run, sigma). h1_decayed is 1 when both
// region norms end below 10% of their t = 2 values: the empirical answer to
// which (epsilon, b) pairs decay cleanly.

inline std::string sweep_csv_body(const std::vector<DecayReport>& reps) {
  std::ostringstream out;
  write_csv_line(out, {"name", "p", "epsilon", "b", "h1_left_final", "h1_right_final", "h1_decayed", "sigma",
                       "cumulative_over_eps2", "status"});
  for (const auto& r : reps) {
    const std::string status = status_of(r);
    const auto& c = r.config;
    for (std::size_t k = 0; k < c.sigma_list.size(); ++k) {
      const double ratio = k < r.summary.cumulative_over_eps2.size() ? r.summary.cumulative_over_eps2[k]
                                                                      : std::numeric_limits<double>::quiet_NaN();
      write_csv_line(out, {c.name, std::to_string(c.p), format_number(c.epsilon), format_number(c.b),
                           format_number(r.summary.h1_left_final), format_number(r.summary.h1_right_final),
                           r.summary.h1_left_decayed && r.summary.h1_right_decayed ? "1" : "0",
                           format_number(c.sigma_list[k]), format_number(ratio), status});
    }
  }
  return out.str();
}

}  // namespace bbm
