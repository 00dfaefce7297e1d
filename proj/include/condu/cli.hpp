#pragma once

#include "condu/config.hpp"
#include "condu/errors.hpp"
#include "condu/estimator.hpp"
#include "condu/harness.hpp"
#include "condu/io.hpp"
#include "condu/parallel.hpp"
#include "condu/verify.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace condu {

struct CliConfig
{
  std::string command; // simulate | estimate | sweep | rates | verify
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> data_path;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string filter; // verify only
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 1;
inline constexpr int runtime = 2;
} // namespace exit_code

namespace detail {

inline json
error_record(const std::exception& e)
{
  json j;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    j["error"] = ce->kind();
    j["field"] = ce->field();
  } else if (const auto* ee = dynamic_cast<const Error*>(&e)) {
    j["error"] = ee->kind();
  } else {
    j["error"] = "InternalError";
  }
  j["message"] = e.what();
  return j;
}

inline json
read_json_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
}

//! Seed precedence: --seed, then CONDU_SEED, then experiment.seed, then 0.
inline std::uint64_t
resolve_seed(const CliConfig& cli, const ExperimentConfig& cfg)
{
  if (cli.seed)
    return *cli.seed;
  if (const char* env = std::getenv("CONDU_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("CONDU_SEED", "CONDU_SEED must be a non-negative integer");
    return v;
  }
  return cfg.experiment_seed_given ? cfg.experiment.seed : 0;
}

//! Loads the config, resolving a kernel table given by path relative to the
//! config file, and applies the seed override.
inline ExperimentConfig
load_config(const CliConfig& cli)
{
  json doc = read_json_file(cli.config_path);
  if (doc.is_object() && doc.contains("kernel") && doc["kernel"].is_object() && doc["kernel"].contains("table")) {
    auto& kj = doc["kernel"];
    if (!kj["table"].is_string())
      throw ConfigError("kernel.table", "kernel.table must be a path");
    std::filesystem::path table = kj["table"].get<std::string>();
    if (table.is_relative())
      table = cli.config_path.parent_path() / table;
    auto cols = read_numeric_csv(table, { "u", "k" });
    kj["id"] = "user-table";
    kj["u"] = cols[0];
    kj["k"] = cols[1];
    kj.erase("table");
  }
  ExperimentConfig cfg = parse_config(doc);
  cfg.experiment.seed = resolve_seed(cli, cfg);
  cfg.source["experiment"]["seed"] = cfg.experiment.seed;
  return cfg;
}

inline std::uint64_t
single_n(const ExperimentConfig& cfg)
{
  if (cfg.source.contains("experiment") && cfg.source["experiment"].contains("n"))
    return cfg.source["experiment"]["n"].get<std::uint64_t>();
  if (cfg.grids.n_list.empty())
    throw ConfigError("grids.n_list", "need experiment.n or a nonempty grids.n_list");
  return cfg.grids.n_list.front();
}

inline void
require_dgp(const ExperimentConfig& cfg, const char* command)
{
  if (!cfg.source.contains("dgp"))
    throw ConfigError("dgp", std::string(command) + " needs a dgp section");
}

inline std::string
estimates_to_csv(const std::vector<EstimateCell>& cells, std::size_t m)
{
  std::string out = "m,h";
  for (std::size_t j = 1; j <= m; ++j)
    out += ",t_" + std::to_string(j);
  out += ",phi,numerator,denominator,mhat,status\n";
  for (const auto& c : cells) {
    out += std::to_string(m) + "," + format_double(c.h);
    for (double v : c.t)
      out += "," + format_double(v);
    out += "," + c.phi + "," + format_double(c.numerator) + "," + format_double(c.denominator) + ",";
    out += c.mhat ? format_double(*c.mhat) : "";
    out += std::string(",") + to_string(c.status) + "\n";
  }
  return out;
}

} // namespace detail

//! Dispatches one command. Returns 0 on success, 1 when the inputs fail
//! validation and 2 when the run itself fails; errors are reported as a JSON
//! record on `err`.
inline int
run(const CliConfig& cli, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  const std::size_t threads = cli.threads.value_or(default_threads());
  if (cli.command == "verify") {
    try {
      const auto results = run_property_suite(cli.filter);
      json list = json::array();
      bool all = true;
      for (const auto& r : results) {
        list.push_back(to_json(r));
        all = all && r.pass;
      }
      out << list.dump(2) << "\n";
      if (results.empty()) {
        err << json{ { "error", "InvalidArgument" }, { "message", "no check matches '" + cli.filter + "'" } }.dump()
            << "\n";
        return exit_code::validation;
      }
      return all ? exit_code::ok : exit_code::runtime;
    } catch (const std::exception& e) {
      err << detail::error_record(e).dump() << "\n";
      return exit_code::runtime;
    }
  }

  ExperimentConfig cfg;
  std::optional<Sample> data;
  try {
    if (cli.command != "simulate" && cli.command != "estimate" && cli.command != "sweep" && cli.command != "rates")
      throw InvalidArgument("unknown command '" + cli.command + "'");
    cfg = detail::load_config(cli);
    if (cli.command == "estimate" && cli.data_path)
      data = ingest_csv(*cli.data_path);
    else
      detail::require_dgp(cfg, cli.command.c_str());
  } catch (const std::exception& e) {
    err << detail::error_record(e).dump() << "\n";
    return exit_code::validation;
  }

  try {
    const auto& dir = cli.out_dir;
    if (cli.command == "simulate") {
      const Sample s = simulate(cfg.dgp, detail::single_n(cfg), cfg.experiment.seed);
      write_atomic(dir / "sample.csv", sample_to_csv(s));
    } else if (cli.command == "estimate") {
      const Sample s = data ? *data : simulate(cfg.dgp, detail::single_n(cfg), cfg.experiment.seed);
      const auto hs = cfg.grids.h_list.empty() ? sweep_bandwidths(cfg, s.size()) : cfg.grids.h_list;
      const auto ts = make_t_grid(cfg);
      const SortedIndex sorted = make_sorted_index(s);
      const auto& members = cfg.fc.members();
      std::vector<EstimateCell> cells(hs.size() * ts.size() * members.size());
      parallel_for(hs.size() * ts.size(), threads, [&](std::size_t c) {
        auto est = estimate_members(members, hs[c / ts.size()], ts[c % ts.size()], s, sorted, cfg.kernel);
        for (std::size_t f = 0; f < est.size(); ++f)
          cells[c * members.size() + f] = std::move(est[f]);
      });
      write_atomic(dir / "estimates.csv", detail::estimates_to_csv(cells, cfg.m()));
    } else {
      ExperimentConfig run_cfg = cfg;
      if (cli.command == "sweep")
        run_cfg.grids.n_list = { detail::single_n(cfg) };
      const auto result = rate_experiment(run_cfg, threads);
      write_atomic(dir / "deviations.csv", rows_to_csv(result.rows, cfg.m()));
      write_atomic(dir / "report.json", report_to_json(result.report).dump(2) + "\n");
    }
    write_atomic(dir / "config_echo.json", cfg.source.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << detail::error_record(e).dump() << "\n";
    return exit_code::runtime;
  }
  return exit_code::ok;
}

} // namespace condu
