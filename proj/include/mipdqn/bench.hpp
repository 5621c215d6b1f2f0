#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mipdqn/dispatch.hpp"
#include "mipdqn/oracle.hpp"
#include "mipdqn/profiles.hpp"
#include "mipdqn/training.hpp"

namespace mipdqn {

// One JSON file describes the system, the training run and the benchmark
// settings; every field has a default so an empty object is a valid config.
struct AppConfig {
  SystemConfig system;
  RewardParams reward;
  FeatureSpec features;
  TrainConfig training;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  // data: CSV wins when set, otherwise the synthetic generator
  std::string csv_path;
  std::uint64_t synth_seed = 7;
  int synth_days = 365;
  Date synth_start{2022, 1, 1};
  SeasonParams season;

  // bench
  std::string backend = "bnb";
  double solve_time_limit = 0.0;
  int test_days = 30;
  double init_soc_fraction = 0.5;  // evaluation initial SOC, absolute fraction
  int k_seg = 16;
  std::vector<double> sigma2_sweep;
  int threads = 0;  // 0 = hardware choice
  std::string qnet_checkpoint;
  std::string policy_checkpoint;
};

AppConfig default_config();
AppConfig load_config(const std::string& path);
std::string dump_config(const AppConfig& cfg);  // canonical JSON
std::string config_hash(const AppConfig& cfg);  // FNV-1a 64 of the dump

Dataset resolve_dataset(const AppConfig& cfg);

// Hours whose net load cannot be balanced even with every asset at its
// limit; non-empty means online dispatch would hard-fail there.
std::vector<std::string> dispatchability_warnings(
    const SystemConfig& cfg, const std::vector<DayProfile>& days);

struct RunRow {
  Date day;
  std::string algorithm;
  double cost_usd = 0.0;
  double unbalance_kw = 0.0;  // cumulative over the day
  double mean_solve_ms = 0.0;
};

struct RunAggregate {
  std::string algorithm;
  double error_pct_mean = 0.0;  // vs oracle, NaN when oracle missing
  double error_pct_std = 0.0;
  double mean_unbalance_kw = 0.0;
  double total_cost_usd = 0.0;
  double adjusted_cost_usd = 0.0;  // unbalance priced at the tariff
  double total_time_s = 0.0;
};

struct RunReport {
  std::vector<RunRow> rows;
  std::vector<RunAggregate> aggregates;
};

void write_report_csv(const std::string& rows_path,
                      const std::string& aggregates_path,
                      const RunReport& report);

struct TrainOutputs {
  std::vector<std::string> curve_files;
  std::vector<std::string> qnet_files;
  std::vector<std::string> policy_files;
  std::string summary_file;
};

// One training run per seed (and per sigma2 value when a sweep is set),
// writing learning curves, checkpoints and a cross-seed mean/CI summary.
TrainOutputs cmd_train(const AppConfig& cfg, const std::string& out_dir);

// Constrained dispatch over the test window plus the perfect-forecast
// oracle; audited step by step with feasibility_check.
RunReport cmd_evaluate(const AppConfig& cfg, const std::string& out_dir);

// Adds the unconstrained-greedy baseline (policy network executed directly)
// and cumulative per-day curves.
RunReport cmd_compare(const AppConfig& cfg, const std::string& out_dir);

// Same pipeline on a multi-ESS system; requires >= 2 storage units.
RunReport cmd_large_case(const AppConfig& cfg, const std::string& out_dir);

// Writes the per-step dispatch MIP for a given state as LP text + name map.
void cmd_export_mip(const AppConfig& cfg, const std::string& state_json_path,
                    const std::string& out_lp_path);

void cmd_synth_data(const AppConfig& cfg, const std::string& out_csv_path);

}  // namespace mipdqn
