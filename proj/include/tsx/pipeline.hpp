#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "tsx/evaluation.hpp"
#include "tsx/forecastability.hpp"
#include "tsx/workflow.hpp"

namespace tsx {

/// Everything one pipeline run needs. Stages communicate only through files
/// in `out_dir`, so any stage can be re-run or inspected in isolation.
struct RunConfig {
  std::string data_path;
  std::string out_dir = "out";
  PipelineSettings settings;
  ForecastabilityParams forecastability;
  bool rolling_trace = true;
  bool calibrate = false;
  std::optional<std::string> external_forecasts;
  std::optional<std::string> injection_path;
  std::map<std::string, std::string> groupings;  // level name -> mapping CSV

  /// Parse a run config JSON file. Every field is validated here; a bad
  /// config never reaches a stage.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::json& j);
};

/// Injection spec JSON (feature name, defaults, per-item overrides).
InjectionSpec load_injection_spec(const std::string& path);

/// Pipeline stages, in dependency order. Each writes its artifacts into
/// cfg.out_dir and throws ValidationError when a required upstream artifact
/// is missing.
void stage_forecastability(const RunConfig& cfg);
void stage_forecast(const RunConfig& cfg);
void stage_surrogate(const RunConfig& cfg);
void stage_explain(const RunConfig& cfg);
void stage_faithfulness(const RunConfig& cfg);
void stage_analyze(const RunConfig& cfg);
void run_all(const RunConfig& cfg);

/// Dispatch a subcommand ("forecastability", "forecast", "surrogate",
/// "explain", "faithfulness", "analyze", "all"). Unknown names throw
/// ValidationError.
void run(const std::string& subcommand, const RunConfig& cfg);

}  // namespace tsx
