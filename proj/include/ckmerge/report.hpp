#pragma once

/**
 * Versioned JSON run reports. Key order is fixed and doubles are serialized
 * by shortest round-trip, so two runs with identical inputs produce
 * byte-identical reports except for the wall-time field.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckmerge/bayesopt.hpp"
#include "ckmerge/errors.hpp"

namespace ckmerge {

inline constexpr int kReportSchemaVersion = 1;

struct RunReport {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config;  // effective configuration echo
  OptResult result;
  std::map<std::string, std::string> artifacts;
  double wall_time_ms = 0.0;
};

inline nlohmann::ordered_json to_json(const OptResult& result) {
  nlohmann::ordered_json j;
  j["trace"] = nlohmann::ordered_json::array();
  for (const Observation& o : result.trace)
    j["trace"].push_back({{"lambda", o.lambda}, {"value", o.value}});
  j["best_lambda"] = result.best_lambda;
  j["best_value"] = result.best_value;
  j["per_step_best"] = result.per_step_best;
  j["hedge_log"] = nlohmann::ordered_json::array();
  for (const HedgeLogEntry& e : result.hedge_log) {
    j["hedge_log"].push_back({{"step", e.step},
                              {"weights", e.weights},
                              {"rewards", e.rewards},
                              {"nominees", e.nominees},
                              {"proposed", e.proposed}});
  }
  return j;
}

inline nlohmann::ordered_json to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = report.command;
  j["seed"] = report.seed;
  j["config"] = report.config;
  j["result"] = to_json(report.result);
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.artifacts) artifacts[k] = v;
  j["artifacts"] = artifacts;
  j["wall_time_ms"] = report.wall_time_ms;
  return j;
}

inline void write_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open report file " + path.string());
  out << to_json(report).dump(2) << "\n";
  if (!out) throw IoError("write failure on report file " + path.string());
}

inline OptResult result_from_json(const nlohmann::json& j) {
  OptResult result;
  try {
    for (const auto& entry : j.at("trace"))
      result.trace.push_back({entry.at("lambda").get<double>(), entry.at("value").get<double>()});
    result.best_lambda = j.at("best_lambda").get<double>();
    result.best_value = j.at("best_value").get<double>();
    result.per_step_best = j.at("per_step_best").get<std::vector<double>>();
    if (j.contains("hedge_log")) {
      for (const auto& entry : j["hedge_log"]) {
        HedgeLogEntry e;
        e.step = entry.at("step").get<std::uint64_t>();
        for (std::size_t i = 0; i < kNumAcquisitions; ++i) {
          e.weights[i] = entry.at("weights").at(i).get<double>();
          e.rewards[i] = entry.at("rewards").at(i).get<double>();
          e.nominees[i] = entry.at("nominees").at(i).get<double>();
        }
        e.proposed = entry.at("proposed").get<double>();
        result.hedge_log.push_back(e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad report JSON: ") + e.what());
  }
  return result;
}

inline OptResult load_report_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad report JSON in ") + path.string() + ": " + e.what());
  }
  if (j.contains("result")) return result_from_json(j["result"]);
  return result_from_json(j);
}

}  // namespace ckmerge
