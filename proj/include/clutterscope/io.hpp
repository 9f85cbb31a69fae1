/**
 * @file io.hpp
 * @brief JSON and CSV serialization for windows, decisions and reports.
 */
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "clutterscope/classify.hpp"
#include "clutterscope/montecarlo.hpp"

namespace clutterscope {

/// Snapshots are stored column-major: one [[re, im], ...] list per snapshot.
nlohmann::json window_to_json(const DataWindow& window);
DataWindow window_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const ScenarioSpec& spec);
ScenarioSpec spec_from_json(const nlohmann::json& j);

nlohmann::json outcome_to_json(const ClassificationOutcome& outcome);
nlohmann::json report_to_json(const MetricReport& report);

/// Columns: cpr_db, rule, hypothesis_true, pcc, ci_halfwidth, rms_k1..3, rank_acc, trials.
void write_report_csv(std::ostream& os, const MetricReport& report,
                      const std::vector<std::string>& header_comments = {});

/// 17 significant digits; NaN prints as "nan", infinities as "inf"/"-inf".
std::string format_real(double v);

}  // namespace clutterscope
