#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmjsq/experiments.hpp"
#include "mmjsq/model.hpp"
#include "mmjsq/model_file.hpp"
#include "mmjsq/sim.hpp"

namespace mmjsq {

/// 17 significant digits, shortest of %g style; "nan"/"inf" for non-finite.
std::string format_double(double x);

nlohmann::json to_json(const SscReport& r);
nlohmann::json to_json(const HtPrediction& p);
nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const AggregateStats& a);
nlohmann::json to_json(const RunStats& r);

/// Full analysis of `model` (already built from `file`): stationary law,
/// derived rates, SSC report, heavy-traffic prediction and limiting
/// Laplace transform at each s.
nlohmann::json analysis_report(const ModelFile& file, const MmJsqModel& model, const std::vector<double>& s_values);

void write_runs_csv(std::ostream& out, const std::vector<RunStats>& runs);
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// Long format: grid_value, server, x, pmf, pmf_hw for x = 0..pmf_cap.
void write_sweep_pmf_csv(std::ostream& out, const SweepResult& result);
nlohmann::json sweep_summary(const SweepResult& result);

}  // namespace mmjsq
