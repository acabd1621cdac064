#pragma once

// JSON and CSV forms of models, datasets, allocations, reports and configs.
// Malformed input raises ParameterError.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ldmcvar/meta.hpp"
#include "ldmcvar/optim.hpp"
#include "ldmcvar/risk.hpp"

namespace ldmcvar {

using Json = nlohmann::json;

Json model_to_json(const FadingModel& model);
FadingModel model_from_json(const Json& j);

void write_gains_csv(std::ostream& os, const GainDataset& data);
GainDataset read_gains_csv(std::istream& is, std::uint64_t seed = 0);
GainDataset read_gains_csv(const std::filesystem::path& path);

Json allocation_to_json(const LayerAllocation& alloc);
LayerAllocation allocation_from_json(const Json& j);

Json report_to_json(const RiskReport& rep);
std::string report_csv_header();
std::string report_csv_row(const RiskReport& rep);

/// Overrides fields of `base` with the keys present in `j`; unknown keys are errors.
RiskSpec risk_spec_from_json(const Json& j, RiskSpec base = {});
OptimConfig optim_config_from_json(const Json& j, OptimConfig base = {});
MetaConfig meta_config_from_json(const Json& j, MetaConfig base = {});

void write_trace_csv(std::ostream& os, const OptimTrace& trace);

/// One task per *.csv file in the directory, in filename order.
TaskSet load_tasks_from_dir(const std::filesystem::path& dir);
/// {"n": N, "tasks": [{"model": {...}, "seed": s}, ...]}
TaskSet tasks_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);

/// Shortest decimal that round-trips, for byte-stable text output.
std::string format_double(double x);

}  // namespace ldmcvar
