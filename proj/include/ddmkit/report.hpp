#pragma once

#include "ddmkit/core_model.hpp"
#include "ddmkit/ddm_engine.hpp"
#include "ddmkit/partition_optimizer.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace ddmkit {

std::string log_base_name(double base);

nlohmann::json ddm_report_to_json(const DdmReport& report, const Partition& partition, bool include_curves = true);

nlohmann::json tradeoff_to_json(const OptimizeResult& result, std::size_t recommended_meters);

/// `code,b,ddm` rows, one per evaluated partition.
std::string landscape_csv(const OptimizeResult& result);

/// Plot-ready curves on the quadrature grid: mixture density, single-meter
/// e_alpha, and the posterior of every transition and every appliance.
std::string curves_csv(const AppliancePopulation& pop, const DdmOptions& options = {});

struct BaseSweepEntry {
    std::string base;
    double ddm = 0.0;
};

/// Single-meter DDM under log bases 2, e and 10.
std::vector<BaseSweepEntry> base_sweep(const AppliancePopulation& pop, const DdmOptions& options = {});

struct ReportOptions {
    DdmOptions ddm;
    OptimizeOptions optimize;
    ConstraintSet constraints;
    double knee_epsilon = 0.05;
    /// Externally reported single-meter values to compare against.
    std::vector<double> reference_values;
    /// Partitions listed individually in the per-partition table.
    std::size_t max_listed_partitions = 64;
};

struct Report {
    nlohmann::json summary;
    std::string markdown;
    std::string curves_csv;
    std::string landscape_csv;
};

Report compose_report(const AppliancePopulation& pop, const ReportOptions& options = {});

}  // namespace ddmkit
