#pragma once

#include "ddmkit/core_model.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace ddmkit {

/// Population file: the appliances plus an optional entropy log base.
struct PopulationDocument {
    AppliancePopulation population;
    std::optional<double> log_base;
};

/// Rounds to 12 significant digits so serialized artifacts are byte-stable.
double round_sig12(double value);

nlohmann::json distribution_to_json(const PowerDistribution& dist);
PowerDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json population_to_json(const AppliancePopulation& pop, std::optional<double> log_base = {});
PopulationDocument population_from_json(const nlohmann::json& j);

PopulationDocument read_population(const std::string& path);
void write_population(const std::string& path, const AppliancePopulation& pop, std::optional<double> log_base = {});

/// Writes text to a file, throwing ddmkit::Error on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace ddmkit
