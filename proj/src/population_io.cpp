#include "ddmkit/population_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ddmkit {

using nlohmann::json;

double round_sig12(double value)
{
    if (!std::isfinite(value) || value == 0.0) return value;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return std::strtod(buf, nullptr);
}

json distribution_to_json(const PowerDistribution& dist)
{
    if (const auto* g = std::get_if<Gaussian>(&dist))
        return {{"type", "gaussian"}, {"mean", round_sig12(g->mean)}, {"std", round_sig12(g->stddev)}};
    const auto& e = std::get<Empirical>(dist);
    json grid = json::array(), density = json::array();
    for (double v : e.grid) grid.push_back(round_sig12(v));
    for (double v : e.density) density.push_back(round_sig12(v));
    return {{"type", "empirical"}, {"grid", grid}, {"density", density}};
}

PowerDistribution distribution_from_json(const json& j)
{
    const auto type = j.at("type").get<std::string>();
    if (type == "gaussian") return Gaussian{j.at("mean").get<double>(), j.at("std").get<double>()};
    if (type == "empirical")
        return Empirical{j.at("grid").get<std::vector<double>>(), j.at("density").get<std::vector<double>>()};
    throw Error("unknown distribution type '" + type + "'");
}

json population_to_json(const AppliancePopulation& pop, std::optional<double> log_base)
{
    json apps = json::array();
    for (const auto& a : pop.appliances) {
        json transitions = json::array();
        for (const auto& t : a.transitions)
            transitions.push_back({{"dist", distribution_to_json(t.distribution)}, {"pi", round_sig12(t.participation)}});
        apps.push_back({{"id", a.id}, {"transitions", transitions}});
    }
    json out = {{"appliances", apps}};
    if (log_base) out["log_base"] = round_sig12(*log_base);
    return out;
}

PopulationDocument population_from_json(const json& j)
{
    PopulationDocument doc;
    try {
        for (const auto& ja : j.at("appliances")) {
            Appliance a;
            a.id = ja.at("id").get<std::string>();
            int tid = 0;
            for (const auto& jt : ja.at("transitions")) {
                TransitionModel t;
                t.appliance_id = a.id;
                t.transition_id = ++tid;
                t.distribution = distribution_from_json(jt.at("dist"));
                t.participation = jt.at("pi").get<double>();
                a.transitions.push_back(std::move(t));
            }
            doc.population.appliances.push_back(std::move(a));
        }
        if (j.contains("log_base")) doc.log_base = j.at("log_base").get<double>();
    } catch (const json::exception& e) {
        throw Error(std::string("malformed population JSON: ") + e.what());
    }
    return doc;
}

PopulationDocument read_population(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    return population_from_json(j);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("failed writing " + path);
}

void write_population(const std::string& path, const AppliancePopulation& pop, std::optional<double> log_base)
{
    write_text(path, population_to_json(pop, log_base).dump(2) + "\n");
}

}  // namespace ddmkit
