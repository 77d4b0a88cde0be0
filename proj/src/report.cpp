#include "ddmkit/report.hpp"

#include "ddmkit/population_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ddmkit {

using nlohmann::json;

namespace {

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt12(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json array12(const std::vector<double>& v)
{
    json out = json::array();
    for (double x : v) out.push_back(round_sig12(x));
    return out;
}

}  // namespace

std::string log_base_name(double base)
{
    if (base == 2.0) return "2";
    if (base == 10.0) return "10";
    if (base == std::numbers::e) return "e";
    return fmt12(base);
}

json ddm_report_to_json(const DdmReport& report, const Partition& partition, bool include_curves)
{
    json j = {
        {"partition", partition.to_string()},
        {"code", partition.code_string()},
        {"meters", partition.block_count()},
        {"log_base", log_base_name(report.log_base)},
        {"ddm", round_sig12(report.ddm)},
        {"quadrature_error_estimate", round_sig12(report.quadrature_error_estimate)},
        {"per_block_mass", array12(report.per_block_mass)},
        {"warnings", report.warnings},
    };
    if (include_curves) {
        j["alpha_grid"] = array12(report.alpha_grid);
        j["mixture_density"] = array12(report.mixture_density);
        j["e_alpha"] = array12(report.e_alpha);
    }
    return j;
}

json tradeoff_to_json(const OptimizeResult& result, std::size_t recommended_meters)
{
    json rows = json::array();
    for (const auto& r : result.rows)
        rows.push_back({{"meters", r.meters},
                        {"min_ddm", round_sig12(r.min_ddm)},
                        {"argmin", r.argmin.to_string()},
                        {"code", r.argmin.code_string()},
                        {"cost", round_sig12(r.cost)}});
    return {{"rows", rows},
            {"recommended_meters", recommended_meters},
            {"evaluated", result.evaluated},
            {"skipped", result.skipped}};
}

std::string landscape_csv(const OptimizeResult& result)
{
    std::string out = "code,b,ddm\n";
    for (const auto& row : result.landscape)
        out += row.partition.code_string() + "," + std::to_string(row.partition.block_count()) + "," +
               fmt12(row.ddm) + "\n";
    return out;
}

std::string curves_csv(const AppliancePopulation& pop, const DdmOptions& options)
{
    const DdmEvaluator evaluator(pop, AlphaGrid::cover(pop, options.grid_intervals));
    const double ln_base = std::log(options.log_base);
    const auto e = evaluator.e_alpha(Partition::single_block(pop.size()));
    const auto flat = pop.flatten();

    std::string out = "alpha,f_T,e_alpha";
    for (const auto& [app, t] : flat) out += ",p_" + t->appliance_id + "_T" + std::to_string(t->transition_id);
    for (const auto& a : pop.appliances) out += ",p_" + a.id;
    out += '\n';
    for (std::size_t i = 0; i < evaluator.nodes().size(); ++i) {
        out += fmt12(evaluator.nodes()[i]) + "," + fmt12(evaluator.mixture_density()[i]) + "," +
               fmt12(e[i] / ln_base);
        const auto post = evaluator.posterior_at(i);
        std::vector<double> per_app(pop.size(), 0.0);
        for (std::size_t t = 0; t < post.size(); ++t) {
            out += "," + fmt12(post[t]);
            per_app[flat[t].first] += post[t];
        }
        for (double v : per_app) out += "," + fmt12(v);
        out += '\n';
    }
    return out;
}

std::vector<BaseSweepEntry> base_sweep(const AppliancePopulation& pop, const DdmOptions& options)
{
    const DdmEvaluator evaluator(pop, AlphaGrid::cover(pop, options.grid_intervals));
    const double nats = evaluator.ddm(Partition::single_block(pop.size()));
    return {{"2", nats / std::log(2.0)}, {"e", nats}, {"10", nats / std::log(10.0)}};
}

Report compose_report(const AppliancePopulation& pop, const ReportOptions& options)
{
    Report report;
    const std::string base = log_base_name(options.ddm.log_base);

    OptimizeOptions opt = options.optimize;
    opt.ddm = options.ddm;
    const auto result = optimize(pop, options.constraints, opt);
    const auto single = ddm_single(pop, options.ddm);
    const std::size_t knee = knee_recommendation(result.rows, options.knee_epsilon);
    const auto sweep = base_sweep(pop, options.ddm);

    json population = json::array();
    std::string md = "# Disaggregation difficulty report\n\n## Population\n\n";
    md += "| Appliance | Transition | Distribution | Mean (W) | Std (W) | pi |\n|---|---|---|---|---|---|\n";
    for (const auto& a : pop.appliances) {
        for (const auto& t : a.transitions) {
            const bool gauss = std::holds_alternative<Gaussian>(t.distribution);
            const double mean = distribution_mean(t.distribution);
            const double sd = gauss ? std::get<Gaussian>(t.distribution).stddev : 0.0;
            md += "| " + a.id + " | " + std::to_string(t.transition_id) + " | " + (gauss ? "gaussian" : "empirical") +
                  " | " + fmt(mean, 1) + " | " + (gauss ? fmt(sd, 1) : std::string("-")) + " | " +
                  fmt(t.participation) + " |\n";
            population.push_back({{"appliance", a.id},
                                  {"transition", t.transition_id},
                                  {"mean", round_sig12(mean)},
                                  {"pi", round_sig12(t.participation)}});
        }
    }

    md += "\n## Single-meter DDM\n\nDDM (log base " + base + ") = " + fmt(single.ddm) +
          " (quadrature error estimate " + fmt12(single.quadrature_error_estimate) + ")\n\n";
    md += "| Log base | DDM |\n|---|---|\n";
    json sweep_json = json::array();
    for (const auto& s : sweep) {
        md += "| " + s.base + " | " + fmt(s.ddm) + " |\n";
        sweep_json.push_back({{"base", s.base}, {"ddm", round_sig12(s.ddm)}});
    }

    json references = json::array();
    if (!options.reference_values.empty()) {
        md += "\n### Comparison with reference values\n\n| Reference | Computed (base " + base +
              ") | Difference | Closest base |\n|---|---|---|---|\n";
        for (double ref : options.reference_values) {
            auto closest = std::min_element(sweep.begin(), sweep.end(), [ref](const auto& a, const auto& b) {
                return std::abs(a.ddm - ref) < std::abs(b.ddm - ref);
            });
            md += "| " + fmt(ref) + " | " + fmt(single.ddm) + " | " + fmt(single.ddm - ref) + " | " + closest->base +
                  " (" + fmt(closest->ddm) + ") |\n";
            references.push_back({{"reference", round_sig12(ref)},
                                  {"computed", round_sig12(single.ddm)},
                                  {"difference", round_sig12(single.ddm - ref)},
                                  {"closest_base", closest->base}});
        }
    }

    // Per-partition table: everything when small, otherwise the best few per meter count.
    std::vector<LandscapeRow> listed;
    if (result.landscape.size() <= options.max_listed_partitions) {
        listed = result.landscape;
    } else {
        const std::size_t per_b = std::max<std::size_t>(1, options.max_listed_partitions / pop.size());
        for (std::size_t b = 1; b <= pop.size(); ++b) {
            std::vector<LandscapeRow> level;
            for (const auto& r : result.landscape)
                if (r.partition.block_count() == b) level.push_back(r);
            std::stable_sort(level.begin(), level.end(), [](const auto& x, const auto& y) { return x.ddm < y.ddm; });
            if (level.size() > per_b) level.resize(per_b);
            listed.insert(listed.end(), level.begin(), level.end());
        }
    }
    md += "\n## DDM per partition\n\n| Meters | Assignment | DDM |\n|---|---|---|\n";
    json partitions = json::array();
    for (const auto& r : listed) {
        md += "| " + std::to_string(r.partition.block_count()) + " | " + r.partition.to_string() + " | " +
              fmt(r.ddm) + " |\n";
        partitions.push_back({{"meters", r.partition.block_count()},
                              {"partition", r.partition.to_string()},
                              {"ddm", round_sig12(r.ddm)}});
    }

    md += "\n## Cost and lowest achievable DDM\n\n| Meters | Min DDM | Best assignment | Cost |\n|---|---|---|---|\n";
    for (const auto& r : result.rows)
        md += "| " + std::to_string(r.meters) + " | " + fmt(r.min_ddm) + " | " + r.argmin.to_string() + " | " +
              fmt(r.cost, 2) + " |\n";
    md += "\nRecommended meter count: " + std::to_string(knee) + "\n";

    report.summary = {
        {"log_base", base},
        {"population", population},
        {"single_meter", ddm_report_to_json(single, Partition::single_block(pop.size()), false)},
        {"base_sweep", sweep_json},
        {"references", references},
        {"partitions", partitions},
        {"tradeoff", tradeoff_to_json(result, knee)},
    };
    report.markdown = std::move(md);
    report.curves_csv = curves_csv(pop, options.ddm);
    report.landscape_csv = landscape_csv(result);
    return report;
}

}  // namespace ddmkit
