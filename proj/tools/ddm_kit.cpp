// ddm-kit: command-line front end for event detection, transition
// extraction, DDM evaluation and meter-partition optimization.

#include "ddmkit/core_model.hpp"
#include "ddmkit/ddm_engine.hpp"
#include "ddmkit/event_detection.hpp"
#include "ddmkit/partition_optimizer.hpp"
#include "ddmkit/population_io.hpp"
#include "ddmkit/report.hpp"
#include "ddmkit/signal_ingest.hpp"
#include "ddmkit/transition_extraction.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace ddmkit;

namespace {

struct IngestFlags {
    std::string timestamp_col;
    std::vector<std::string> power_cols;
    double period = 3.0;
    double gap_factor = 5.0;
    std::string format = "csv";

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--timestamp-col", timestamp_col, "Timestamp column name (default: first column)");
        cmd.add_option("--power-cols", power_cols, "Power columns to use (default: all)")->delimiter(',');
        cmd.add_option("--period", period, "Resampling period in seconds")->check(CLI::PositiveNumber);
        cmd.add_option("--gap-factor", gap_factor, "Gap threshold as a multiple of the period");
        cmd.add_option("--format", format, "Input format")->check(CLI::IsMember({"csv", "redd"}));
    }

    LoadOptions options() const
    {
        LoadOptions o;
        o.format = format == "redd" ? CsvFormat::redd : CsvFormat::wide;
        o.timestamp_col = timestamp_col;
        o.power_cols = power_cols;
        o.period = period;
        o.gap_factor = gap_factor;
        return o;
    }
};

std::pair<std::size_t, std::size_t> parse_pair(const std::string& text, std::size_t n)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("pair '" + text + "' must look like a,b");
    auto index = [&](const std::string& s) -> std::size_t {
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || v < 1 || static_cast<std::size_t>(v) > n)
            throw Error("appliance index '" + s + "' out of range 1.." + std::to_string(n));
        return static_cast<std::size_t>(v - 1);
    };
    return {index(text.substr(0, comma)), index(text.substr(comma + 1))};
}

/// Loads a population, tolerating rounded participation with a warning.
PopulationDocument load_population(const std::string& path, bool force_renormalize)
{
    auto doc = read_population(path);
    auto violations = validate_population(doc.population, kFileTolerance);
    const bool off = std::abs(doc.population.total_participation() - 1.0) > kStrictTolerance;
    std::erase_if(violations, [](const Violation& v) { return v.field == "pi"; });
    if (!violations.empty()) throw Error(path + ": " + violations.front().field + ": " + violations.front().message);
    const double total = doc.population.total_participation();
    if (std::abs(total - 1.0) > kFileTolerance && !force_renormalize)
        throw Error(path + ": participation sums to " + std::to_string(total) +
                    "; pass --renormalize to rescale it");
    if (off) {
        spdlog::warn("{}: participation sums to {}; renormalizing", path, total);
        doc.population = renormalize_participation(doc.population);
    }
    return doc;
}

std::vector<std::string> input_files(const std::string& in, const std::string& format)
{
    if (!fs::is_directory(in)) return {in};
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(in)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if ((format == "csv" && ext == ".csv") || (format == "redd" && (ext == ".dat" || ext == ".txt")))
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no input files in " + in);
    return files;
}

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("ddm-kit");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%^%l%$: %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("DDMKIT_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Disaggregation difficulty toolkit", "ddm-kit"};
    app.require_subcommand(1);
    std::uint64_t seed = 42;

    // detect
    auto* detect = app.add_subcommand("detect", "Detect events in a power signal");
    IngestFlags detect_in;
    std::string detect_path, detect_out;
    double dead_band = 5.0;
    detect->add_option("--in", detect_path, "Signal CSV")->required();
    detect->add_option("--out", detect_out, "Events CSV (index,delta_w)")->required();
    detect->add_option("--dead-band", dead_band, "Watts below which pairs count as unchanged");
    detect_in.attach(*detect);

    // extract
    auto* extract = app.add_subcommand("extract", "Learn transitions and participation from signals");
    IngestFlags extract_in;
    std::string extract_path, extract_out, dist = "gaussian";
    ExtractionOptions xo;
    extract->add_option("--in", extract_path, "Signal file or directory")->required();
    extract->add_option("--out", extract_out, "Population JSON")->required();
    extract->add_option("--dist", dist, "Transition distribution")->check(CLI::IsMember({"gaussian", "wma"}));
    extract->add_option("--seed", seed, "Random seed");
    extract->add_option("--k-max", xo.elbow.k_max, "Largest transition count tried per appliance");
    extract->add_option("--elbow-threshold", xo.elbow.threshold, "Relative cost drop that justifies another cluster");
    extract->add_option("--restarts", xo.elbow.restarts, "k-means restarts per K");
    extract->add_option("--sigma-min", xo.sigma_min, "Standard deviation floor (W)");
    extract->add_option("--bin-width", xo.wma_bin_width, "WMA histogram bin width (W)");
    extract->add_option("--window", xo.wma_window, "WMA window length (odd)");
    extract->add_option("--dead-band", xo.detection.dead_band, "Event detection dead band (W)");
    extract->add_flag("--cluster-signed", xo.cluster_signed, "Learn transitions from ON edges only");
    extract_in.attach(*extract);

    // ddm
    auto* ddm = app.add_subcommand("ddm", "Evaluate the DDM of a partition");
    std::string ddm_pop, ddm_out, ddm_partition, ddm_base, ddm_curves;
    std::size_t grid_n = kDefaultGridIntervals;
    bool ddm_renorm = false;
    ddm->add_option("--pop", ddm_pop, "Population JSON")->required();
    ddm->add_option("--partition", ddm_partition, "Blocks such as \"1|2,3\" (default: one meter)");
    ddm->add_option("--base", ddm_base, "Entropy log base")->check(CLI::IsMember({"e", "2", "10"}));
    ddm->add_option("--grid-n", grid_n, "Quadrature sub-intervals");
    ddm->add_option("--out", ddm_out, "Report JSON (default: stdout)");
    ddm->add_option("--curves", ddm_curves, "Plot curves CSV");
    ddm->add_flag("--renormalize", ddm_renorm, "Rescale participation that does not sum to 1");

    // optimize
    auto* opt = app.add_subcommand("optimize", "Search meter partitions");
    std::string opt_pop, opt_out, opt_landscape, opt_base;
    std::vector<std::string> must, cannot;
    std::optional<std::size_t> max_meters;
    OptimizeOptions oo;
    bool opt_renorm = false;
    opt->add_option("--pop", opt_pop, "Population JSON")->required();
    opt->add_option("--must-link", must, "Appliances a,b share a meter")->take_all();
    opt->add_option("--cannot-link", cannot, "Appliances a,b on different meters")->take_all();
    opt->add_option("--max-meters", max_meters, "Upper bound on meter count");
    opt->add_option("--unit-cost", oo.unit_cost, "Cost per meter");
    opt->add_option("--base", opt_base, "Entropy log base")->check(CLI::IsMember({"e", "2", "10"}));
    opt->add_option("--grid-n", oo.ddm.grid_intervals, "Quadrature sub-intervals");
    opt->add_option("--threads", oo.threads, "Worker threads");
    opt->add_flag("--prune", oo.prune, "Skip partitions bounded out by their refinements");
    opt->add_option("--out", opt_out, "Trade-off JSON (default: stdout)");
    opt->add_option("--landscape", opt_landscape, "Landscape CSV (code,b,ddm)");
    opt->add_flag("--renormalize", opt_renorm, "Rescale participation that does not sum to 1");

    // report
    auto* rep = app.add_subcommand("report", "Compose a full summary for a population");
    std::string rep_pop, rep_md, rep_json, rep_curves, rep_landscape, rep_base;
    ReportOptions ro;
    bool rep_renorm = false;
    rep->add_option("--pop", rep_pop, "Population JSON")->required();
    rep->add_option("--out", rep_md, "Markdown summary (default: stdout)");
    rep->add_option("--json", rep_json, "JSON summary");
    rep->add_option("--curves", rep_curves, "Plot curves CSV");
    rep->add_option("--landscape", rep_landscape, "Landscape CSV");
    rep->add_option("--base", rep_base, "Entropy log base")->check(CLI::IsMember({"e", "2", "10"}));
    rep->add_option("--unit-cost", ro.optimize.unit_cost, "Cost per meter");
    rep->add_option("--reference", ro.reference_values, "Reference single-meter DDM to compare against")->take_all();
    rep->add_flag("--renormalize", rep_renorm, "Rescale participation that does not sum to 1");

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto base_of = [](const std::string& flag, const PopulationDocument& doc) {
        if (!flag.empty()) return parse_log_base(flag);
        return doc.log_base.value_or(std::numbers::e);
    };
    auto emit = [](const std::string& path, const std::string& text) {
        if (path.empty()) std::cout << text;
        else write_text(path, text);
    };

    try {
        if (*detect) {
            auto signals = load_csv(detect_path, detect_in.options());
            if (signals.size() != 1) throw CLI::ValidationError("--power-cols", "select exactly one power column");
            const auto events = detect_events(signals.front(), DetectionOptions{dead_band});
            spdlog::info("{} events detected", events.size());
            write_text(detect_out, format_events_csv(events));
        } else if (*extract) {
            std::vector<PowerSignal> signals;
            for (const auto& file : input_files(extract_path, extract_in.format)) {
                auto opts = extract_in.options();
                auto loaded = load_csv(file, opts);
                if (loaded.size() == 1 && fs::is_directory(extract_path))
                    loaded.front().appliance_id = fs::path(file).stem().string();
                signals.insert(signals.end(), loaded.begin(), loaded.end());
            }
            xo.kind = dist == "wma" ? DistributionKind::wma : DistributionKind::gaussian;
            xo.elbow.seed = seed;
            auto result = build_population(signals, xo);
            for (const auto& w : result.warnings) spdlog::warn("{}", w);
            if (result.population.appliances.empty()) throw Error("no appliance produced any events");
            write_population(extract_out, result.population);
        } else if (*ddm) {
            const auto doc = load_population(ddm_pop, ddm_renorm);
            DdmOptions o;
            o.log_base = base_of(ddm_base, doc);
            o.grid_intervals = grid_n;
            const auto& pop = doc.population;
            const auto partition =
                ddm_partition.empty() ? Partition::single_block(pop.size()) : Partition::parse(ddm_partition, pop.size());
            const auto report = ddm_partitioned(pop, partition, o);
            for (const auto& w : report.warnings) spdlog::warn("{}", w);
            emit(ddm_out, ddm_report_to_json(report, partition).dump(2) + "\n");
            if (!ddm_curves.empty()) write_text(ddm_curves, curves_csv(pop, o));
        } else if (*opt) {
            const auto doc = load_population(opt_pop, opt_renorm);
            const auto& pop = doc.population;
            ConstraintSet cs;
            for (const auto& m : must) cs.must_link.push_back(parse_pair(m, pop.size()));
            for (const auto& c : cannot) cs.cannot_link.push_back(parse_pair(c, pop.size()));
            cs.max_meters = max_meters;
            oo.ddm.log_base = base_of(opt_base, doc);
            const auto result = optimize(pop, cs, oo);
            const auto knee = knee_recommendation(result.rows);
            emit(opt_out, tradeoff_to_json(result, knee).dump(2) + "\n");
            if (!opt_landscape.empty()) write_text(opt_landscape, landscape_csv(result));
        } else if (*rep) {
            const auto doc = load_population(rep_pop, rep_renorm);
            ro.ddm.log_base = base_of(rep_base, doc);
            const auto report = compose_report(doc.population, ro);
            emit(rep_md, report.markdown);
            if (!rep_json.empty()) write_text(rep_json, report.summary.dump(2) + "\n");
            if (!rep_curves.empty()) write_text(rep_curves, report.curves_csv);
            if (!rep_landscape.empty()) write_text(rep_landscape, report.landscape_csv);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
