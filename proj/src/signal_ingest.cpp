#include "ddmkit/signal_ingest.hpp"

#include "ddmkit/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ddmkit {

namespace {

constexpr double kGridEps = 1e-9;

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char delim)
{
    std::vector<std::string> out;
    if (delim == ' ') {
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) out.push_back(tok);
        return out;
    }
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, delim)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out)
{
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

struct RawSeries {
    std::string id;
    std::vector<double> values;
};

// Zero-order hold of raw (t, v) columns onto t0 + j * period.
std::vector<PowerSignal> to_uniform(const std::vector<double>& t, const std::vector<RawSeries>& series,
                                    const LoadOptions& options, const std::string& source)
{
    if (!(options.period > 0.0)) throw Error(source + ": sample period must be > 0");
    if (t.size() < 2) throw Error(source + ": need at least two samples");

    std::vector<double> steps(t.size() - 1);
    for (std::size_t k = 1; k < t.size(); ++k) steps[k - 1] = t[k] - t[k - 1];
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    const double native = steps[steps.size() / 2];
    if (options.period < native * (1.0 - kGridEps))
        throw Error(source + ": upsampling unsupported (period " + std::to_string(options.period) +
                    " s < native " + std::to_string(native) + " s)");

    const double t0 = t.front();
    const auto count = static_cast<std::size_t>(std::floor((t.back() - t0) / options.period + kGridEps)) + 1;
    if (count < 2) throw Error(source + ": recording shorter than two sample periods");

    // src[j]: last raw sample at or before grid time j.
    std::vector<std::size_t> src(count);
    std::size_t k = 0;
    for (std::size_t j = 0; j < count; ++j) {
        const double g = t0 + static_cast<double>(j) * options.period;
        while (k + 1 < t.size() && t[k + 1] <= g + kGridEps * options.period) ++k;
        src[j] = k;
    }

    std::vector<GapSpan> gaps;
    const double gap_limit = options.gap_factor * options.period;
    for (std::size_t r = 1; r < t.size(); ++r) {
        if (t[r] - t[r - 1] <= gap_limit) continue;
        const auto begin = static_cast<std::size_t>(std::floor((t[r - 1] - t0) / options.period + kGridEps));
        auto end = static_cast<std::size_t>(std::ceil((t[r] - t0) / options.period - kGridEps));
        end = std::min(end, count - 1);
        if (end > begin) gaps.push_back({begin, end});
    }

    std::vector<PowerSignal> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        PowerSignal sig;
        sig.appliance_id = s.id;
        sig.sample_period = options.period;
        sig.start_time = t0;
        sig.gaps = gaps;
        sig.samples.resize(count);
        for (std::size_t j = 0; j < count; ++j) sig.samples[j] = s.values[src[j]];
        out.push_back(std::move(sig));
    }
    return out;
}

void check_time(const std::vector<double>& t, double value, std::size_t line, const std::string& source)
{
    if (!t.empty() && !(value > t.back()))
        throw Error(source + ":" + std::to_string(line) + ": non-monotonic timestamp " + std::to_string(value));
}

std::vector<PowerSignal> parse_redd(const std::string& text, const LoadOptions& options, const std::string& source)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> t;
    RawSeries s{options.appliance_id.empty() ? "channel" : options.appliance_id, {}};
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ' ');
        double ts = 0, w = 0;
        if (fields.size() != 2 || !parse_double(fields[0], ts) || !parse_double(fields[1], w))
            throw Error(source + ":" + std::to_string(line_no) + ": unparseable row '" + trim(line) + "'");
        check_time(t, ts, line_no, source);
        t.push_back(ts);
        s.values.push_back(w);
    }
    return to_uniform(t, {s}, options, source);
}

std::vector<PowerSignal> parse_wide(const std::string& text, const LoadOptions& options, const std::string& source)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!trim(line).empty()) header = split(line, ',');
    }
    if (header.empty()) throw Error(source + ": missing header row");

    std::size_t ts_col = 0;
    if (!options.timestamp_col.empty()) {
        auto it = std::find(header.begin(), header.end(), options.timestamp_col);
        if (it == header.end()) throw Error(source + ": no timestamp column '" + options.timestamp_col + "'");
        ts_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::size_t> cols;
    if (options.power_cols.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (c != ts_col) cols.push_back(c);
    } else {
        for (const auto& name : options.power_cols) {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw Error(source + ": no power column '" + name + "'");
            cols.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    if (cols.empty()) throw Error(source + ": no power columns");

    std::vector<RawSeries> series;
    for (auto c : cols) series.push_back({header[c], {}});
    if (series.size() == 1 && !options.appliance_id.empty()) series[0].id = options.appliance_id;

    std::vector<double> t;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != header.size())
            throw Error(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
        double ts = 0;
        if (!parse_double(fields[ts_col], ts))
            throw Error(source + ":" + std::to_string(line_no) + ": unparseable timestamp '" + fields[ts_col] + "'");
        check_time(t, ts, line_no, source);
        t.push_back(ts);
        for (std::size_t s = 0; s < cols.size(); ++s) {
            double w = 0;
            if (!parse_double(fields[cols[s]], w))
                throw Error(source + ":" + std::to_string(line_no) + ": unparseable value '" + fields[cols[s]] + "'");
            series[s].values.push_back(w);
        }
    }
    return to_uniform(t, series, options, source);
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void check_signal(const PowerSignal& signal)
{
    if (!(signal.sample_period > 0.0)) throw Error("signal '" + signal.appliance_id + "': sample period must be > 0");
    if (signal.samples.size() < 2) throw Error("signal '" + signal.appliance_id + "': needs at least two samples");
    for (double v : signal.samples)
        if (!std::isfinite(v)) throw Error("signal '" + signal.appliance_id + "': non-finite sample");
}

std::vector<PowerSignal> parse_csv(const std::string& text, const LoadOptions& options, const std::string& source)
{
    return options.format == CsvFormat::redd ? parse_redd(text, options, source) : parse_wide(text, options, source);
}

std::vector<PowerSignal> load_csv(const std::string& path, const LoadOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    LoadOptions opts = options;
    if (opts.format == CsvFormat::redd && opts.appliance_id.empty())
        opts.appliance_id = std::filesystem::path(path).stem().string();
    return parse_csv(buf.str(), opts, path);
}

PowerSignal resample(const PowerSignal& signal, double target_period)
{
    check_signal(signal);
    const double native = signal.sample_period;
    if (!(target_period > 0.0)) throw Error("target period must be > 0");
    if (target_period < native * (1.0 - kGridEps)) throw Error("upsampling unsupported");

    const double ratio = target_period / native;
    const auto count =
        static_cast<std::size_t>(std::floor(static_cast<double>(signal.samples.size() - 1) / ratio + kGridEps)) + 1;

    PowerSignal out;
    out.appliance_id = signal.appliance_id;
    out.sample_period = target_period;
    out.start_time = signal.start_time;
    out.samples.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(j) * ratio + kGridEps));
        out.samples[j] = signal.samples[std::min(k, signal.samples.size() - 1)];
    }
    for (const auto& g : signal.gaps) {
        const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(g.begin) / ratio + kGridEps));
        auto e = static_cast<std::size_t>(std::ceil(static_cast<double>(g.end) / ratio - kGridEps));
        e = std::min(e, count - 1);
        if (e > b) out.gaps.push_back({b, e});
    }
    return out;
}

std::string format_csv(const std::vector<PowerSignal>& signals)
{
    if (signals.empty()) throw Error("no signals to write");
    const auto n = signals.front().samples.size();
    const double period = signals.front().sample_period;
    for (const auto& s : signals)
        if (s.samples.size() != n || s.sample_period != period)
            throw Error("signals written to one CSV must share length and period");

    std::string out = "timestamp";
    for (const auto& s : signals) out += "," + s.appliance_id;
    out += '\n';
    for (std::size_t j = 0; j < n; ++j) {
        out += format_number(signals.front().start_time + static_cast<double>(j) * period);
        for (const auto& s : signals) out += "," + format_number(s.samples[j]);
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<PowerSignal>& signals)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << format_csv(signals);
}

}  // namespace ddmkit
