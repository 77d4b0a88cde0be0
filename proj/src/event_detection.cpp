#include "ddmkit/event_detection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace ddmkit {

std::vector<double> change_scores(const PowerSignal& signal, const DetectionOptions& options)
{
    const auto& p = signal.samples;
    std::vector<double> m(p.size(), 0.0);
    for (std::size_t t = 1; t < p.size(); ++t) {
        const double hi = std::max(p[t - 1], p[t]);
        const double lo = std::min(p[t - 1], p[t]);
        if (hi < options.dead_band) continue;
        // Negative readings (meter offset) clamp to zero: the pair is a full change.
        m[t] = 1.0 - std::max(lo, 0.0) / hi;
    }
    for (const auto& g : signal.gaps)
        for (std::size_t t = g.begin + 1; t <= g.end && t < m.size(); ++t) m[t] = 0.0;
    return m;
}

std::vector<EventRecord> detect_events(const PowerSignal& signal, const DetectionOptions& options)
{
    check_signal(signal);
    if (signal.samples.size() < 3) throw Error("event detection needs at least three samples");

    const auto m = change_scores(signal, options);
    const auto n = static_cast<double>(m.size() - 1);
    double mean = 0.0;
    for (std::size_t t = 1; t < m.size(); ++t) mean += m[t];
    mean /= n;
    double var = 0.0;
    for (std::size_t t = 1; t < m.size(); ++t) var += (m[t] - mean) * (m[t] - mean);
    const double s = std::sqrt(var / n);
    if (s == 0.0) return {};

    const auto& p = signal.samples;
    std::vector<EventRecord> events;
    std::size_t t = 1;
    while (t < m.size()) {
        if (!(m[t] > s)) {
            ++t;
            continue;
        }
        const std::size_t start = t;
        while (t + 1 < m.size() && m[t + 1] > s) ++t;
        const double delta = p[t] - p[start - 1];
        if (delta != 0.0) events.push_back(EventRecord::make(start, delta));
        ++t;
    }
    return events;
}

std::vector<double> event_deltas_to_magnitudes(std::span<const EventRecord> events)
{
    std::vector<double> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(std::abs(e.delta_watts));
    return out;
}

std::string format_events_csv(std::span<const EventRecord> events)
{
    std::string out = "index,delta_w\n";
    char buf[64];
    for (const auto& e : events) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.delta_watts);
        out += std::to_string(e.sample_index) + "," + std::string(buf, ptr) + "\n";
    }
    return out;
}

}  // namespace ddmkit
