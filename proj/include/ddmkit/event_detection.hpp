#pragma once

#include "ddmkit/core_model.hpp"
#include "ddmkit/signal_ingest.hpp"

#include <span>
#include <vector>

namespace ddmkit {

struct DetectionOptions {
    /// Pairs whose larger value is below this (watts) are treated as unchanged.
    double dead_band = 5.0;
};

/// Min/max-ratio change score per sample: M[t] = 1 - min/max of (P[t-1], P[t]).
/// M[0] is 0; entries inside recording gaps are forced to 0.
std::vector<double> change_scores(const PowerSignal& signal, const DetectionOptions& options = {});

/// Threshold-free event detector. Samples whose change score exceeds the
/// standard deviation of all scores are outliers; each run of consecutive
/// outliers becomes one event spanning the run.
std::vector<EventRecord> detect_events(const PowerSignal& signal, const DetectionOptions& options = {});

std::vector<double> event_deltas_to_magnitudes(std::span<const EventRecord> events);

std::string format_events_csv(std::span<const EventRecord> events);

}  // namespace ddmkit
