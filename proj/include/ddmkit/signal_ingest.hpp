#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ddmkit {

/// Span of forward-filled samples bridging a recording gap. Samples in
/// (begin, end] carry no fresh measurement.
struct GapSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Uniformly sampled active-power signal of one appliance (or the aggregate).
struct PowerSignal {
    std::string appliance_id;
    double sample_period = 1.0;
    double start_time = 0.0;
    std::vector<double> samples;
    std::vector<GapSpan> gaps;
};

/// Throws ddmkit::Error when the invariants (period > 0, finite samples,
/// at least two samples) do not hold.
void check_signal(const PowerSignal& signal);

enum class CsvFormat {
    /// Header row, one timestamp column and one column per appliance.
    wide,
    /// REDD channel files: space separated `unix_ts watts`, no header.
    redd,
};

struct LoadOptions {
    CsvFormat format = CsvFormat::wide;
    /// Timestamp column name; empty selects the first column.
    std::string timestamp_col;
    /// Power columns to keep; empty keeps every non-timestamp column.
    std::vector<std::string> power_cols;
    /// Target sample period in seconds (REDD low-frequency native rate).
    double period = 3.0;
    /// Raw steps longer than gap_factor * period are reported as gaps.
    double gap_factor = 5.0;
    /// Overrides the signal id for single-channel inputs.
    std::string appliance_id;
};

std::vector<PowerSignal> load_csv(const std::string& path, const LoadOptions& options = {});
/// Same as load_csv but reads from an in-memory buffer; `source` names it in errors.
std::vector<PowerSignal> parse_csv(const std::string& text, const LoadOptions& options = {},
                                   const std::string& source = "<memory>");

/// Zero-order-hold resampling onto a coarser uniform grid.
PowerSignal resample(const PowerSignal& signal, double target_period);

/// Wide-format CSV with a `timestamp` column. All signals must share length and period.
std::string format_csv(const std::vector<PowerSignal>& signals);
void write_csv(const std::string& path, const std::vector<PowerSignal>& signals);

}  // namespace ddmkit
