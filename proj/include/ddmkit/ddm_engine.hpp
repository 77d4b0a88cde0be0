#pragma once

#include "ddmkit/core_model.hpp"

#include <cstdint>
#include <numbers>
#include <string>
#include <span>
#include <vector>

namespace ddmkit {

inline constexpr double kEpsilonFloor = 1e-300;
inline constexpr std::size_t kDefaultGridIntervals = 4096;

struct DdmOptions {
    /// Entropy logarithm base; e, 2 and 10 are the supported choices.
    double log_base = std::numbers::e;
    /// Number of Simpson sub-intervals (even, >= 64). Nodes = intervals + 1.
    std::size_t grid_intervals = kDefaultGridIntervals;
    /// Quadrature error estimates above this add a warning to the report.
    double error_tolerance = 1e-4;
};

/// Parses "e", "2" or "10".
double parse_log_base(const std::string& text);

/// Uniform quadrature grid over the padded support of a population.
struct AlphaGrid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t intervals = kDefaultGridIntervals;

    static AlphaGrid cover(const AppliancePopulation& pop, std::size_t intervals = kDefaultGridIntervals);

    double step() const { return (hi - lo) / static_cast<double>(intervals); }
    std::vector<double> nodes() const;
    /// Composite Simpson weights.
    std::vector<double> simpson_weights() const;
    AlphaGrid halved() const { return {lo, hi, intervals / 2}; }
};

double mixture_pdf(const AppliancePopulation& pop, double alpha);

struct Posterior {
    /// One entry per transition in AppliancePopulation::flatten() order.
    std::vector<double> probability;
    /// False when the mixture density at alpha is below the floor; the
    /// probabilities are then uniform.
    bool supported = true;
};

Posterior posterior(const AppliancePopulation& pop, double alpha);

/// Shannon entropy in the given base, with 0 log 0 = 0.
double entropy(std::span<const double> p, double log_base = std::numbers::e);

/// Entropy of the block-conditional posteriors weighted by block mass.
/// `block_of[t]` is the block of transition t. One block reduces to entropy().
double partitioned_entropy(std::span<const double> p, std::span<const std::uint8_t> block_of, std::size_t blocks,
                           double log_base = std::numbers::e);

double entropy_alpha(const AppliancePopulation& pop, double alpha, double log_base = std::numbers::e);

std::vector<double> block_posterior(const AppliancePopulation& pop, const Partition& partition, double alpha);

double entropy_alpha_partitioned(const AppliancePopulation& pop, const Partition& partition, double alpha,
                                 double log_base = std::numbers::e);

/// Block label of every flattened transition.
std::vector<std::uint8_t> transition_blocks(const AppliancePopulation& pop, const Partition& partition);

/// Precomputes mixture density and posteriors on a grid so many partitions
/// can be scored against the same population.
class DdmEvaluator {
public:
    DdmEvaluator(const AppliancePopulation& pop, const AlphaGrid& grid);

    const AlphaGrid& grid() const { return grid_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& mixture_density() const { return density_; }
    std::size_t transition_count() const { return transitions_; }
    std::vector<std::uint8_t> labels(const Partition& partition) const;
    /// Posterior of every transition at node i.
    std::span<const double> posterior_at(std::size_t i) const;

    /// e_alpha at every node, in nats.
    std::vector<double> e_alpha(const Partition& partition) const;
    /// DDM in nats.
    double ddm(const Partition& partition) const;

private:
    std::vector<std::size_t> transitions_per_appliance_;
    AlphaGrid grid_;
    std::size_t transitions_ = 0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> density_;
    std::vector<double> posterior_;
    std::vector<bool> supported_;
};

DdmReport ddm_partitioned(const AppliancePopulation& pop, const Partition& partition, const DdmOptions& options = {});
DdmReport ddm_single(const AppliancePopulation& pop, const DdmOptions& options = {});

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kMinOracleSamples = 10'000;

/// Independent DDM estimate: draw a transition by participation, draw its
/// power value, average the partitioned entropy at that value.
MonteCarloEstimate ddm_monte_carlo_oracle(const AppliancePopulation& pop, const Partition& partition,
                                          std::size_t samples, std::uint64_t seed,
                                          double log_base = std::numbers::e);

}  // namespace ddmkit
