#pragma once

#include "ddmkit/core_model.hpp"
#include "ddmkit/event_detection.hpp"
#include "ddmkit/signal_ingest.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddmkit {

struct ClusteringResult {
    std::size_t k = 0;
    /// Ascending; assignment ids index into this.
    std::vector<double> centroids;
    std::vector<std::size_t> assignment;
    /// Within-cluster sum of squared distances.
    double cost = 0.0;
    /// Cost after seeding and after every Lloyd iteration.
    std::vector<double> cost_history;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxLloydIterations = 300;

/// Lloyd's algorithm from k-means++ seeding. Deterministic for a given seed.
/// Throws when k is zero or exceeds the number of distinct points.
ClusteringResult kmeans(std::span<const double> points, std::size_t k, std::uint64_t seed);

/// Lowest-cost run among `restarts` seeds derived from `seed`.
ClusteringResult kmeans_best(std::span<const double> points, std::size_t k, std::uint64_t seed,
                             std::size_t restarts);

/// Sum of squared distances to the mean of each assigned cluster.
double clustering_cost(std::span<const double> points, std::span<const std::size_t> assignment, std::size_t k);

struct ElbowOptions {
    std::size_t k_max = 8;
    /// Stop at the first K whose next split removes less than this fraction
    /// of cost(K). Splitting one Gaussian cluster in two removes 1 - 2/pi.
    double threshold = 0.75;
    std::size_t restarts = 8;
    std::uint64_t seed = 42;
};

std::size_t elbow_select_k(std::span<const double> points, const ElbowOptions& options = {});

inline constexpr double kDefaultSigmaMin = 1.0;

/// Sample mean and (n-1) standard deviation, floored at sigma_min.
PowerDistribution fit_gaussian(std::span<const double> points, double sigma_min = kDefaultSigmaMin);

/// Histogram smoothed with a triangular weighted moving average
/// (weights 1, 2, ..., (window+1)/2, ..., 2, 1) and normalised to unit area.
PowerDistribution fit_wma_empirical(std::span<const double> points, double bin_width = 5.0, std::size_t window = 5);

/// pi[i][j] = counts[i][j] / total.
std::vector<std::vector<double>> participation_indices(const std::vector<std::vector<std::size_t>>& counts);

enum class DistributionKind { gaussian, wma };

struct ExtractionOptions {
    DistributionKind kind = DistributionKind::gaussian;
    DetectionOptions detection;
    ElbowOptions elbow;
    double sigma_min = kDefaultSigmaMin;
    double wma_bin_width = 5.0;
    std::size_t wma_window = 5;
    /// Learn transitions from ON edges only; OFF edges join the nearest ON centroid.
    bool cluster_signed = false;
};

struct ApplianceExtraction {
    std::string id;
    std::vector<EventRecord> events;
    ClusteringResult clustering;
    std::vector<std::size_t> counts;
};

struct ExtractionResult {
    AppliancePopulation population;
    std::vector<ApplianceExtraction> details;
    std::vector<std::string> warnings;
};

ExtractionResult build_population(const std::vector<PowerSignal>& signals, const ExtractionOptions& options = {});

}  // namespace ddmkit
