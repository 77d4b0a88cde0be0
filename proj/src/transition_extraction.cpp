#include "ddmkit/transition_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace ddmkit {

namespace {

std::size_t nearest(std::span<const double> centroids, double x)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = (x - centroids[c]) * (x - centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::size_t distinct_count(std::span<const double> points)
{
    std::vector<double> v(points.begin(), points.end());
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

std::vector<double> seed_plus_plus(std::span<const double> points, std::size_t k, std::mt19937_64& rng)
{
    std::vector<double> centroids;
    centroids.reserve(k);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    centroids.push_back(points[pick(rng)]);

    std::vector<double> d2(points.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double x = points[i];
            double best = std::numeric_limits<double>::infinity();
            for (double c : centroids) best = std::min(best, (x - c) * (x - c));
            d2[i] = best;
            total += best;
        }
        // k <= distinct points, so total > 0 here.
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        std::size_t chosen = points.size() - 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (d2[i] <= 0.0) continue;
            if (r < d2[i]) {
                chosen = i;
                break;
            }
            r -= d2[i];
        }
        if (d2[chosen] <= 0.0) {
            // Rounding left r past the last positive weight.
            for (std::size_t i = points.size(); i-- > 0;)
                if (d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
        }
        centroids.push_back(points[chosen]);
    }
    return centroids;
}

void update_centroids(std::span<const double> points, std::span<const std::size_t> assignment,
                      std::vector<double>& centroids)
{
    std::vector<double> sum(centroids.size(), 0.0);
    std::vector<std::size_t> count(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sum[assignment[i]] += points[i];
        ++count[assignment[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c)
        if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
}

// Empty clusters take the point farthest from its centroid, which strictly
// lowers the cost when that distance is positive.
bool repair_empty(std::span<const double> points, std::vector<std::size_t>& assignment,
                  const std::vector<double>& centroids)
{
    bool changed = false;
    std::vector<std::size_t> count(centroids.size(), 0);
    for (auto a : assignment) ++count[a];
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (count[c] > 0) continue;
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (count[assignment[i]] < 2) continue;
            const double d = std::abs(points[i] - centroids[assignment[i]]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        --count[assignment[far]];
        assignment[far] = c;
        ++count[c];
        changed = true;
    }
    return changed;
}

}  // namespace

double clustering_cost(std::span<const double> points, std::span<const std::size_t> assignment, std::size_t k)
{
    std::vector<double> centroids(k, 0.0);
    update_centroids(points, assignment, centroids);
    double cost = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = points[i] - centroids[assignment[i]];
        cost += d * d;
    }
    return cost;
}

ClusteringResult kmeans(std::span<const double> points, std::size_t k, std::uint64_t seed)
{
    if (k == 0) throw Error("k-means needs K >= 1");
    if (k > points.size())
        throw Error("k-means: K = " + std::to_string(k) + " exceeds the number of points (" +
                    std::to_string(points.size()) + ")");
    if (k > distinct_count(points))
        throw Error("k-means: K = " + std::to_string(k) + " exceeds the number of distinct points");

    std::mt19937_64 rng(seed);
    std::vector<double> centroids = seed_plus_plus(points, k, rng);

    ClusteringResult r;
    r.k = k;
    r.assignment.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) r.assignment[i] = nearest(centroids, points[i]);
    repair_empty(points, r.assignment, centroids);
    r.cost_history.push_back(clustering_cost(points, r.assignment, k));

    for (r.iterations = 0; r.iterations < kMaxLloydIterations; ++r.iterations) {
        update_centroids(points, r.assignment, centroids);
        std::vector<std::size_t> next(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) next[i] = nearest(centroids, points[i]);
        repair_empty(points, next, centroids);
        const bool fixed = next == r.assignment;
        r.assignment = std::move(next);
        r.cost_history.push_back(clustering_cost(points, r.assignment, k));
        if (fixed) break;
    }
    update_centroids(points, r.assignment, centroids);

    // Relabel so centroids ascend.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return centroids[a] < centroids[b]; });
    std::vector<std::size_t> rank(k);
    for (std::size_t i = 0; i < k; ++i) rank[order[i]] = i;
    r.centroids.resize(k);
    for (std::size_t i = 0; i < k; ++i) r.centroids[i] = centroids[order[i]];
    for (auto& a : r.assignment) a = rank[a];
    r.cost = clustering_cost(points, r.assignment, k);
    return r;
}

ClusteringResult kmeans_best(std::span<const double> points, std::size_t k, std::uint64_t seed,
                             std::size_t restarts)
{
    std::seed_seq seq{seed, static_cast<std::uint64_t>(k)};
    std::vector<std::uint64_t> seeds(std::max<std::size_t>(restarts, 1));
    std::vector<std::uint32_t> raw(seeds.size() * 2);
    seq.generate(raw.begin(), raw.end());
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seeds[i] = (static_cast<std::uint64_t>(raw[2 * i]) << 32) | raw[2 * i + 1];

    ClusteringResult best = kmeans(points, k, seeds[0]);
    for (std::size_t i = 1; i < seeds.size(); ++i) {
        auto r = kmeans(points, k, seeds[i]);
        if (r.cost < best.cost) best = std::move(r);
    }
    return best;
}

std::size_t elbow_select_k(std::span<const double> points, const ElbowOptions& options)
{
    if (options.k_max < 1) throw Error("elbow: k_max must be >= 1");
    if (points.size() < 2) return 1;
    const std::size_t k_limit = std::min(options.k_max, distinct_count(points));

    double cost = kmeans_best(points, 1, options.seed, options.restarts).cost;
    const double zero = 1e-12 * std::max(1.0, cost);
    for (std::size_t k = 1; k < k_limit; ++k) {
        if (cost <= zero) return k;
        const double next = kmeans_best(points, k + 1, options.seed, options.restarts).cost;
        if ((cost - next) / cost < options.threshold) return k;
        cost = next;
    }
    return k_limit;
}

PowerDistribution fit_gaussian(std::span<const double> points, double sigma_min)
{
    if (points.empty()) throw Error("cannot fit a distribution to an empty cluster");
    // Sorted summation makes the fit independent of input order.
    std::vector<double> v(points.begin(), points.end());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return Gaussian{mean, sigma_min};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return Gaussian{mean, std::max(std::sqrt(ss / (n - 1.0)), sigma_min)};
}

PowerDistribution fit_wma_empirical(std::span<const double> points, double bin_width, std::size_t window)
{
    if (points.empty()) throw Error("cannot fit a distribution to an empty cluster");
    if (!(bin_width > 0.0)) throw Error("WMA bin width must be > 0");
    if (window % 2 == 0) throw Error("WMA window length must be odd");

    const auto [lo_it, hi_it] = std::minmax_element(points.begin(), points.end());
    const double mid = 0.5 * (*lo_it + *hi_it);
    const std::size_t half_window = window / 2;
    // 3 bins of padding, room for the smoothing kernel, and one zero bin at each end.
    const auto reach = static_cast<std::size_t>(std::ceil((*hi_it - mid) / bin_width)) + 3 + half_window + 1;
    const std::size_t bins = 2 * reach + 1;

    std::vector<double> hist(bins, 0.0);
    for (double x : points) {
        const auto offset = static_cast<long>(std::round((x - mid) / bin_width));
        hist[static_cast<std::size_t>(static_cast<long>(reach) + offset)] += 1.0;
    }

    std::vector<double> smooth(bins, 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
        if (hist[i] == 0.0) continue;
        for (std::size_t d = 0; d <= half_window; ++d) {
            const double w = static_cast<double>(half_window + 1 - d);
            smooth[i + d] += w * hist[i];
            if (d > 0) smooth[i - d] += w * hist[i];
        }
    }

    Empirical e;
    e.grid.resize(bins);
    for (std::size_t i = 0; i < bins; ++i)
        e.grid[i] = mid + (static_cast<double>(i) - static_cast<double>(reach)) * bin_width;
    double area = 0.0;
    for (std::size_t i = 1; i < bins; ++i) area += 0.5 * bin_width * (smooth[i] + smooth[i - 1]);
    e.density.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) e.density[i] = smooth[i] / area;
    return e;
}

std::vector<std::vector<double>> participation_indices(const std::vector<std::vector<std::size_t>>& counts)
{
    std::size_t total = 0;
    for (const auto& row : counts)
        for (auto c : row) total += c;
    if (total == 0) throw Error("no events in training data");
    std::vector<std::vector<double>> pi;
    pi.reserve(counts.size());
    for (const auto& row : counts) {
        auto& out = pi.emplace_back();
        for (auto c : row) out.push_back(static_cast<double>(c) / static_cast<double>(total));
    }
    return pi;
}

ExtractionResult build_population(const std::vector<PowerSignal>& signals, const ExtractionOptions& options)
{
    if (signals.empty()) throw Error("build_population needs at least one signal");

    ExtractionResult result;
    std::set<std::string> ids;
    std::vector<std::vector<std::vector<double>>> members;
    for (std::size_t s = 0; s < signals.size(); ++s) {
        const auto& sig = signals[s];
        if (!ids.insert(sig.appliance_id).second) throw Error("duplicate appliance id '" + sig.appliance_id + "'");

        ApplianceExtraction ex;
        ex.id = sig.appliance_id;
        ex.events = detect_events(sig, options.detection);
        if (ex.events.empty()) {
            result.warnings.push_back("appliance '" + sig.appliance_id + "' has no events; excluded");
            continue;
        }

        std::vector<double> on, off;
        for (const auto& e : ex.events) (e.delta_watts > 0 ? on : off).push_back(e.magnitude_watts);
        const bool signed_mode = options.cluster_signed && !on.empty();
        const std::vector<double> all = event_deltas_to_magnitudes(ex.events);
        const std::vector<double>& train = signed_mode ? on : all;

        ElbowOptions elbow = options.elbow;
        elbow.seed = options.elbow.seed + s;
        const std::size_t k = elbow_select_k(train, elbow);
        ex.clustering = kmeans_best(train, k, elbow.seed, elbow.restarts);

        std::vector<std::vector<double>> groups(k);
        for (std::size_t i = 0; i < train.size(); ++i) groups[ex.clustering.assignment[i]].push_back(train[i]);
        if (signed_mode)
            for (double x : off) groups[nearest(ex.clustering.centroids, x)].push_back(x);

        for (const auto& g : groups) ex.counts.push_back(g.size());
        members.push_back(std::move(groups));
        result.details.push_back(std::move(ex));
    }

    std::vector<std::vector<std::size_t>> counts;
    for (const auto& d : result.details) counts.push_back(d.counts);
    const auto pi = participation_indices(counts);

    for (std::size_t a = 0; a < result.details.size(); ++a) {
        Appliance app;
        app.id = result.details[a].id;
        for (std::size_t j = 0; j < members[a].size(); ++j) {
            TransitionModel t;
            t.appliance_id = app.id;
            t.transition_id = static_cast<int>(j + 1);
            t.participation = pi[a][j];
            t.distribution = options.kind == DistributionKind::gaussian
                                 ? fit_gaussian(members[a][j], options.sigma_min)
                                 : fit_wma_empirical(members[a][j], options.wma_bin_width, options.wma_window);
            app.transitions.push_back(std::move(t));
        }
        result.population.appliances.push_back(std::move(app));
    }
    return result;
}

}  // namespace ddmkit
