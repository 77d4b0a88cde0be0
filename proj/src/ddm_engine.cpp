#include "ddmkit/ddm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ddmkit {

namespace {

void check_partition(const AppliancePopulation& pop, const Partition& partition)
{
    if (partition.size() != pop.size())
        throw Error("partition covers " + std::to_string(partition.size()) + " appliances, population has " +
                    std::to_string(pop.size()));
}

void weighted_densities(const AppliancePopulation& pop, double alpha, std::vector<double>& out)
{
    out.clear();
    for (const auto& a : pop.appliances)
        for (const auto& t : a.transitions) out.push_back(t.participation * pdf(t.distribution, alpha));
}

// Normalises weighted densities in place; returns false (uniform) below the floor.
bool normalise(std::vector<double>& p)
{
    double total = 0.0;
    for (double v : p) total += v;
    if (!(total > kEpsilonFloor)) {
        std::fill(p.begin(), p.end(), p.empty() ? 0.0 : 1.0 / static_cast<double>(p.size()));
        return false;
    }
    for (double& v : p) v /= total;
    return true;
}

// Inverse-CDF sampler for a piecewise-linear density.
class EmpiricalSampler {
public:
    explicit EmpiricalSampler(const Empirical& e) : dist_(&e)
    {
        cdf_.resize(e.grid.size(), 0.0);
        for (std::size_t i = 1; i < e.grid.size(); ++i)
            cdf_[i] = cdf_[i - 1] + 0.5 * (e.grid[i] - e.grid[i - 1]) * (e.density[i] + e.density[i - 1]);
    }

    double operator()(std::mt19937_64& rng) const
    {
        const auto& g = dist_->grid;
        const auto& f = dist_->density;
        std::uniform_real_distribution<double> u(0.0, cdf_.back());
        const double target = u(rng);
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
        std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), g.size() - 1);
        hi = std::max<std::size_t>(hi, 1);
        const std::size_t lo = hi - 1;
        const double h = g[hi] - g[lo];
        const double r = target - cdf_[lo];
        // Solve f_lo x + (f_hi - f_lo) x^2 / (2h) = r for x in [0, h].
        const double slope = (f[hi] - f[lo]) / h;
        double x;
        if (std::abs(slope) < 1e-15) {
            x = f[lo] > 0 ? r / f[lo] : 0.5 * h;
        } else {
            const double disc = std::max(f[lo] * f[lo] + 2.0 * slope * r, 0.0);
            x = (std::sqrt(disc) - f[lo]) / slope;
        }
        return g[lo] + std::clamp(x, 0.0, h);
    }

private:
    const Empirical* dist_;
    std::vector<double> cdf_;
};

// sum_k m_k H(p | S_k), evaluated block by block from the conditionals.
double block_weighted_entropy(const std::vector<double>& p, const std::vector<std::uint8_t>& labels,
                              std::size_t blocks)
{
    double total = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
        double mass = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t)
            if (labels[t] == k) mass += p[t];
        if (mass <= 0.0) continue;
        double h = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t) {
            if (labels[t] != k || p[t] <= 0.0) continue;
            const double q = p[t] / mass;
            h -= q * std::log(q);
        }
        total += mass * h;
    }
    return total;
}

}  // namespace

double parse_log_base(const std::string& text)
{
    if (text == "e") return std::numbers::e;
    if (text == "2") return 2.0;
    if (text == "10") return 10.0;
    throw Error("unsupported log base '" + text + "' (use e, 2 or 10)");
}

AlphaGrid AlphaGrid::cover(const AppliancePopulation& pop, std::size_t intervals)
{
    if (intervals < 64 || intervals % 2 != 0) throw Error("grid needs an even number of intervals >= 64");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double mean_lo = lo, mean_hi = hi, sigma_max = 0.0;
    bool any_gaussian = false;
    for (const auto& a : pop.appliances) {
        for (const auto& t : a.transitions) {
            if (const auto* g = std::get_if<Gaussian>(&t.distribution)) {
                any_gaussian = true;
                mean_lo = std::min(mean_lo, g->mean);
                mean_hi = std::max(mean_hi, g->mean);
                sigma_max = std::max(sigma_max, g->stddev);
            } else {
                auto [l, h] = support(t.distribution);
                lo = std::min(lo, l);
                hi = std::max(hi, h);
            }
        }
    }
    if (any_gaussian) {
        lo = std::min(lo, mean_lo - 8.0 * sigma_max);
        hi = std::max(hi, mean_hi + 8.0 * sigma_max);
    }
    if (!(lo < hi)) throw Error("population has no transitions to integrate over");
    return {lo, hi, intervals};
}

std::vector<double> AlphaGrid::nodes() const
{
    std::vector<double> x(intervals + 1);
    const double h = step();
    for (std::size_t i = 0; i <= intervals; ++i) x[i] = lo + static_cast<double>(i) * h;
    x.back() = hi;
    return x;
}

std::vector<double> AlphaGrid::simpson_weights() const
{
    std::vector<double> w(intervals + 1);
    const double h3 = step() / 3.0;
    for (std::size_t i = 0; i <= intervals; ++i) w[i] = h3 * ((i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    return w;
}

double mixture_pdf(const AppliancePopulation& pop, double alpha)
{
    double total = 0.0;
    for (const auto& a : pop.appliances)
        for (const auto& t : a.transitions) total += t.participation * pdf(t.distribution, alpha);
    return total;
}

Posterior posterior(const AppliancePopulation& pop, double alpha)
{
    Posterior out;
    weighted_densities(pop, alpha, out.probability);
    out.supported = normalise(out.probability);
    return out;
}

double entropy(std::span<const double> p, double log_base)
{
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h / std::log(log_base);
}

double partitioned_entropy(std::span<const double> p, std::span<const std::uint8_t> block_of, std::size_t blocks,
                           double log_base)
{
    if (blocks == 1) return entropy(p, log_base);
    double mass[256] = {};
    for (std::size_t t = 0; t < p.size(); ++t) mass[block_of[t]] += p[t];
    // sum_k m_k H(p | S_k) = -sum_t p_t log(p_t / m_{k(t)})
    double h = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t)
        if (p[t] > 0.0) h -= p[t] * std::log(p[t] / mass[block_of[t]]);
    return std::max(h, 0.0) / std::log(log_base);
}

double entropy_alpha(const AppliancePopulation& pop, double alpha, double log_base)
{
    const auto post = posterior(pop, alpha);
    return entropy(post.probability, log_base);
}

std::vector<std::uint8_t> transition_blocks(const AppliancePopulation& pop, const Partition& partition)
{
    check_partition(pop, partition);
    std::vector<std::uint8_t> out;
    out.reserve(pop.transition_count());
    for (std::size_t i = 0; i < pop.appliances.size(); ++i)
        out.insert(out.end(), pop.appliances[i].transitions.size(), partition.code()[i]);
    return out;
}

std::vector<double> block_posterior(const AppliancePopulation& pop, const Partition& partition, double alpha)
{
    const auto labels = transition_blocks(pop, partition);
    const auto post = posterior(pop, alpha);
    std::vector<double> mass(partition.block_count(), 0.0);
    for (std::size_t t = 0; t < labels.size(); ++t) mass[labels[t]] += post.probability[t];
    return mass;
}

double entropy_alpha_partitioned(const AppliancePopulation& pop, const Partition& partition, double alpha,
                                 double log_base)
{
    const auto labels = transition_blocks(pop, partition);
    const auto post = posterior(pop, alpha);
    return partitioned_entropy(post.probability, labels, partition.block_count(), log_base);
}

DdmEvaluator::DdmEvaluator(const AppliancePopulation& pop, const AlphaGrid& grid)
    : grid_(grid), transitions_(pop.transition_count())
{
    for (const auto& a : pop.appliances) transitions_per_appliance_.push_back(a.transitions.size());
    nodes_ = grid_.nodes();
    weights_ = grid_.simpson_weights();
    density_.resize(nodes_.size());
    posterior_.resize(nodes_.size() * transitions_);
    supported_.resize(nodes_.size());
    std::vector<double> row;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        weighted_densities(pop, nodes_[i], row);
        double total = 0.0;
        for (double v : row) total += v;
        density_[i] = total;
        supported_[i] = normalise(row);
        std::copy(row.begin(), row.end(), posterior_.begin() + static_cast<std::ptrdiff_t>(i * transitions_));
    }
}

std::span<const double> DdmEvaluator::posterior_at(std::size_t i) const
{
    return std::span<const double>(posterior_).subspan(i * transitions_, transitions_);
}

std::vector<std::uint8_t> DdmEvaluator::labels(const Partition& partition) const
{
    if (partition.size() != transitions_per_appliance_.size())
        throw Error("partition covers " + std::to_string(partition.size()) + " appliances, population has " +
                    std::to_string(transitions_per_appliance_.size()));
    std::vector<std::uint8_t> out;
    out.reserve(transitions_);
    for (std::size_t i = 0; i < transitions_per_appliance_.size(); ++i)
        out.insert(out.end(), transitions_per_appliance_[i], partition.code()[i]);
    return out;
}

std::vector<double> DdmEvaluator::e_alpha(const Partition& partition) const
{
    const auto labels = this->labels(partition);
    const std::size_t blocks = partition.block_count();
    std::vector<double> e(nodes_.size(), 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (supported_[i]) e[i] = partitioned_entropy(posterior_at(i), labels, blocks);
    return e;
}

double DdmEvaluator::ddm(const Partition& partition) const
{
    const auto labels = this->labels(partition);
    const std::size_t blocks = partition.block_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (supported_[i]) sum += weights_[i] * density_[i] * partitioned_entropy(posterior_at(i), labels, blocks);
    return sum;
}

DdmReport ddm_partitioned(const AppliancePopulation& pop, const Partition& partition, const DdmOptions& options)
{
    check_partition(pop, partition);
    const double ln_base = std::log(options.log_base);
    const auto grid = AlphaGrid::cover(pop, options.grid_intervals);
    const DdmEvaluator fine(pop, grid);

    DdmReport r;
    r.log_base = options.log_base;
    r.ddm = fine.ddm(partition) / ln_base;
    r.alpha_grid = fine.nodes();
    r.mixture_density = fine.mixture_density();
    r.e_alpha = fine.e_alpha(partition);
    for (double& e : r.e_alpha) e /= ln_base;

    if (grid.intervals / 2 >= 64 && (grid.intervals / 2) % 2 == 0) {
        const DdmEvaluator coarse(pop, grid.halved());
        r.quadrature_error_estimate = std::abs(fine.ddm(partition) - coarse.ddm(partition)) / ln_base;
    } else {
        r.warnings.push_back("grid too coarse for a half-resolution error estimate");
    }
    if (r.quadrature_error_estimate > options.error_tolerance)
        r.warnings.push_back("quadrature error estimate " + std::to_string(r.quadrature_error_estimate) +
                             " exceeds tolerance");

    r.per_block_mass.assign(partition.block_count(), 0.0);
    const double total = pop.total_participation();
    for (std::size_t i = 0; i < pop.appliances.size(); ++i)
        for (const auto& t : pop.appliances[i].transitions)
            r.per_block_mass[partition.block_of(i)] += t.participation / total;

    std::size_t unsupported = 0;
    for (std::size_t i = 0; i < r.alpha_grid.size(); ++i)
        if (!(r.mixture_density[i] > kEpsilonFloor)) ++unsupported;
    if (unsupported == r.alpha_grid.size()) r.warnings.push_back("mixture density vanishes on the whole grid");
    return r;
}

DdmReport ddm_single(const AppliancePopulation& pop, const DdmOptions& options)
{
    return ddm_partitioned(pop, Partition::single_block(pop.size()), options);
}

MonteCarloEstimate ddm_monte_carlo_oracle(const AppliancePopulation& pop, const Partition& partition,
                                          std::size_t samples, std::uint64_t seed, double log_base)
{
    if (samples < kMinOracleSamples) throw Error("Monte-Carlo oracle needs at least 10^4 samples");
    const auto labels = transition_blocks(pop, partition);
    const auto flat = pop.flatten();

    std::vector<double> weights;
    std::vector<EmpiricalSampler> samplers;
    std::vector<int> sampler_of(flat.size(), -1);
    for (std::size_t t = 0; t < flat.size(); ++t) {
        weights.push_back(flat[t].second->participation);
        if (const auto* e = std::get_if<Empirical>(&flat[t].second->distribution)) {
            sampler_of[t] = static_cast<int>(samplers.size());
            samplers.emplace_back(*e);
        }
    }

    const double ln_base = std::log(log_base);
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);

    // Welford running mean and variance.
    double mean = 0.0, m2 = 0.0;
    std::vector<double> p;
    for (std::size_t n = 1; n <= samples; ++n) {
        const std::size_t t = pick(rng);
        double alpha;
        if (sampler_of[t] >= 0) {
            alpha = samplers[static_cast<std::size_t>(sampler_of[t])](rng);
        } else {
            const auto& g = std::get<Gaussian>(flat[t].second->distribution);
            alpha = g.mean + g.stddev * normal(rng);
        }
        weighted_densities(pop, alpha, p);
        const double e = normalise(p) ? block_weighted_entropy(p, labels, partition.block_count()) / ln_base : 0.0;
        const double d = e - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (e - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

}  // namespace ddmkit
