#include "ddmkit/partition_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace ddmkit {

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// All partitions obtained by splitting one block of p into two.
std::vector<Partition> one_step_refinements(const Partition& p)
{
    std::vector<Partition> out;
    const auto blocks = p.blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& block = blocks[b];
        if (block.size() < 2 || block.size() > 20) continue;
        const std::size_t rest = block.size() - 1;
        for (std::size_t mask = 1; mask < (std::size_t{1} << rest); ++mask) {
            auto split = blocks;
            split[b] = {block[0]};
            std::vector<std::size_t> moved;
            for (std::size_t k = 0; k < rest; ++k) (mask >> k & 1 ? moved : split[b]).push_back(block[k + 1]);
            split.push_back(std::move(moved));
            out.push_back(Partition::from_blocks(split, p.size()));
        }
    }
    return out;
}

std::vector<double> evaluate_all(const DdmEvaluator& evaluator, const std::vector<Partition>& parts,
                                 std::size_t threads)
{
    std::vector<double> values(parts.size());
    threads = std::max<std::size_t>(1, std::min(threads, parts.size()));
    if (threads == 1) {
        for (std::size_t i = 0; i < parts.size(); ++i) values[i] = evaluator.ddm(parts[i]);
        return values;
    }
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w)
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < parts.size(); i += threads) values[i] = evaluator.ddm(parts[i]);
        });
    return values;
}

}  // namespace

bool ConstraintSet::admits(const Partition& partition) const
{
    for (auto [a, b] : must_link)
        if (partition.block_of(a) != partition.block_of(b)) return false;
    for (auto [a, b] : cannot_link)
        if (partition.block_of(a) == partition.block_of(b)) return false;
    return !max_meters || partition.block_count() <= *max_meters;
}

void check_feasible(const ConstraintSet& constraints, std::size_t n)
{
    auto check_index = [n](std::size_t i) {
        if (i >= n) throw Error("constraint refers to appliance " + std::to_string(i + 1) + " of " + std::to_string(n));
    };
    DisjointSets sets(n);
    for (auto [a, b] : constraints.must_link) {
        check_index(a);
        check_index(b);
        sets.unite(a, b);
    }
    for (auto [a, b] : constraints.cannot_link) {
        check_index(a);
        check_index(b);
        if (sets.find(a) == sets.find(b))
            throw Error("infeasible constraints: appliances " + std::to_string(a + 1) + " and " +
                        std::to_string(b + 1) + " are both linked and separated");
    }
    if (constraints.max_meters && *constraints.max_meters == 0) throw Error("max_meters must be >= 1");
}

std::uint64_t bell_number(std::size_t n)
{
    if (n > 25) throw Error("Bell number overflows 64 bits beyond n = 25");
    std::vector<std::uint64_t> row{1};
    for (std::size_t i = 1; i <= n; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (auto v : row) next.push_back(next.back() + v);
        row = std::move(next);
    }
    return row.front();
}

PartitionStream::PartitionStream(std::size_t n, ConstraintSet constraints)
    : n_(n), constraints_(std::move(constraints)), same_as_(n), differ_from_(n), code_(n, -1), prefix_max_(n, -1)
{
    if (n == 0) throw Error("cannot partition zero appliances");
    if (n > kMaxEnumerableAppliances && !constraints_.max_meters)
        throw Error("too many appliances for exhaustive enumeration (" + std::to_string(n) + " > " +
                    std::to_string(kMaxEnumerableAppliances) + "); bound the meter count with max_meters");
    check_feasible(constraints_, n);
    label_limit_ = std::min<std::size_t>(constraints_.max_meters.value_or(n), n);
    label_limit_ = std::min<std::size_t>(label_limit_, 255);
    for (auto [a, b] : constraints_.must_link) {
        if (a == b) continue;
        same_as_[std::max(a, b)].push_back(std::min(a, b));
    }
    for (auto [a, b] : constraints_.cannot_link) {
        if (a == b) continue;
        differ_from_[std::max(a, b)].push_back(std::min(a, b));
    }
}

bool PartitionStream::consistent(std::size_t pos) const
{
    for (auto j : same_as_[pos])
        if (code_[j] != code_[pos]) return false;
    for (auto j : differ_from_[pos])
        if (code_[j] == code_[pos]) return false;
    return true;
}

bool PartitionStream::next(Partition& out)
{
    const auto last = static_cast<std::ptrdiff_t>(n_) - 1;
    while (!done_) {
        if (pos_ < 0) {
            done_ = true;
            break;
        }
        const auto p = static_cast<std::size_t>(pos_);
        const int limit = p == 0 ? 0 : std::min(prefix_max_[p - 1] + 1, static_cast<int>(label_limit_) - 1);
        if (++code_[p] > limit) {
            code_[p] = -1;
            --pos_;
            continue;
        }
        if (!consistent(p)) continue;
        prefix_max_[p] = p == 0 ? code_[p] : std::max(prefix_max_[p - 1], code_[p]);
        if (pos_ == last) {
            out = Partition(std::vector<std::uint8_t>(code_.begin(), code_.end()));
            return true;
        }
        ++pos_;
    }
    return false;
}

std::vector<Partition> enumerate_partitions(std::size_t n, const ConstraintSet& constraints)
{
    PartitionStream stream(n, constraints);
    std::vector<Partition> out;
    Partition p;
    while (stream.next(p)) out.push_back(p);
    return out;
}

OptimizeResult optimize(const AppliancePopulation& pop, const ConstraintSet& constraints,
                        const OptimizeOptions& options)
{
    if (auto v = validate_population(pop); !v.empty()) throw Error("invalid population: " + v.front().message);
    const auto parts = enumerate_partitions(pop.size(), constraints);
    if (parts.empty()) throw Error("no partition satisfies the constraints");

    const DdmEvaluator evaluator(pop, AlphaGrid::cover(pop, options.ddm.grid_intervals));
    const double ln_base = std::log(options.ddm.log_base);

    OptimizeResult result;
    std::vector<double> values(parts.size(), std::numeric_limits<double>::quiet_NaN());
    if (!options.prune) {
        values = evaluate_all(evaluator, parts, options.threads);
        result.evaluated = parts.size();
    } else {
        // Finest partitions first so every refinement is known before its coarsenings.
        std::unordered_map<std::string, double> lower_bound;
        std::vector<std::size_t> order(parts.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return parts[a].block_count() > parts[b].block_count(); });
        std::vector<double> incumbent(pop.size() + 1, std::numeric_limits<double>::infinity());
        for (auto idx : order) {
            const auto& p = parts[idx];
            double bound = 0.0;
            for (const auto& r : one_step_refinements(p))
                if (auto it = lower_bound.find(r.code_string()); it != lower_bound.end())
                    bound = std::max(bound, it->second);
            if (bound > incumbent[p.block_count()]) {
                lower_bound[p.code_string()] = bound;
                ++result.skipped;
                continue;
            }
            values[idx] = evaluator.ddm(p);
            ++result.evaluated;
            lower_bound[p.code_string()] = values[idx];
            incumbent[p.block_count()] = std::min(incumbent[p.block_count()], values[idx]);
        }
    }

    std::vector<std::optional<TradeoffRow>> best(pop.size() + 1);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (std::isnan(values[i])) continue;
        const double ddm = values[i] / ln_base;
        result.landscape.push_back({parts[i], ddm});
        const std::size_t b = parts[i].block_count();
        // Enumeration is lexicographic, so strict improvement keeps the smallest code on ties.
        if (!best[b] || ddm < best[b]->min_ddm)
            best[b] = TradeoffRow{b, ddm, parts[i], static_cast<double>(b) * options.unit_cost};
    }
    for (auto& row : best)
        if (row) result.rows.push_back(std::move(*row));
    return result;
}

std::size_t knee_recommendation(const std::vector<TradeoffRow>& rows, double epsilon)
{
    if (rows.empty()) throw Error("no trade-off rows");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) best = std::min(best, r.min_ddm);
    const double scale = std::max(rows.front().min_ddm, 1e-12);
    for (const auto& r : rows)
        if (r.min_ddm - best <= epsilon * scale) return r.meters;
    return rows.back().meters;
}

}  // namespace ddmkit
