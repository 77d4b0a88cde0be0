// Fixtures and generators shared by the unit, integration and acceptance suites.
#pragma once

#include "ddmkit/core_model.hpp"
#include "ddmkit/signal_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ddmkit::testing {

struct TransitionSpec {
    std::size_t appliance;
    double mean;
    double stddev;
    double pi;
};

inline AppliancePopulation make_population(const std::vector<TransitionSpec>& specs,
                                           const std::vector<std::string>& ids)
{
    AppliancePopulation pop;
    for (const auto& id : ids) pop.appliances.push_back({id, {}});
    for (const auto& s : specs) {
        auto& app = pop.appliances[s.appliance];
        TransitionModel t;
        t.appliance_id = app.id;
        t.transition_id = static_cast<int>(app.transitions.size() + 1);
        t.distribution = Gaussian{s.mean, s.stddev};
        t.participation = s.pi;
        app.transitions.push_back(t);
    }
    return pop;
}

// Three appliances, five transitions; participation as printed (sums to 0.998).
inline std::vector<TransitionSpec> table1_specs()
{
    return {{0, 210, 10, 0.193}, {0, 400, 20, 0.096}, {1, 220, 12, 0.322}, {1, 1080, 30, 0.258}, {2, 1100, 40, 0.129}};
}

inline AppliancePopulation table1_raw()
{
    return make_population(table1_specs(), {"1", "2", "3"});
}

inline AppliancePopulation table1()
{
    return renormalize_participation(table1_raw());
}

// Seven-appliance low-frequency household (dishwasher, fridge, washer/dryer,
// microwave, kitchen outlets, oven, bathroom GFI).
inline std::vector<TransitionSpec> redd_specs()
{
    return {{0, 200, 10, 0.1460},  {0, 400, 20, 0.0243},  {0, 1000, 50, 0.0609}, {1, 200, 20, 0.2705},
            {1, 400, 40, 0.0845},  {2, 2800, 37, 0.0372}, {3, 1500, 10, 0.2272}, {4, 1070, 32, 0.0811},
            {5, 4142, 27, 0.0426}, {6, 1600, 12, 0.0257}};
}

inline AppliancePopulation redd_fixture()
{
    return make_population(redd_specs(), {"DW", "RFG", "WD", "MW", "KO", "OV", "BGFI"});
}

// Frozen reference values from an independent fine-grid trapezoid evaluation
// (800001 nodes) of the mixture-entropy integral, in nats.
inline constexpr double kTable1SingleNats = 0.5214405218407301;
inline constexpr double kTable1Split1Nats = 0.2265953701338612;  // {1},{2,3}
inline constexpr double kTable1Split2Nats = 9.655510255826345e-11;  // {2},{1,3}
inline constexpr double kTable1Split3Nats = 0.2948451518034242;  // {3},{1,2}
inline constexpr double kTable1IlmNats = 9.655510255826345e-11;
inline constexpr double kReddSingleNats = 0.3458216992597719;

/// Random population: `apps` appliances with 1..3 transitions each,
/// mean in [50, 4000], std in [5, 60], participation normalised.
inline AppliancePopulation random_population(std::mt19937_64& rng, std::size_t min_apps = 2, std::size_t max_apps = 7)
{
    std::uniform_int_distribution<std::size_t> napps(min_apps, max_apps), ntr(1, 3);
    std::uniform_real_distribution<double> mean(50, 4000), sd(5, 60), weight(0.05, 1.0);
    std::vector<TransitionSpec> specs;
    std::vector<std::string> ids;
    const std::size_t n = napps(rng);
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        ids.push_back("a" + std::to_string(a + 1));
        const std::size_t t = ntr(rng);
        for (std::size_t j = 0; j < t; ++j) {
            specs.push_back({a, mean(rng), sd(rng), weight(rng)});
            total += specs.back().pi;
        }
    }
    for (auto& s : specs) s.pi /= total;
    return make_population(specs, ids);
}

inline Partition random_partition(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<std::size_t> blocks(1, n);
    std::uniform_int_distribution<std::size_t> label(0, blocks(rng) - 1);
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[label(rng)].push_back(i);
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    return Partition::from_blocks(groups, n);
}

/// Splits every block of `coarse` at random; the result refines `coarse`.
inline Partition random_refinement(std::mt19937_64& rng, const Partition& coarse)
{
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& block : coarse.blocks()) {
        std::uniform_int_distribution<std::size_t> pieces(1, block.size());
        std::uniform_int_distribution<std::size_t> label(0, pieces(rng) - 1);
        std::vector<std::vector<std::size_t>> sub(block.size());
        for (auto i : block) sub[label(rng)].push_back(i);
        for (auto& s : sub)
            if (!s.empty()) groups.push_back(std::move(s));
    }
    return Partition::from_blocks(groups, coarse.size());
}

/// Per-appliance signals built from ON/OFF activations. Transition j of an
/// appliance is activated round(pi * activations) times at a level drawn
/// from N(mean, std); each activation yields one ON and one OFF event.
inline std::vector<PowerSignal> synthesize_signals(const std::vector<TransitionSpec>& specs,
                                                   const std::vector<std::string>& ids, std::size_t activations,
                                                   std::uint64_t seed, double noise = 0.5)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> hold(3, 8);
    std::normal_distribution<double> jitter(0.0, noise);
    std::vector<PowerSignal> out;
    for (std::size_t a = 0; a < ids.size(); ++a) {
        std::vector<std::pair<double, double>> plan;  // (mean, std) per activation
        for (const auto& s : specs)
            if (s.appliance == a) {
                const auto count = static_cast<std::size_t>(std::llround(s.pi * static_cast<double>(activations)));
                plan.insert(plan.end(), count, {s.mean, s.stddev});
            }
        std::shuffle(plan.begin(), plan.end(), rng);
        PowerSignal sig;
        sig.appliance_id = ids[a];
        sig.sample_period = 3.0;
        sig.samples.assign(4, 0.0);
        for (auto [mu, sd] : plan) {
            std::normal_distribution<double> level(mu, sd);
            const double x = level(rng);
            for (int k = hold(rng); k > 0; --k) sig.samples.push_back(x + jitter(rng));
            for (int k = hold(rng); k > 0; --k) sig.samples.push_back(0.0);
        }
        out.push_back(std::move(sig));
    }
    return out;
}

}  // namespace ddmkit::testing
