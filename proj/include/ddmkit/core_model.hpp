#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <compare>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ddmkit {

/// Data errors (bad input, degenerate populations, malformed files).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Piecewise-linear density sampled on an ascending grid; zero outside it.
struct Empirical {
    std::vector<double> grid;
    std::vector<double> density;
};

using PowerDistribution = std::variant<Gaussian, Empirical>;

double pdf(const PowerDistribution& dist, double x);
double distribution_mean(const PowerDistribution& dist);
/// Support interval used to size quadrature grids: mean +/- 8 sigma for
/// Gaussians, the grid padded by one spacing for empirical densities.
std::pair<double, double> support(const PowerDistribution& dist);
/// Returns the empty string when the distribution is well formed.
std::string check_distribution(const PowerDistribution& dist);

struct TransitionModel {
    std::string appliance_id;
    int transition_id = 1;
    PowerDistribution distribution;
    double participation = 0.0;
};

struct Appliance {
    std::string id;
    std::vector<TransitionModel> transitions;
};

struct AppliancePopulation {
    std::vector<Appliance> appliances;

    std::size_t size() const { return appliances.size(); }
    std::size_t transition_count() const;
    double total_participation() const;
    /// Transitions flattened in appliance order, with the owning appliance index.
    std::vector<std::pair<std::size_t, const TransitionModel*>> flatten() const;
};

struct Violation {
    std::string field;
    std::string message;
};

inline constexpr double kStrictTolerance = 1e-6;
/// Tolerance for populations transcribed from rounded tables.
inline constexpr double kFileTolerance = 5e-3;

std::vector<Violation> validate_population(const AppliancePopulation& pop,
                                           double tolerance = kStrictTolerance);
AppliancePopulation renormalize_participation(const AppliancePopulation& pop);

struct EventRecord {
    std::size_t sample_index = 0;
    double delta_watts = 0.0;
    double magnitude_watts = 0.0;

    static EventRecord make(std::size_t index, double delta);
};

/// Assignment of N appliances to blocks, stored as a restricted-growth string.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<std::uint8_t> code);

    static Partition single_block(std::size_t n);
    static Partition singletons(std::size_t n);
    /// Blocks are lists of 0-based appliance indices; order is irrelevant.
    static Partition from_blocks(const std::vector<std::vector<std::size_t>>& blocks, std::size_t n);
    /// "1|2,3" with 1-based appliance indices.
    static Partition parse(const std::string& text, std::size_t n);

    const std::vector<std::uint8_t>& code() const { return code_; }
    std::size_t size() const { return code_.size(); }
    std::size_t block_count() const { return blocks_; }
    std::size_t block_of(std::size_t appliance) const { return code_[appliance]; }
    std::vector<std::vector<std::size_t>> blocks() const;

    /// True when every block of *this lies inside a block of other.
    bool refines(const Partition& other) const;

    std::string code_string() const;
    std::string to_string() const;

    friend bool operator==(const Partition&, const Partition&) = default;
    friend auto operator<=>(const Partition& a, const Partition& b) { return a.code_ <=> b.code_; }

private:
    std::vector<std::uint8_t> code_;
    std::size_t blocks_ = 0;
};

bool is_restricted_growth(const std::vector<std::uint8_t>& code);

struct DdmReport {
    double ddm = 0.0;
    double log_base = 0.0;
    std::vector<double> per_block_mass;
    std::vector<double> alpha_grid;
    std::vector<double> mixture_density;
    std::vector<double> e_alpha;
    double quadrature_error_estimate = 0.0;
    std::vector<std::string> warnings;
};

}  // namespace ddmkit
