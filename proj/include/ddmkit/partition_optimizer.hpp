#pragma once

#include "ddmkit/core_model.hpp"
#include "ddmkit/ddm_engine.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace ddmkit {

inline constexpr std::size_t kMaxEnumerableAppliances = 15;

/// Wiring constraints on which appliances may share a meter. Indices are 0-based.
struct ConstraintSet {
    std::vector<std::pair<std::size_t, std::size_t>> must_link;
    std::vector<std::pair<std::size_t, std::size_t>> cannot_link;
    std::optional<std::size_t> max_meters;

    bool admits(const Partition& partition) const;
};

/// Throws when the must-link closure puts a cannot-link pair together,
/// an index is out of range, or max_meters is zero.
void check_feasible(const ConstraintSet& constraints, std::size_t n);

/// B_n via the Bell triangle; exact up to n = 25.
std::uint64_t bell_number(std::size_t n);

/// Lazily enumerates constraint-respecting partitions of n appliances in
/// lexicographic restricted-growth-string order.
class PartitionStream {
public:
    PartitionStream(std::size_t n, ConstraintSet constraints = {});

    /// Advances to the next partition; false once exhausted.
    bool next(Partition& out);

private:
    bool consistent(std::size_t pos) const;

    std::size_t n_;
    ConstraintSet constraints_;
    std::size_t label_limit_;
    std::vector<std::vector<std::size_t>> same_as_;
    std::vector<std::vector<std::size_t>> differ_from_;
    std::vector<int> code_;
    std::vector<int> prefix_max_;
    std::ptrdiff_t pos_ = 0;
    bool done_ = false;
};

std::vector<Partition> enumerate_partitions(std::size_t n, const ConstraintSet& constraints = {});

struct TradeoffRow {
    std::size_t meters = 0;
    double min_ddm = 0.0;
    Partition argmin;
    double cost = 0.0;
};

struct LandscapeRow {
    Partition partition;
    double ddm = 0.0;
};

struct OptimizeOptions {
    double unit_cost = 200.0;
    /// Skip partitions whose refinement lower bound already exceeds the
    /// incumbent for their meter count. The landscape then omits them.
    bool prune = false;
    std::size_t threads = 1;
    DdmOptions ddm;
};

struct OptimizeResult {
    std::vector<TradeoffRow> rows;
    std::vector<LandscapeRow> landscape;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

OptimizeResult optimize(const AppliancePopulation& pop, const ConstraintSet& constraints = {},
                        const OptimizeOptions& options = {});

/// Smallest meter count whose minimum DDM is within epsilon * DDM(1 meter)
/// of the best achievable DDM.
std::size_t knee_recommendation(const std::vector<TradeoffRow>& rows, double epsilon = 0.05);

}  // namespace ddmkit
