#include "ddmkit/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace ddmkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double trapezoid(const std::vector<double>& x, const std::vector<double>& y)
{
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return sum;
}

}  // namespace

double pdf(const PowerDistribution& dist, double x)
{
    return std::visit(overloaded{
                          [x](const Gaussian& g) {
                              const double z = (x - g.mean) / g.stddev;
                              return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * g.stddev);
                          },
                          [x](const Empirical& e) {
                              if (e.grid.empty() || x < e.grid.front() || x > e.grid.back()) return 0.0;
                              auto it = std::upper_bound(e.grid.begin(), e.grid.end(), x);
                              if (it == e.grid.end()) return e.density.back();
                              const auto hi = static_cast<std::size_t>(it - e.grid.begin());
                              const std::size_t lo = hi - 1;
                              const double t = (x - e.grid[lo]) / (e.grid[hi] - e.grid[lo]);
                              return e.density[lo] + t * (e.density[hi] - e.density[lo]);
                          },
                      },
                      dist);
}

double distribution_mean(const PowerDistribution& dist)
{
    return std::visit(overloaded{
                          [](const Gaussian& g) { return g.mean; },
                          [](const Empirical& e) {
                              // Exact mean of the piecewise-linear interpolant.
                              double m = 0.0;
                              for (std::size_t i = 1; i < e.grid.size(); ++i) {
                                  const double a = e.grid[i - 1], b = e.grid[i];
                                  const double fa = e.density[i - 1], fb = e.density[i];
                                  m += (b - a) * (fa * (2 * a + b) + fb * (a + 2 * b)) / 6.0;
                              }
                              return m;
                          },
                      },
                      dist);
}

std::pair<double, double> support(const PowerDistribution& dist)
{
    return std::visit(overloaded{
                          [](const Gaussian& g) {
                              return std::pair{g.mean - 8.0 * g.stddev, g.mean + 8.0 * g.stddev};
                          },
                          [](const Empirical& e) {
                              const double pad = e.grid.size() > 1 ? e.grid[1] - e.grid[0] : 1.0;
                              return std::pair{e.grid.front() - pad, e.grid.back() + pad};
                          },
                      },
                      dist);
}

std::string check_distribution(const PowerDistribution& dist)
{
    return std::visit(
        overloaded{
            [](const Gaussian& g) -> std::string {
                if (!std::isfinite(g.mean)) return "gaussian mean not finite";
                if (!(g.stddev > 0.0) || !std::isfinite(g.stddev)) return "gaussian std must be > 0";
                return {};
            },
            [](const Empirical& e) -> std::string {
                if (e.grid.size() < 2) return "empirical grid needs at least 2 points";
                if (e.grid.size() != e.density.size()) return "empirical grid and density lengths differ";
                for (std::size_t i = 1; i < e.grid.size(); ++i)
                    if (!(e.grid[i] > e.grid[i - 1])) return "empirical grid not strictly ascending";
                for (double d : e.density)
                    if (!(d >= 0.0) || !std::isfinite(d)) return "empirical density negative or not finite";
                const double mass = trapezoid(e.grid, e.density);
                if (std::abs(mass - 1.0) > kStrictTolerance) {
                    std::ostringstream os;
                    os << "empirical density integrates to " << mass << ", not 1";
                    return os.str();
                }
                return {};
            },
        },
        dist);
}

std::size_t AppliancePopulation::transition_count() const
{
    std::size_t n = 0;
    for (const auto& a : appliances) n += a.transitions.size();
    return n;
}

double AppliancePopulation::total_participation() const
{
    double sum = 0.0;
    for (const auto& a : appliances)
        for (const auto& t : a.transitions) sum += t.participation;
    return sum;
}

std::vector<std::pair<std::size_t, const TransitionModel*>> AppliancePopulation::flatten() const
{
    std::vector<std::pair<std::size_t, const TransitionModel*>> out;
    out.reserve(transition_count());
    for (std::size_t i = 0; i < appliances.size(); ++i)
        for (const auto& t : appliances[i].transitions) out.emplace_back(i, &t);
    return out;
}

std::vector<Violation> validate_population(const AppliancePopulation& pop, double tolerance)
{
    std::vector<Violation> out;
    if (pop.appliances.empty()) out.push_back({"appliances", "population has no appliances"});

    std::set<std::string> seen;
    for (const auto& a : pop.appliances) {
        const std::string where = "appliances[" + a.id + "]";
        if (!seen.insert(a.id).second) out.push_back({where + ".id", "duplicate appliance id"});
        if (a.transitions.empty()) out.push_back({where + ".transitions", "appliance has no transitions"});
        for (const auto& t : a.transitions) {
            const std::string tw = where + ".transitions[" + std::to_string(t.transition_id) + "]";
            if (!(t.participation >= 0.0 && t.participation <= 1.0))
                out.push_back({tw + ".pi", "participation out of [0,1]: " + std::to_string(t.participation)});
            if (auto msg = check_distribution(t.distribution); !msg.empty()) out.push_back({tw + ".dist", msg});
        }
    }

    const double total = pop.total_participation();
    if (std::abs(total - 1.0) > tolerance) {
        std::ostringstream os;
        os << "participation sums to " << total << ", outside 1 +/- " << tolerance;
        out.push_back({"pi", os.str()});
    }
    return out;
}

AppliancePopulation renormalize_participation(const AppliancePopulation& pop)
{
    const double total = pop.total_participation();
    if (!(total > 0.0)) throw Error("degenerate population: total participation is zero");
    AppliancePopulation out = pop;
    for (auto& a : out.appliances)
        for (auto& t : a.transitions) t.participation /= total;
    return out;
}

EventRecord EventRecord::make(std::size_t index, double delta)
{
    return {index, delta, std::abs(delta)};
}

bool is_restricted_growth(const std::vector<std::uint8_t>& code)
{
    if (code.empty() || code[0] != 0) return false;
    int max_seen = 0;
    for (std::size_t k = 1; k < code.size(); ++k) {
        if (code[k] > max_seen + 1) return false;
        max_seen = std::max<int>(max_seen, code[k]);
    }
    return true;
}

Partition::Partition(std::vector<std::uint8_t> code) : code_(std::move(code))
{
    if (!is_restricted_growth(code_)) throw Error("partition code is not a restricted-growth string");
    blocks_ = 1 + *std::max_element(code_.begin(), code_.end());
}

Partition Partition::single_block(std::size_t n)
{
    return Partition(std::vector<std::uint8_t>(n, 0));
}

Partition Partition::singletons(std::size_t n)
{
    std::vector<std::uint8_t> code(n);
    for (std::size_t i = 0; i < n; ++i) code[i] = static_cast<std::uint8_t>(i);
    return Partition(std::move(code));
}

Partition Partition::from_blocks(const std::vector<std::vector<std::size_t>>& blocks, std::size_t n)
{
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(n, unset);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].empty()) throw Error("partition block is empty");
        for (std::size_t i : blocks[b]) {
            if (i >= n) throw Error("appliance index " + std::to_string(i + 1) + " out of range");
            if (label[i] != unset) throw Error("appliance " + std::to_string(i + 1) + " appears in two blocks");
            label[i] = b;
        }
    }
    // Relabel blocks by first occurrence to obtain the canonical string.
    std::vector<std::size_t> remap(blocks.size(), unset);
    std::vector<std::uint8_t> code(n);
    std::uint8_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] == unset) throw Error("appliance " + std::to_string(i + 1) + " not assigned to a block");
        if (remap[label[i]] == unset) remap[label[i]] = next++;
        code[i] = static_cast<std::uint8_t>(remap[label[i]]);
    }
    return Partition(std::move(code));
}

Partition Partition::parse(const std::string& text, std::size_t n)
{
    std::vector<std::vector<std::size_t>> blocks(1);
    std::string token;
    auto flush = [&] {
        if (token.empty()) throw Error("malformed partition '" + text + "'");
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(token, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != token.size() || v < 1) throw Error("bad appliance index '" + token + "' in partition");
        blocks.back().push_back(static_cast<std::size_t>(v - 1));
        token.clear();
    };
    for (char c : text) {
        if (c == ' ') continue;
        if (c == ',') {
            flush();
        } else if (c == '|') {
            flush();
            blocks.emplace_back();
        } else {
            token += c;
        }
    }
    flush();
    return from_blocks(blocks, n);
}

std::vector<std::vector<std::size_t>> Partition::blocks() const
{
    std::vector<std::vector<std::size_t>> out(blocks_);
    for (std::size_t i = 0; i < code_.size(); ++i) out[code_[i]].push_back(i);
    return out;
}

bool Partition::refines(const Partition& other) const
{
    if (other.size() != size()) return false;
    // Each of our blocks must map to a single block of other.
    std::vector<int> target(blocks_, -1);
    for (std::size_t i = 0; i < code_.size(); ++i) {
        int& t = target[code_[i]];
        if (t < 0) t = other.code_[i];
        else if (t != other.code_[i]) return false;
    }
    return true;
}

std::string Partition::code_string() const
{
    std::string s;
    for (auto c : code_) s += static_cast<char>(c < 10 ? '0' + c : 'a' + (c - 10));
    return s;
}

std::string Partition::to_string() const
{
    std::string s;
    for (const auto& block : blocks()) {
        if (!s.empty()) s += '|';
        for (std::size_t k = 0; k < block.size(); ++k) {
            if (k) s += ',';
            s += std::to_string(block[k] + 1);
        }
    }
    return s;
}

}  // namespace ddmkit
