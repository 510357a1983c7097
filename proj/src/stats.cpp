#include "nonstat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nonstat {

double SwitchCountPmf::total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

double SwitchCountPmf::mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) s += static_cast<double>(k) * probs[k];
    return s;
}

namespace {

template <typename Step>
SwitchCountPmf run_recursion(unsigned depth, std::size_t k_max, Step step) {
    std::vector<double> prev(k_max + 1, 0.0), next(k_max + 1, 0.0);
    prev[0] = 1.0;
    for (unsigned d = 1; d <= depth; ++d) {
        for (std::size_t k = 0; k <= k_max; ++k) next[k] = step(prev, k);
        std::swap(prev, next);
    }
    return SwitchCountPmf{depth, false, std::move(prev)};
}

}  // namespace

SwitchCountPmf ptw_switch_count_pmf(unsigned depth, std::size_t k_max) {
    return run_recursion(depth, k_max, [](const std::vector<double> &p, std::size_t k) {
        double conv = 0.0;
        for (std::size_t l = 1; l <= k; ++l) conv += p[k - l] * p[l - 1];
        return (k == 0 ? 0.5 : 0.0) + 0.5 * conv;
    });
}

SwitchCountPmf ptw_switch_count_pmf_as_printed(unsigned depth, std::size_t k_max) {
    return run_recursion(depth, k_max, [](const std::vector<double> &p, std::size_t k) {
        double conv = 0.0;
        for (std::size_t l = 1; l + 1 <= k; ++l) conv += p[k - l] * p[l - 1];
        return (k == 0 ? 0.5 : 0.0) + conv;
    });
}

double catalan(std::size_t k) {
    // C(k+1) = C(k) 2(2k+1)/(k+2)
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) c = c * 2.0 * static_cast<double>(2 * i + 1) / static_cast<double>(i + 2);
    return c;
}

double ptw_switch_count_pmf_limit(std::size_t k) {
    // C(k) 4^{-k} / 2, built incrementally to stay in range for large k
    double v = 0.5;
    for (std::size_t i = 0; i < k; ++i) v *= static_cast<double>(2 * i + 1) / (2.0 * static_cast<double>(i + 2));
    return v;
}

double expected_switches(unsigned depth, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("expected_switches: p must lie in (0,1)");
    if (p == 0.5) return depth / 2.0;
    return p * (1.0 - std::pow(2.0 * p, static_cast<double>(depth))) / (1.0 - 2.0 * p);
}

double switch_location_probability(unsigned depth, std::size_t t) {
    if (depth > 62) throw std::invalid_argument("switch_location_probability: depth too large");
    const std::size_t n = std::size_t{1} << depth;
    if (t < 1 || t >= n) throw std::invalid_argument("switch_location_probability: need 1 <= t < 2^d");
    for (unsigned j = 1; j <= depth; ++j) {
        if (t % (std::size_t{1} << (depth - j)) == 0) return std::ldexp(1.0, -static_cast<int>(j));
    }
    throw std::logic_error("switch_location_probability: unreachable");
}

SwitchHistograms empirical_switch_stats(const std::vector<TemporalPartition> &partitions) {
    if (partitions.empty()) throw std::invalid_argument("empirical_switch_stats: no partitions");
    SwitchHistograms h;
    h.n = partitions.front().length();
    h.num_partitions = partitions.size();
    h.locations.assign(h.n > 0 ? h.n - 1 : 0, 0.0);
    h.counts.assign(1, 0.0);
    for (const TemporalPartition &p : partitions) {
        if (p.length() != h.n) throw std::invalid_argument("empirical_switch_stats: partitions differ in length");
        std::size_t k = p.num_switches();
        if (k >= h.counts.size()) h.counts.resize(k + 1, 0.0);
        h.counts[k] += 1.0;
        h.mean_switches += static_cast<double>(k);
        for (std::size_t b : p.boundaries()) h.locations[b - 1] += 1.0;
    }
    const double total = static_cast<double>(partitions.size());
    for (double &c : h.counts) c /= total;
    for (double &c : h.locations) c /= total;
    h.mean_switches /= total;
    return h;
}

double total_variation(const std::vector<double> &p, const std::vector<double> &q) {
    const std::size_t n = std::max(p.size(), q.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = i < p.size() ? p[i] : 0.0;
        double b = i < q.size() ? q[i] : 0.0;
        s += std::abs(a - b);
    }
    return 0.5 * s;
}

}  // namespace nonstat
