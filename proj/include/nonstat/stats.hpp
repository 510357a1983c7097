#pragma once

#include "nonstat/core.hpp"

#include <cstddef>
#include <vector>

namespace nonstat {

// Pr(k switching-points), k = 0..probs.size()-1, under the PTW_d prior
struct SwitchCountPmf {
    unsigned depth = 0;
    bool limit = false;  // d -> infinity
    std::vector<double> probs;

    double operator[](std::size_t k) const { return k < probs.size() ? probs[k] : 0.0; }
    double total() const;
    double mean() const;
};

/* P_0[k] = [k == 0];
   P_d[k] = 1/2 [k == 0] + 1/2 sum_{l=1}^{k} P_{d-1}[k-l] P_{d-1}[l-1].
   A split contributes one switching-point plus those of both halves. */
SwitchCountPmf ptw_switch_count_pmf(unsigned depth, std::size_t k_max);

// the recursion exactly as typeset in the appendix (upper limit k-1, no 1/2
// on the convolution); kept only to document that it disagrees with the
// closed form
SwitchCountPmf ptw_switch_count_pmf_as_printed(unsigned depth, std::size_t k_max);

// Catalan(k) 2^{-2k-1}, the d -> infinity limit
double ptw_switch_count_pmf_limit(std::size_t k);

double catalan(std::size_t k);

// p (1 - (2p)^d) / (1 - 2p); d/2 at p = 1/2
double expected_switches(unsigned depth, double p);

// Pr(a segment boundary falls between t and t+1) under PTW_d, 1 <= t < 2^d
double switch_location_probability(unsigned depth, std::size_t t);

struct SwitchHistograms {
    std::size_t n = 0;
    std::size_t num_partitions = 0;
    // fraction of partitions with exactly k switching-points
    std::vector<double> counts;
    // locations[t-1]: fraction of partitions with a boundary after time t, t = 1..n-1
    std::vector<double> locations;
    double mean_switches = 0.0;
};

// all partitions must share the same length
SwitchHistograms empirical_switch_stats(const std::vector<TemporalPartition> &partitions);

// total variation distance; missing entries count as zero
double total_variation(const std::vector<double> &p, const std::vector<double> &q);

}  // namespace nonstat
