#pragma once

#include <iosfwd>
#include <vector>

#include "sglab/spectral.hpp"

namespace sglab {

/// k/l < r_{t_k} / r_{t_{k-1}} < l k for one block index k >= 2.
struct RatioCert
{
    int k;
    double lower;
    double ratio;
    double upper;
    bool pass;
};

/**
 * Factorial block boundaries t_k = min{ j : r_j >= k! }, k = 1, 2, ...
 * `l_const` is the measured sup_n r_n / r_{n-1}. t is strictly increasing
 * whenever r_n / r_{n-1} < k for the thresholds crossed; a larger jump makes
 * consecutive t_k coincide (empty block).
 */
struct BlockSchedule
{
    std::vector<long> t; ///< t[0] = t_1
    double l_const = 1.0;
    std::vector<RatioCert> ratio_certs;

    int max_k() const { return static_cast<int>(t.size()); }
    /// t_k for k >= 1; throws InsufficientHorizon past the horizon.
    long t_at(int k) const;
    /// Throws InsufficientHorizon unless t_1 .. t_k all exist.
    void require(int k) const;
};

/// log k!, via lgamma.
double log_factorial(int k);
/// k! as a double; exact for k <= 20.
double factorial_exact(int k);

/// Throws DomainError if rs is empty, starts below 1 or decreases.
BlockSchedule factorial_schedule(const Vector& rs);

/// Certificates for every k >= 2 present in the schedule; never throws.
std::vector<RatioCert> verify_ratio(const BlockSchedule& sched, const Vector& rs);

/// CSV columns: k, t_k, r_t_k, ratio, pass.
void write_schedule_csv(std::ostream& os, const BlockSchedule& sched, const Vector& rs);

} // namespace sglab
