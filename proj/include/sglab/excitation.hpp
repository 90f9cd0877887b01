#pragma once

#include <iosfwd>
#include <vector>

#include "sglab/model.hpp"
#include "sglab/spectral.hpp"

namespace sglab {

enum class ExcitationMode
{
    DirectRegressor,
    InputDriven, ///< reserved; rejected by the designers
};

struct ExcitationSpec
{
    int dim = 2;
    double alpha = 0.0;
    double step_energy = 1.0;
    long horizon = 100000;
    ExcitationMode mode = ExcitationMode::DirectRegressor;
    /// Share of the energy budget given to the weak directions before the
    /// (log r_n)^-alpha scaling.
    double beta = 0.5;

    void validate() const;
};

struct AllocatorAudit
{
    long fallback_steps = 0;
    long last_fallback_n = -1;
    /// Largest |target - energy| seen on a feasible step.
    double max_abs_deficit = 0.0;
};

/// Columns phi_0 .. phi_N; phi_0 is the zero initial regressor.
struct DesignedRegressors
{
    Matrix phis;
    AllocatorAudit audit;
};

/**
 * Axis-aligned closed-loop allocator. Every step feeds +-sqrt(step_energy)
 * along one coordinate axis, so S_n stays diagonal and kappa(S_n) is the
 * ratio of the directional energies. Axis 0 tracks the strong target, the
 * remaining m - 1 axes each track
 *
 *     (r_n - 1) * beta / ((m - 1) * (log r_n)^alpha)
 *
 * and the axis with the largest deficit is fed. While log r_n < 2 the
 * allocator runs round-robin instead. Signs come from `rng`.
 */
DesignedRegressors design_regressors(const ExcitationSpec& spec, Rng& rng);

/// Same allocator with a super-critical exponent; requires alpha > 1.
DesignedRegressors adversarial_regressors(const ExcitationSpec& spec, Rng& rng);

struct KappaPoint
{
    long n;
    double r;
    double kappa; ///< +inf while S_n is singular
    double ratio; ///< kappa / (log r)^alpha
};

struct KappaProfile
{
    double alpha = 0.0;
    std::vector<KappaPoint> points;

    /// Largest finite ratio over points with n >= from_n.
    double max_ratio(long from_n = 0) const;
    double min_ratio(long from_n = 0) const;
};

/// r_0 .. r_N from columns phi_0 .. phi_N (phi_0 excluded from the sum).
Vector r_sequence(const Matrix& phis);

/**
 * Samples kappa(S_n), S_n = sum_{i=1..n} phi_i phi_i^T, at every multiple of
 * `stride` and at the final index. `phis` columns are phi_0 .. phi_N.
 */
KappaProfile measure_kappa_profile(const Matrix& phis, long stride, double alpha);

/// CSV columns: n, phi0..phi{m-1}.
void write_regressors_csv(std::ostream& os, const Matrix& phis);
/// CSV columns: n, r_n, kappa, ratio.
void write_kappa_csv(std::ostream& os, const KappaProfile& profile);

} // namespace sglab
