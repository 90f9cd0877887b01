#pragma once

#include <deque>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "sglab/spectral.hpp"

namespace sglab {

/// Shape of the stacked regressor [y_n .. y_{n-p+1}, u_n .. u_{n-q+1}, w^_n .. w^_{n-r+1}].
struct RegressorLayout
{
    int d = 1;
    int l = 1;
    int p = 0;
    int q = 1;
    int r = 0;

    int dim() const { return d * p + l * q + d * r; }
};

/**
 * State of the SG identification recursion.
 *
 * `r` is r_n = 1 + sum_{i=1..n} |phi_i|^2, accumulated with Kahan
 * compensation (`r_carry`). Rings hold the most recent sample at the front.
 */
struct EstimatorState
{
    RegressorLayout layout;
    Matrix theta;
    Vector phi;
    double r = 1.0;
    double r_carry = 0.0;
    long n = 0;
    std::deque<Vector> y_ring;
    std::deque<Vector> u_ring;
    std::deque<Vector> residual_ring;
};

struct EstimatorInit
{
    std::optional<Matrix> theta0; ///< defaults to zero
    std::optional<Vector> phi0;   ///< defaults to zero
    std::optional<Vector> y0;     ///< sample at n = 0 for the lag rings
    std::optional<Vector> u0;
};

EstimatorState make_estimator(const RegressorLayout& layout, const EstimatorInit& init = {});

/// Stacks the ring contents into phi_n; missing history reads as zero.
Vector form_regressor(const EstimatorState& state);

/**
 * One SG step with the regressor already formed for time n:
 *
 *   w^_{n+1}   = y_{n+1} - theta_n^T phi_n
 *   theta_{n+1} = theta_n + (phi_n / r_n) w^_{n+1}^T
 *
 * then pushes y_{n+1}, u_{n+1} and w^_{n+1} into the rings, forms phi_{n+1}
 * and sets r_{n+1} = r_n + |phi_{n+1}|^2. Returns w^_{n+1}.
 *
 * Throws DataError on non-finite y_next.
 */
Vector sg_update(EstimatorState& state, const Vector& y_next, const Vector& u_next);

/// Frobenius norm of theta_n - theta.
double estimation_error(const EstimatorState& state, const Matrix& truth);

/// Diagnostic for the weighted noise sum sum_i phi_i eps_{i+1}^T / r_i.
struct ConditionADiag
{
    Matrix partial_sum;
    std::vector<std::pair<long, double>> tail_norm_series;
    double delta_fit = 0.0;
};

/**
 * `phis` holds phi_0 .. phi_{N-1} as columns, `rs` r_0 .. r_{N-1} and `eps`
 * eps_1 .. eps_N as columns (eps.col(i) pairs with phi_i). The tail norm is
 * measured against the final partial sum every `stride` steps; delta is the
 * negated log-log slope of tail norm against r_n over the last half of the
 * run. Throws InsufficientData below 100 steps.
 */
ConditionADiag condition_a_diagnostic(const Matrix& phis, const Vector& rs, const Matrix& eps,
                                      long stride = 1);

/// CSV columns: n, r_n, theta_err, residual_norm.
struct EstimatorLogRow
{
    long n;
    double r;
    double theta_err;
    double residual_norm;
};
void write_estimator_csv(std::ostream& os, const std::vector<EstimatorLogRow>& rows);

} // namespace sglab
