#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sglab/schedule.hpp"
#include "sglab/spectral.hpp"

namespace sglab {

enum class WeightKind
{
    Unit,
    RWeighted,
    Custom,
};

/// Nonnegative weights mu_j, indexed by time.
struct WeightScheme
{
    WeightKind kind = WeightKind::Unit;
    std::vector<double> values;

    static WeightScheme unit(long length);
    static WeightScheme r_weighted(const Vector& rs);
    /// Throws DomainError on a negative or non-finite weight.
    static WeightScheme custom(std::vector<double> values);
};

/// sum_{l=k}^{j-1} (phi_j^T phi_l)^2 over normalized regressors.
double compute_Bjk(const Matrix& phis_normalized, long j, long k);

/// sum over [k, i) of mu_j phi_j phi_j^T.
SymmetricMatrix weighted_sum_S(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long i);

/// Columns phi_j / sqrt(r_j).
Matrix normalize_regressors(const Matrix& phis_raw, const Vector& rs);

struct BlockBoundReport
{
    long k_start = 0;
    long k_end = 0;
    double lambda_min_S = 0.0;
    double max_mu = 0.0;
    double sum_muB = 0.0;
    double bound_value = 1.0;  ///< 1 - lambda_min(S) / (sqrt(max mu) + sqrt(sum mu B))^2
    double exact_norm_sq = 0.0;
    double criterion_term = 0.0; ///< lambda_min(S) / denominator, clipped at 0
    bool degenerate = false;   ///< all weights zero on the block; bound reported as 1
    bool holds = true;         ///< exact_norm_sq <= bound_value + 1e-9
};

/**
 * Matrix-product norm bound over [k, N):
 *
 *   |Phi(N,k)|^2 <= 1 - lambda_min(S_{Nk}) / (sqrt(max mu_j) + sqrt(sum mu_j B_jk))^2
 *
 * with the exact side recomputed by product_oracle (A_j = phi_j phi_j^T).
 * Requires |phi_j| <= 1.
 */
BlockBoundReport theorem_bound(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long N);

/// Same, with the exact squared norm supplied by the caller (e.g. a tracker).
BlockBoundReport theorem_bound(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long N, double exact_norm_sq);

/**
 * Materialized quadratic-form certificate for a probe x_k on [k, i).
 *
 * With x_{j+1} = (I - A_j) x_j, u_j = phi_j^T x_j, v_j = phi_j^T x_k and the
 * strictly lower-triangular C_{jl} = phi_j^T phi_l, the recursion gives
 * v = (I + C) u. The norm check is |Lambda (I + C)| <= sqrt(max mu) + |Lambda C|_F.
 */
struct Certificate
{
    Vector u;
    Vector v;
    Matrix C;
    Vector lambda; ///< sqrt(mu_j)

    double identity_residual = 0.0; ///< |v - (I + C) u|
    double quad_form = 0.0;         ///< x_k^T S_ik x_k
    double lambda_v_sq = 0.0;       ///< |Lambda v|^2
    double operator_norm = 0.0;     ///< |Lambda (I + C)|
    double norm_bound = 0.0;        ///< sqrt(max mu) + sqrt(sum mu B)
    double energy_gap = 0.0;        ///< |x_k|^2 - |x_i|^2 - |u|^2 (>= 0)

    bool identity_ok = false;
    bool quad_ok = false;
    bool norm_ok = false;
    bool energy_ok = false;
    bool ok() const { return identity_ok && quad_ok && norm_ok && energy_ok; }
};

Certificate certificate(const Matrix& phis_normalized, const WeightScheme& weights,
                        const Vector& x_k, long k, long i);

struct IntegralEstimate
{
    double lhs = 0.0; ///< sum_{j=k}^{i-1} r_j B_jk, exact
    double rhs = 0.0; ///< r_{i-1}(log r_{i-1} - log r_{k-1}) - (r_{i-1} - r_{k-1})
    bool holds = true;
};

/**
 * Integral estimate of the r-weighted correlation sum on [k, i), k >= 1.
 * `rs` must be the running sums of |phi_j|^2 for the given raw regressors.
 */
IntegralEstimate integral_estimate_check(const Matrix& phis_raw, const Vector& rs, long k, long i);

/// D = r_{t_cur-1}(log r_{t_cur-1} - log r_{t_prev-1}) + r_{t_prev-1}.
double dk_term(const Vector& rs, long t_prev, long t_cur);

enum class CriterionVariant
{
    GeneralMu, ///< r-weighted denominator with the exact sum mu_j B_jk
    Dk,        ///< closed-form denominator D_k
};

struct CriterionPoint
{
    int k;
    double lambda_min;
    double denominator;
    double term;
    double partial_sum;
    bool empty_block;
};

/// Per-block series terms and their running sums over the blocks the schedule
/// completes inside the run.
std::vector<CriterionPoint> criterion_partial_sums(const Matrix& phis_raw, const Vector& rs,
                                                   const BlockSchedule& schedule,
                                                   CriterionVariant variant);

/// One evaluated inequality lhs <= rhs.
struct LedgerRow
{
    std::string name;
    long k = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = true;
    bool applicable = true; ///< false when a hypothesis the row relies on is unmet
};

struct MainTheoremLedger
{
    std::vector<LedgerRow> rows;

    /// Applicable rows only.
    bool all_pass() const;
    void append(const MainTheoremLedger& other);
};

/// Adds lhs <= rhs with tolerance tol * (1 + |rhs|).
LedgerRow make_row(std::string name, long k, double lhs, double rhs, double tol = 1e-9);

/**
 * Eigenvalue split behind the divergence argument, for one block:
 *   lambda_min(end) - lambda_max(start) <= lambda_min(end - start)   (Weyl)
 *   kappa(end) <= M (log r_end)^alpha                                (envelope)
 *   tr(end) / (m M (log r_end)^alpha) <= lambda_min(end)             (trace lower)
 *   lambda_max(start) <= tr(start)                                   (trace upper)
 *   tr(end)/(m M (log r_end)^alpha) - tr(start) <= lambda_min(end - start)
 *
 * The two trace-floor rows depend on the envelope. When S_end is singular the
 * envelope row and both dependents are marked not applicable; when kappa is
 * finite but exceeds the envelope, the envelope row fails and the dependents
 * are not applicable.
 */
MainTheoremLedger weyl_split_check(const SymmetricMatrix& S_end, const SymmetricMatrix& S_start,
                                   double kappa_bound_M, double alpha, double r_end, int dim,
                                   long k = 0);

/// CSV columns: k_start, k_end, lambda_min_S, max_mu, sum_muB, bound_value, exact_norm_sq, criterion_term, holds.
void write_blocks_csv(std::ostream& os, const std::vector<BlockBoundReport>& reports);
/// CSV columns: name, k, lhs, rhs, slack, pass, applicable.
void write_ledger_csv(std::ostream& os, const MainTheoremLedger& ledger);

} // namespace sglab
