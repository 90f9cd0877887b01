#pragma once

#include <span>
#include <vector>

#include "sglab/spectral.hpp"

// Hot loops of the bound engine. Each kernel has a plain serial reference
// used by the tests; the production variants are OpenMP-parallel or use a
// lower-complexity formulation and must agree with the reference.
namespace sglab::kernels {

/**
 * B_{jk} = sum_{l=k}^{j-1} (phi_j^T phi_l)^2 for every j in [k, i).
 * Columns of `phis` are the (normalized) regressors indexed by time.
 * Serial direct double sum, O((i - k)^2 m).
 */
std::vector<double> bjk_series_serial(const Matrix& phis, long k, long i);

/// Same double sum with the outer loop split over OpenMP threads. Each entry is
/// computed by one thread in a fixed order, so the output is thread-count independent.
std::vector<double> bjk_series_parallel(const Matrix& phis, long k, long i);

/**
 * Streaming form B_{jk} = phi_j^T G_j phi_j with G_j = sum_{l=k}^{j-1} phi_l phi_l^T,
 * O((i - k) m^2). Used for long blocks.
 */
std::vector<double> bjk_series_gram(const Matrix& phis, long k, long i);

/// Picks the parallel double sum for short blocks and the streaming form otherwise.
std::vector<double> bjk_series(const Matrix& phis, long k, long i);

/// Block length above which bjk_series switches to the streaming form.
inline constexpr long kGramThreshold = 2048;

/// sum_j mu_j B_j over the block, accumulated serially in index order.
/// `mu` is indexed by time; `bjk` by offset from k.
double weighted_sum(std::span<const double> bjk, std::span<const double> mu, long k);

/// sum over [k, i) of mu_j phi_j phi_j^T.
Matrix weighted_fisher_serial(const Matrix& phis, std::span<const double> mu, long k, long i);

} // namespace sglab::kernels
