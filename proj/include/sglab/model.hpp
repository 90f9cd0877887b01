#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "sglab/spectral.hpp"

namespace sglab {

/**
 * Ground-truth ARMAX system
 *
 *   y_n + A_1 y_{n-1} + ... + A_p y_{n-p} = B_1 u_{n-1} + ... + B_q u_{n-q} + eps_n
 *   eps_n = w_n + C_1 w_{n-1} + ... + C_r w_{n-r}
 *
 * with d-dimensional outputs and l-dimensional inputs.
 */
struct ArmaxSystem
{
    int d = 1;
    int l = 1;
    std::vector<Matrix> A; ///< p matrices, d x d
    std::vector<Matrix> B; ///< q matrices, d x l
    std::vector<Matrix> C; ///< r matrices, d x d

    int p() const { return static_cast<int>(A.size()); }
    int q() const { return static_cast<int>(B.size()); }
    int r() const { return static_cast<int>(C.size()); }

    /// Regressor dimension d*p + l*q + d*r.
    int regressor_dim() const { return d * p() + l * q() + d * r(); }

    /// Throws DimensionError on inconsistent shapes, InvalidMatrix on non-finite entries.
    void validate() const;
};

/// theta with theta^T = [-A_1 ... -A_p, B_1 ... B_q, C_1 ... C_r]; shape regressor_dim x d.
Matrix true_theta(const ArmaxSystem& sys);

enum class NoiseKind
{
    Gaussian,
    BoundedUniform,
    Zero,
};

struct NoiseModel
{
    double c0 = 1.0;
    double epsilon = 0.0;
    NoiseKind kind = NoiseKind::Gaussian;
    std::uint64_t seed = 0;
};

using Rng = std::mt19937_64;

/**
 * Draws w_n with zero mean and E|w_n|^2 = c0 * r_prev^epsilon, split evenly
 * over the `dim` components. Deterministic for a fixed engine state.
 */
Vector generate_noise(const NoiseModel& nm, int dim, double r_prev, Rng& rng);

/// Signals indexed from n = 0; anything before index 0 reads as zero.
class SimulationTrace
{
public:
    SimulationTrace(int d, int l);

    int d() const { return m_d; }
    int l() const { return m_l; }
    long size() const { return static_cast<long>(m_y.size()); }

    /// Sets the n = 0 sample directly; eps_0 = w_0 under zero padding.
    void push_initial(const Vector& y0, const Vector& u0, const Vector& w0);

    const Vector& y(long n) const { return m_y.at(n); }
    const Vector& u(long n) const { return m_u.at(n); }
    const Vector& w(long n) const { return m_w.at(n); }
    const Vector& eps(long n) const { return m_eps.at(n); }

    /// Zero-padded lookups for n < 0.
    Vector y_or_zero(long n) const;
    Vector u_or_zero(long n) const;
    Vector w_or_zero(long n) const;

    void append(Vector y, Vector u, Vector w, Vector eps);

private:
    int m_d;
    int m_l;
    std::vector<Vector> m_y;
    std::vector<Vector> m_u;
    std::vector<Vector> m_w;
    std::vector<Vector> m_eps;
};

/**
 * Advances the system by one sample: computes eps_n from w_next and the stored
 * noise history, y_n from past outputs and inputs, and stores (y_n, u_next, w_next)
 * at the new index n. Returns y_n.
 */
Vector simulate_step(const ArmaxSystem& sys, SimulationTrace& trace, const Vector& u_next,
                     const Vector& w_next);

struct SprReport
{
    bool is_spr = true;
    double min_real_eig = 0.0;
    double argmin_freq = 0.0;
};

/**
 * Frequency-grid test of C(z) - I/2 on the unit circle. Reports the minimum
 * over the grid of lambda_min of the Hermitian part. r = 0 is SPR trivially.
 */
SprReport check_spr(const ArmaxSystem& sys, int grid_size = 4096);

/// CSV columns: n, y0..y{d-1}, u0..u{l-1}, w0..w{d-1}.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

} // namespace sglab
