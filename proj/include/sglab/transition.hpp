#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "sglab/spectral.hpp"

namespace sglab {

/// Probe x_{i+1} = (I - A_i) x_i started at origin_k.
struct ProbeVector
{
    Vector x;
    long origin_k = 0;
};

/**
 * Tracks Phi(n, k) = (I - A_{n-1}) ... (I - A_k), A_i = phi_i phi_i^T / r_i,
 * for a set of anchors k. An anchor becomes live (Phi(k, k) = I) once the
 * tracker reaches step k.
 */
class TransitionTracker
{
public:
    explicit TransitionTracker(int dim, std::set<long> anchors = {0}, long start_n = 0);

    int dim() const { return m_dim; }
    long n() const { return m_n; }

    /// Schedules anchor k; k == n() creates it at once. k < n() throws AnchorError.
    void add_anchor(long k);
    void drop_anchor(long k);
    bool is_live(long k) const { return m_products.count(k) != 0; }
    std::vector<long> live_anchors() const;

    void add_probe(const Vector& x);
    const std::vector<ProbeVector>& probes() const { return m_probes; }

    /**
     * Left-multiplies every live product and probe by I - phi phi^T / r and
     * advances n. Throws ContractionViolation when |phi|^2 / r > 1 + 1e-12.
     */
    void step(const Vector& phi, double r);

    const Matrix& product(long k) const;
    /// Spectral norm of Phi(n, k).
    double exact_norm(long k) const;

private:
    void activate_pending();

    int m_dim;
    long m_n;
    std::set<long> m_pending;
    std::map<long, Matrix> m_products;
    std::vector<ProbeVector> m_probes;
};

/**
 * Recomputes Phi(n, k) from scratch by dense multiplication of the explicit
 * factors I - phi_i phi_i^T / r_i. `phis` columns and `rs` are indexed by time.
 */
Matrix product_oracle(const Matrix& phis, const Vector& rs, long k, long n);

struct ProbeDeficit
{
    Vector x_end;
    /// u_j = (phi_j / sqrt(r_j))^T x_j for j = k .. upto - 1.
    std::vector<double> projections;
};

/// Evolves x from step k to `upto`, recording the normalized projections.
ProbeDeficit probe_deficit(const ProbeVector& start, const Matrix& phis, const Vector& rs,
                           long upto);

struct NormSample
{
    long n;
    long anchor;
    double phi_norm;
};
/// CSV columns: n, anchor, phi_norm.
void write_norm_csv(std::ostream& os, const std::vector<NormSample>& samples);

} // namespace sglab
