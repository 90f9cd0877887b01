#include "sglab/transition.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

TransitionTracker::TransitionTracker(int dim, std::set<long> anchors, long start_n)
    : m_dim(dim)
    , m_n(start_n)
{
    if (dim < 1)
        throw DimensionError("TransitionTracker: dim must be >= 1");
    for (long k : anchors)
        add_anchor(k);
}

void TransitionTracker::add_anchor(long k)
{
    if (k < m_n)
        throw AnchorError("TransitionTracker: anchor " + std::to_string(k) + " is in the past");
    m_pending.insert(k);
    activate_pending();
}

void TransitionTracker::drop_anchor(long k)
{
    m_pending.erase(k);
    m_products.erase(k);
}

std::vector<long> TransitionTracker::live_anchors() const
{
    std::vector<long> out;
    for (const auto& [k, _] : m_products)
        out.push_back(k);
    return out;
}

void TransitionTracker::add_probe(const Vector& x)
{
    if (x.size() != m_dim)
        throw DimensionError("TransitionTracker::add_probe: size mismatch");
    m_probes.push_back({x, m_n});
}

void TransitionTracker::activate_pending()
{
    while (!m_pending.empty() && *m_pending.begin() == m_n) {
        m_products.emplace(m_n, Matrix::Identity(m_dim, m_dim));
        m_pending.erase(m_pending.begin());
    }
}

void TransitionTracker::step(const Vector& phi, double r)
{
    if (phi.size() != m_dim)
        throw DimensionError("TransitionTracker::step: size mismatch");
    const double energy = phi.squaredNorm();
    if (!(r > 0.0) || energy / r > 1.0 + 1e-12)
        throw ContractionViolation("TransitionTracker::step: |phi|^2 / r exceeds 1 at n = " +
                                   std::to_string(m_n));
    if (energy > 0.0) {
        // (I - a a^T / r) P = P - a (a^T P) / r
        for (auto& [k, P] : m_products) {
            const Eigen::RowVectorXd row = phi.transpose() * P;
            P.noalias() -= (phi / r) * row;
        }
        for (auto& probe : m_probes)
            probe.x -= phi * (phi.dot(probe.x) / r);
    }
    ++m_n;
    activate_pending();
}

const Matrix& TransitionTracker::product(long k) const
{
    auto it = m_products.find(k);
    if (it == m_products.end())
        throw AnchorError("TransitionTracker: unknown anchor " + std::to_string(k));
    return it->second;
}

double TransitionTracker::exact_norm(long k) const
{
    return spectral_norm(product(k));
}

Matrix product_oracle(const Matrix& phis, const Vector& rs, long k, long n)
{
    if (k < 0 || k > n || n > phis.cols() || rs.size() < n)
        throw RangeError("product_oracle: invalid range");
    const Eigen::Index m = phis.rows();
    Matrix out = Matrix::Identity(m, m);
    for (long i = k; i < n; ++i) {
        const Matrix factor =
            Matrix::Identity(m, m) - phis.col(i) * phis.col(i).transpose() / rs(i);
        out = factor * out;
    }
    return out;
}

ProbeDeficit probe_deficit(const ProbeVector& start, const Matrix& phis, const Vector& rs,
                           long upto)
{
    if (start.origin_k < 0 || upto < start.origin_k || upto > phis.cols() || rs.size() < upto)
        throw RangeError("probe_deficit: invalid range");
    if (start.x.size() != phis.rows())
        throw DimensionError("probe_deficit: probe size mismatch");
    ProbeDeficit out;
    out.x_end = start.x;
    out.projections.reserve(upto - start.origin_k);
    for (long j = start.origin_k; j < upto; ++j) {
        const double scale = std::sqrt(rs(j));
        const double proj = phis.col(j).dot(out.x_end) / scale;
        out.projections.push_back(proj);
        out.x_end -= (phis.col(j) / scale) * proj;
    }
    return out;
}

void write_norm_csv(std::ostream& os, const std::vector<NormSample>& samples)
{
    CsvWriter csv(os);
    csv.header({"n", "anchor", "phi_norm"});
    for (const auto& s : samples) {
        csv.field(s.n).field(s.anchor).field(s.phi_norm);
        csv.end_row();
    }
}

} // namespace sglab
