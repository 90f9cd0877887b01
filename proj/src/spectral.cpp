#include "sglab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sglab/errors.hpp"

namespace sglab {

namespace {

void require_finite(const Matrix& m, const char* where)
{
    if (!m.allFinite())
        throw InvalidMatrix(std::string(where) + ": non-finite entry");
}

// Cyclic Jacobi sweeps on a symmetric working copy. Converges quadratically;
// for the small dimensions used here a handful of sweeps suffice.
Vector jacobi_eigenvalues(Matrix a)
{
    const Eigen::Index n = a.rows();
    if (n == 1)
        return Vector::Constant(1, a(0, 0));

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                off += a(i, j) * a(i, j);
        const double scale = a.squaredNorm();
        if (off == 0.0 || off <= 1e-32 * scale)
            break;

        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }

    Vector ev = a.diagonal();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

} // namespace

SymmetricMatrix::SymmetricMatrix(Eigen::Index dim)
    : m_entries(Matrix::Zero(dim, dim))
{
    if (dim < 1)
        throw DimensionError("SymmetricMatrix: dim must be >= 1");
}

SymmetricMatrix::SymmetricMatrix(const Matrix& entries)
{
    if (entries.rows() != entries.cols() || entries.rows() < 1)
        throw DimensionError("SymmetricMatrix: input must be square and non-empty");
    m_entries = 0.5 * (entries + entries.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index dim)
{
    SymmetricMatrix out(dim);
    out.m_entries.setIdentity();
    return out;
}

void SymmetricMatrix::add_outer(const Eigen::Ref<const Vector>& v, double weight)
{
    if (v.size() != dim())
        throw DimensionError("SymmetricMatrix::add_outer: size mismatch");
    const Eigen::Index n = dim();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double x = weight * v(i) * v(j);
            m_entries(i, j) += x;
            if (i != j)
                m_entries(j, i) = m_entries(i, j);
        }
    }
}

SymmetricMatrix SymmetricMatrix::operator+(const SymmetricMatrix& other) const
{
    if (other.dim() != dim())
        throw DimensionError("SymmetricMatrix: dimension mismatch");
    SymmetricMatrix out(*this);
    out.m_entries += other.m_entries;
    return out;
}

SymmetricMatrix SymmetricMatrix::operator-(const SymmetricMatrix& other) const
{
    if (other.dim() != dim())
        throw DimensionError("SymmetricMatrix: dimension mismatch");
    SymmetricMatrix out(*this);
    out.m_entries -= other.m_entries;
    return out;
}

SymmetricMatrix SymmetricMatrix::operator*(double scale) const
{
    SymmetricMatrix out(*this);
    out.m_entries *= scale;
    return out;
}

Vector eigenvalues_jacobi(const SymmetricMatrix& m)
{
    require_finite(m.entries(), "eigenvalues");
    return jacobi_eigenvalues(m.entries());
}

Vector eigenvalues_tridiagonal(const SymmetricMatrix& m)
{
    require_finite(m.entries(), "eigenvalues");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.entries(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

Vector eigenvalues(const SymmetricMatrix& m)
{
    return m.dim() <= kJacobiMaxDim ? eigenvalues_jacobi(m) : eigenvalues_tridiagonal(m);
}

EigExtremes eig_extremes(const SymmetricMatrix& m)
{
    const Vector ev = eigenvalues(m);
    return {ev(0), ev(ev.size() - 1)};
}

double spectral_norm(const Matrix& m)
{
    require_finite(m, "spectral_norm");
    if (m.size() == 0)
        return 0.0;
    // Gram matrix on the smaller side.
    const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose())
                                             : Matrix(m.transpose() * m);
    const Vector ev = eigenvalues(SymmetricMatrix(gram));
    return std::sqrt(std::max(0.0, ev(ev.size() - 1)));
}

double frob_norm(const Matrix& m)
{
    require_finite(m, "frob_norm");
    return m.norm();
}

double condition_number(const SymmetricMatrix& m)
{
    const auto [lo, hi] = eig_extremes(m);
    if (!(lo > kSingularThreshold * hi))
        throw SingularMatrix("condition_number: matrix is not positive definite");
    return hi / lo;
}

double condition_number_or_inf(const SymmetricMatrix& m)
{
    const auto [lo, hi] = eig_extremes(m);
    if (!(lo > kSingularThreshold * hi))
        return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace sglab
