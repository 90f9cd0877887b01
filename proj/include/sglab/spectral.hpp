#pragma once

#include <Eigen/Dense>

namespace sglab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Dense real symmetric matrix. Construction symmetrizes the input by
 * averaging it with its transpose, so entries(i, j) == entries(j, i) holds
 * bit-for-bit afterwards.
 */
class SymmetricMatrix
{
public:
    explicit SymmetricMatrix(Eigen::Index dim);
    explicit SymmetricMatrix(const Matrix& entries);

    static SymmetricMatrix zero(Eigen::Index dim) { return SymmetricMatrix(dim); }
    static SymmetricMatrix identity(Eigen::Index dim);

    Eigen::Index dim() const { return m_entries.rows(); }
    const Matrix& entries() const { return m_entries; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_entries(i, j); }

    /// Adds weight * v v^T in place; keeps exact symmetry.
    void add_outer(const Eigen::Ref<const Vector>& v, double weight = 1.0);

    double trace() const { return m_entries.trace(); }

    SymmetricMatrix operator+(const SymmetricMatrix& other) const;
    SymmetricMatrix operator-(const SymmetricMatrix& other) const;
    SymmetricMatrix operator*(double scale) const;

private:
    Matrix m_entries;
};

struct EigExtremes
{
    double lambda_min;
    double lambda_max;
};

/// Dimensions up to this use cyclic Jacobi; larger ones Householder
/// tridiagonalization followed by implicit QR.
inline constexpr Eigen::Index kJacobiMaxDim = 32;

/// All eigenvalues in ascending order.
Vector eigenvalues(const SymmetricMatrix& m);
Vector eigenvalues_jacobi(const SymmetricMatrix& m);
Vector eigenvalues_tridiagonal(const SymmetricMatrix& m);

EigExtremes eig_extremes(const SymmetricMatrix& m);

/// Largest singular value of an arbitrary (not necessarily square) matrix.
double spectral_norm(const Matrix& m);

double frob_norm(const Matrix& m);

/// lambda_max / lambda_min; throws SingularMatrix when
/// lambda_min <= 1e-14 * lambda_max.
double condition_number(const SymmetricMatrix& m);

/// Like condition_number but returns +infinity for singular input.
double condition_number_or_inf(const SymmetricMatrix& m);

inline constexpr double kSingularThreshold = 1e-14;

} // namespace sglab
