#include "sglab/kernels.hpp"

#include "sglab/errors.hpp"

namespace sglab::kernels {

namespace {

void check_range(const Matrix& phis, long k, long i)
{
    if (k < 0 || i < k || i > phis.cols())
        throw RangeError("kernels: invalid interval");
}

// Shared by the serial and parallel paths so both sum in the same order.
inline double dot(const double* a, const double* b, Eigen::Index m)
{
    double c = 0.0;
    for (Eigen::Index t = 0; t < m; ++t)
        c += a[t] * b[t];
    return c;
}

} // namespace

std::vector<double> bjk_series_serial(const Matrix& phis, long k, long i)
{
    check_range(phis, k, i);
    std::vector<double> out(i - k, 0.0);
    const Eigen::Index m = phis.rows();
    for (long j = k; j < i; ++j) {
        double acc = 0.0;
        for (long l = k; l < j; ++l) {
            const double c = dot(phis.col(j).data(), phis.col(l).data(), m);
            acc += c * c;
        }
        out[j - k] = acc;
    }
    return out;
}

std::vector<double> bjk_series_parallel(const Matrix& phis, long k, long i)
{
    check_range(phis, k, i);
    const long len = i - k;
    std::vector<double> out(len, 0.0);
    const Eigen::Index m = phis.rows();
    const double* data = phis.data();

#pragma omp parallel for schedule(dynamic, 32)
    for (long off = 0; off < len; ++off) {
        const long j = k + off;
        const double* pj = data + j * m;
        double acc = 0.0;
        for (long l = k; l < j; ++l) {
            const double c = dot(pj, data + l * m, m);
            acc += c * c;
        }
        out[off] = acc;
    }
    return out;
}

std::vector<double> bjk_series_gram(const Matrix& phis, long k, long i)
{
    check_range(phis, k, i);
    const Eigen::Index m = phis.rows();
    std::vector<double> out(i - k, 0.0);
    Matrix gram = Matrix::Zero(m, m);
    for (long j = k; j < i; ++j) {
        const auto pj = phis.col(j);
        out[j - k] = pj.dot(gram * pj);
        gram.noalias() += pj * pj.transpose();
    }
    return out;
}

std::vector<double> bjk_series(const Matrix& phis, long k, long i)
{
    return i - k > kGramThreshold ? bjk_series_gram(phis, k, i) : bjk_series_parallel(phis, k, i);
}

double weighted_sum(std::span<const double> bjk, std::span<const double> mu, long k)
{
    if (k < 0 || static_cast<std::size_t>(k) + bjk.size() > mu.size())
        throw RangeError("weighted_sum: weights do not cover the block");
    double acc = 0.0;
    for (std::size_t off = 0; off < bjk.size(); ++off)
        acc += mu[k + off] * bjk[off];
    return acc;
}

Matrix weighted_fisher_serial(const Matrix& phis, std::span<const double> mu, long k, long i)
{
    check_range(phis, k, i);
    if (static_cast<std::size_t>(i) > mu.size())
        throw RangeError("weighted_fisher_serial: weights do not cover the block");
    const Eigen::Index m = phis.rows();
    Matrix S = Matrix::Zero(m, m);
    for (long j = k; j < i; ++j)
        S.noalias() += mu[j] * phis.col(j) * phis.col(j).transpose();
    return S;
}

} // namespace sglab::kernels
