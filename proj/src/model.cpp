#include "sglab/model.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

namespace {

void check_block(const Matrix& m, int rows, int cols, const std::string& name)
{
    if (m.rows() != rows || m.cols() != cols)
        throw DimensionError(name + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    if (!m.allFinite())
        throw InvalidMatrix(name + ": non-finite entry");
}

} // namespace

void ArmaxSystem::validate() const
{
    if (d < 1 || l < 1)
        throw DimensionError("ArmaxSystem: d and l must be positive");
    if (p() == 0 && r() == 0 && q() < 1)
        throw DimensionError("ArmaxSystem: q must be >= 1 when p = r = 0");
    for (int i = 0; i < p(); ++i)
        check_block(A[i], d, d, "A_" + std::to_string(i + 1));
    for (int j = 0; j < q(); ++j)
        check_block(B[j], d, l, "B_" + std::to_string(j + 1));
    for (int k = 0; k < r(); ++k)
        check_block(C[k], d, d, "C_" + std::to_string(k + 1));
}

Matrix true_theta(const ArmaxSystem& sys)
{
    sys.validate();
    Matrix theta(sys.regressor_dim(), sys.d);
    Eigen::Index row = 0;
    for (const auto& a : sys.A) {
        theta.middleRows(row, sys.d) = -a.transpose();
        row += sys.d;
    }
    for (const auto& b : sys.B) {
        theta.middleRows(row, sys.l) = b.transpose();
        row += sys.l;
    }
    for (const auto& c : sys.C) {
        theta.middleRows(row, sys.d) = c.transpose();
        row += sys.d;
    }
    return theta;
}

Vector generate_noise(const NoiseModel& nm, int dim, double r_prev, Rng& rng)
{
    Vector w = Vector::Zero(dim);
    if (nm.kind == NoiseKind::Zero)
        return w;
    const double variance = nm.c0 * std::pow(r_prev, nm.epsilon) / dim;
    if (nm.kind == NoiseKind::Gaussian) {
        std::normal_distribution<double> dist(0.0, std::sqrt(variance));
        for (int i = 0; i < dim; ++i)
            w(i) = dist(rng);
    } else {
        // Uniform on [-a, a] has variance a^2 / 3.
        const double a = std::sqrt(3.0 * variance);
        std::uniform_real_distribution<double> dist(-a, a);
        for (int i = 0; i < dim; ++i)
            w(i) = dist(rng);
    }
    return w;
}

SimulationTrace::SimulationTrace(int d, int l)
    : m_d(d)
    , m_l(l)
{
    if (d < 1 || l < 1)
        throw DimensionError("SimulationTrace: d and l must be positive");
}

void SimulationTrace::push_initial(const Vector& y0, const Vector& u0, const Vector& w0)
{
    if (!m_y.empty())
        throw DataError("SimulationTrace::push_initial: trace already started");
    if (y0.size() != m_d || u0.size() != m_l || w0.size() != m_d)
        throw DimensionError("SimulationTrace::push_initial: dimension mismatch");
    append(y0, u0, w0, w0);
}

Vector SimulationTrace::y_or_zero(long n) const
{
    return n >= 0 && n < size() ? m_y[n] : Vector::Zero(m_d);
}

Vector SimulationTrace::u_or_zero(long n) const
{
    return n >= 0 && n < size() ? m_u[n] : Vector::Zero(m_l);
}

Vector SimulationTrace::w_or_zero(long n) const
{
    return n >= 0 && n < size() ? m_w[n] : Vector::Zero(m_d);
}

void SimulationTrace::append(Vector y, Vector u, Vector w, Vector eps)
{
    m_y.push_back(std::move(y));
    m_u.push_back(std::move(u));
    m_w.push_back(std::move(w));
    m_eps.push_back(std::move(eps));
}

Vector simulate_step(const ArmaxSystem& sys, SimulationTrace& trace, const Vector& u_next,
                     const Vector& w_next)
{
    if (trace.d() != sys.d || trace.l() != sys.l)
        throw DimensionError("simulate_step: trace dimensions do not match system");
    if (u_next.size() != sys.l || w_next.size() != sys.d)
        throw DimensionError("simulate_step: input or noise dimension mismatch");

    const long n = trace.size();
    Vector eps = w_next;
    for (int k = 1; k <= sys.r(); ++k)
        eps += sys.C[k - 1] * trace.w_or_zero(n - k);

    Vector y = eps;
    for (int i = 1; i <= sys.p(); ++i)
        y -= sys.A[i - 1] * trace.y_or_zero(n - i);
    for (int j = 1; j <= sys.q(); ++j)
        y += sys.B[j - 1] * trace.u_or_zero(n - j);

    trace.append(y, u_next, w_next, std::move(eps));
    return y;
}

SprReport check_spr(const ArmaxSystem& sys, int grid_size)
{
    if (grid_size < 8)
        throw ConfigError("check_spr: grid_size must be >= 8");
    sys.validate();
    SprReport report;
    if (sys.r() == 0)
        return report;

    const int d = sys.d;
    report.min_real_eig = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid_size; ++g) {
        const double omega = 2.0 * std::numbers::pi * g / grid_size;
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(d, d) * 0.5;
        for (int k = 1; k <= sys.r(); ++k)
            h += sys.C[k - 1].cast<std::complex<double>>() * std::polar(1.0, k * omega);
        const Eigen::MatrixXcd herm = 0.5 * (h + h.adjoint());

        // A Hermitian matrix X + iY has the same spectrum (doubled) as the
        // real symmetric [[X, -Y], [Y, X]].
        Matrix real_form(2 * d, 2 * d);
        real_form.topLeftCorner(d, d) = herm.real();
        real_form.bottomRightCorner(d, d) = herm.real();
        real_form.topRightCorner(d, d) = -herm.imag();
        real_form.bottomLeftCorner(d, d) = herm.imag();
        const double lo = eig_extremes(SymmetricMatrix(real_form)).lambda_min;
        if (lo < report.min_real_eig) {
            report.min_real_eig = lo;
            report.argmin_freq = omega;
        }
    }
    // C(z) is a polynomial in the backward shift, so it has no poles in |z| <= 1;
    // only the positivity margin needs checking.
    report.is_spr = report.min_real_eig > 0.0;
    return report;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace)
{
    CsvWriter csv(os);
    std::vector<std::string> header{"n"};
    for (int i = 0; i < trace.d(); ++i)
        header.push_back("y" + std::to_string(i));
    for (int i = 0; i < trace.l(); ++i)
        header.push_back("u" + std::to_string(i));
    for (int i = 0; i < trace.d(); ++i)
        header.push_back("w" + std::to_string(i));
    csv.header(header);
    for (long n = 0; n < trace.size(); ++n) {
        csv.field(n);
        csv.fields(trace.y(n));
        csv.fields(trace.u(n));
        csv.fields(trace.w(n));
        csv.end_row();
    }
}

} // namespace sglab
