#include "sglab/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

void ExcitationSpec::validate() const
{
    if (dim < 1)
        throw ConfigError("excitation: dim must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("excitation: alpha must be >= 0");
    if (!(step_energy > 0.0) || !std::isfinite(step_energy))
        throw ConfigError("excitation: step_energy must be > 0");
    if (horizon < 100)
        throw ConfigError("excitation: horizon must be >= 100");
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("excitation: beta must lie in (0, 1)");
    if (mode != ExcitationMode::DirectRegressor)
        throw ConfigError("excitation: only direct-regressor mode is supported");
}

namespace {

DesignedRegressors allocate(const ExcitationSpec& spec, Rng& rng)
{
    const int m = spec.dim;
    const long N = spec.horizon;
    const double amp = std::sqrt(spec.step_energy);
    const double log_r_floor = 2.0; // round-robin until r_n >= e^2

    DesignedRegressors out;
    out.phis = Matrix::Zero(m, N + 1);
    std::vector<double> energy(m, 0.0);
    std::bernoulli_distribution coin(0.5);
    long rr = 0;

    for (long n = 1; n <= N; ++n) {
        const double r_n = 1.0 + n * spec.step_energy;
        const double total = r_n - 1.0;
        int axis = 0;
        if (m == 1) {
            axis = 0;
        } else if (std::log(r_n) < log_r_floor) {
            axis = static_cast<int>(rr++ % m);
            ++out.audit.fallback_steps;
            out.audit.last_fallback_n = n;
        } else {
            const double weak =
                total * spec.beta / ((m - 1) * std::pow(std::log(r_n), spec.alpha));
            const double strong = total - (m - 1) * weak;
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                const double deficit = (i == 0 ? strong : weak) - energy[i];
                out.audit.max_abs_deficit = std::max(out.audit.max_abs_deficit, std::abs(deficit));
                if (deficit > best) {
                    best = deficit;
                    axis = i;
                }
            }
        }
        energy[axis] += spec.step_energy;
        out.phis(axis, n) = coin(rng) ? amp : -amp;
    }
    return out;
}

} // namespace

DesignedRegressors design_regressors(const ExcitationSpec& spec, Rng& rng)
{
    spec.validate();
    return allocate(spec, rng);
}

DesignedRegressors adversarial_regressors(const ExcitationSpec& spec, Rng& rng)
{
    spec.validate();
    if (!(spec.alpha > 1.0))
        throw ConfigError("adversarial_regressors: alpha must exceed 1");
    return allocate(spec, rng);
}

double KappaProfile::max_ratio(long from_n) const
{
    double best = 0.0;
    for (const auto& p : points)
        if (p.n >= from_n && std::isfinite(p.ratio))
            best = std::max(best, p.ratio);
    return best;
}

double KappaProfile::min_ratio(long from_n) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points)
        if (p.n >= from_n && std::isfinite(p.ratio))
            best = std::min(best, p.ratio);
    return best;
}

Vector r_sequence(const Matrix& phis)
{
    const Eigen::Index N = phis.cols();
    Vector rs(N);
    double sum = 1.0;
    double carry = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
        if (n > 0) {
            const double y = phis.col(n).squaredNorm() - carry;
            const double t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        rs(n) = sum;
    }
    return rs;
}

KappaProfile measure_kappa_profile(const Matrix& phis, long stride, double alpha)
{
    if (phis.cols() < 2)
        throw DataError("measure_kappa_profile: need at least one regressor after phi_0");
    if (stride < 1)
        throw ConfigError("measure_kappa_profile: stride must be positive");

    KappaProfile profile;
    profile.alpha = alpha;
    const long N = phis.cols() - 1;
    const Vector rs = r_sequence(phis);
    SymmetricMatrix S(phis.rows());
    for (long n = 1; n <= N; ++n) {
        S.add_outer(phis.col(n));
        if (n % stride != 0 && n != N)
            continue;
        const double kappa = condition_number_or_inf(S);
        const double scale = std::pow(std::log(rs(n)), alpha);
        profile.points.push_back({n, rs(n), kappa, kappa / scale});
    }
    return profile;
}

void write_regressors_csv(std::ostream& os, const Matrix& phis)
{
    CsvWriter csv(os);
    std::vector<std::string> header{"n"};
    for (Eigen::Index i = 0; i < phis.rows(); ++i)
        header.push_back("phi" + std::to_string(i));
    csv.header(header);
    for (Eigen::Index n = 0; n < phis.cols(); ++n) {
        csv.field(static_cast<long>(n)).fields(phis.col(n));
        csv.end_row();
    }
}

void write_kappa_csv(std::ostream& os, const KappaProfile& profile)
{
    CsvWriter csv(os);
    csv.header({"n", "r_n", "kappa", "ratio"});
    for (const auto& p : profile.points) {
        csv.field(p.n).field(p.r).field(p.kappa).field(p.ratio);
        csv.end_row();
    }
}

} // namespace sglab
