#include "sglab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"
#include "sglab/kernels.hpp"
#include "sglab/transition.hpp"

namespace sglab {

namespace {

void check_interval(const Matrix& phis, long k, long i, const char* where)
{
    if (k < 0 || i < k || i > phis.cols())
        throw RangeError(std::string(where) + ": invalid interval");
}

void check_weights(const WeightScheme& w, long i, const char* where)
{
    if (static_cast<long>(w.values.size()) < i)
        throw DimensionError(std::string(where) + ": weights do not cover the interval");
}

void check_contraction(const Matrix& phis, long k, long i)
{
    for (long j = k; j < i; ++j)
        if (phis.col(j).squaredNorm() > 1.0 + 1e-12)
            throw ContractionViolation("normalized regressor with |phi|^2 > 1 at j = " +
                                       std::to_string(j));
}

double max_weight(const WeightScheme& w, long k, long i)
{
    double best = 0.0;
    for (long j = k; j < i; ++j)
        best = std::max(best, w.values[j]);
    return best;
}

// r_{-1} reads as 1, the value before any regressor energy accumulates.
double r_at(const Vector& rs, long idx)
{
    if (idx < 0)
        return 1.0;
    if (idx >= rs.size())
        throw RangeError("r index beyond the run");
    return rs(idx);
}

} // namespace

WeightScheme WeightScheme::unit(long length)
{
    return {WeightKind::Unit, std::vector<double>(length, 1.0)};
}

WeightScheme WeightScheme::r_weighted(const Vector& rs)
{
    return {WeightKind::RWeighted, std::vector<double>(rs.data(), rs.data() + rs.size())};
}

WeightScheme WeightScheme::custom(std::vector<double> values)
{
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("WeightScheme: weights must be finite and nonnegative");
    return {WeightKind::Custom, std::move(values)};
}

double compute_Bjk(const Matrix& phis_normalized, long j, long k)
{
    if (k < 0 || j < k || j >= phis_normalized.cols())
        throw RangeError("compute_Bjk: need 0 <= k <= j < length");
    double acc = 0.0;
    for (long l = k; l < j; ++l) {
        const double c = phis_normalized.col(j).dot(phis_normalized.col(l));
        acc += c * c;
    }
    return acc;
}

SymmetricMatrix weighted_sum_S(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long i)
{
    check_interval(phis_normalized, k, i, "weighted_sum_S");
    check_weights(weights, i, "weighted_sum_S");
    return SymmetricMatrix(kernels::weighted_fisher_serial(phis_normalized, weights.values, k, i));
}

Matrix normalize_regressors(const Matrix& phis_raw, const Vector& rs)
{
    if (rs.size() < phis_raw.cols())
        throw DimensionError("normalize_regressors: r sequence too short");
    Matrix out(phis_raw.rows(), phis_raw.cols());
    for (Eigen::Index j = 0; j < phis_raw.cols(); ++j)
        out.col(j) = phis_raw.col(j) / std::sqrt(rs(j));
    return out;
}

BlockBoundReport theorem_bound(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long N)
{
    check_interval(phis_normalized, k, N, "theorem_bound");
    const Vector ones = Vector::Ones(N);
    const double exact = spectral_norm(product_oracle(phis_normalized, ones, k, N));
    return theorem_bound(phis_normalized, weights, k, N, exact * exact);
}

BlockBoundReport theorem_bound(const Matrix& phis_normalized, const WeightScheme& weights, long k,
                               long N, double exact_norm_sq)
{
    check_interval(phis_normalized, k, N, "theorem_bound");
    check_weights(weights, N, "theorem_bound");
    check_contraction(phis_normalized, k, N);

    BlockBoundReport rep;
    rep.k_start = k;
    rep.k_end = N;
    rep.exact_norm_sq = exact_norm_sq;
    if (N == k) {
        rep.degenerate = true;
        rep.holds = exact_norm_sq <= 1.0 + 1e-9;
        return rep;
    }

    const SymmetricMatrix S = weighted_sum_S(phis_normalized, weights, k, N);
    rep.lambda_min_S = std::max(0.0, eig_extremes(S).lambda_min);
    rep.max_mu = max_weight(weights, k, N);
    const auto bjk = kernels::bjk_series(phis_normalized, k, N);
    rep.sum_muB = kernels::weighted_sum(bjk, weights.values, k);

    const double root = std::sqrt(rep.max_mu) + std::sqrt(rep.sum_muB);
    const double denom = root * root;
    if (!(denom > 0.0)) {
        rep.degenerate = true;
        rep.bound_value = 1.0;
        rep.criterion_term = 0.0;
    } else {
        rep.criterion_term = std::max(0.0, rep.lambda_min_S / denom);
        rep.bound_value = 1.0 - rep.lambda_min_S / denom;
    }
    rep.holds = exact_norm_sq <= rep.bound_value + 1e-9;
    return rep;
}

Certificate certificate(const Matrix& phis_normalized, const WeightScheme& weights,
                        const Vector& x_k, long k, long i)
{
    check_interval(phis_normalized, k, i, "certificate");
    check_weights(weights, i, "certificate");
    check_contraction(phis_normalized, k, i);
    if (x_k.size() != phis_normalized.rows())
        throw DimensionError("certificate: probe size mismatch");

    const long L = i - k;
    Certificate cert;
    cert.u = Vector::Zero(L);
    cert.v = Vector::Zero(L);
    cert.C = Matrix::Zero(L, L);
    cert.lambda = Vector::Zero(L);

    Vector x = x_k;
    for (long a = 0; a < L; ++a) {
        const auto phi = phis_normalized.col(k + a);
        cert.u(a) = phi.dot(x);
        cert.v(a) = phi.dot(x_k);
        cert.lambda(a) = std::sqrt(weights.values[k + a]);
        for (long b = 0; b < a; ++b)
            cert.C(a, b) = phi.dot(phis_normalized.col(k + b));
        x -= phi * cert.u(a);
    }

    const Matrix IC = Matrix::Identity(L, L) + cert.C;
    cert.identity_residual = (cert.v - IC * cert.u).norm();
    cert.identity_ok = cert.identity_residual <= 1e-10 * (1.0 + cert.u.norm());

    const SymmetricMatrix S = weighted_sum_S(phis_normalized, weights, k, i);
    cert.quad_form = x_k.dot(S.entries() * x_k);
    cert.lambda_v_sq = cert.lambda.cwiseProduct(cert.v).squaredNorm();
    cert.quad_ok =
        std::abs(cert.quad_form - cert.lambda_v_sq) <= 1e-10 * (1.0 + std::abs(cert.quad_form));

    const double max_mu = max_weight(weights, k, i);
    const auto bjk = kernels::bjk_series(phis_normalized, k, i);
    const double sum_muB = kernels::weighted_sum(bjk, weights.values, k);
    cert.norm_bound = std::sqrt(max_mu) + std::sqrt(sum_muB);
    cert.operator_norm = L > 0 ? spectral_norm(cert.lambda.asDiagonal() * IC) : 0.0;
    cert.norm_ok = cert.operator_norm <= cert.norm_bound + 1e-10 * (1.0 + cert.norm_bound);

    const double xk2 = x_k.squaredNorm();
    cert.energy_gap = xk2 - x.squaredNorm() - cert.u.squaredNorm();
    cert.energy_ok = cert.energy_gap >= -1e-10 * (1.0 + xk2);
    return cert;
}

IntegralEstimate integral_estimate_check(const Matrix& phis_raw, const Vector& rs, long k, long i)
{
    check_interval(phis_raw, k, i, "integral_estimate_check");
    if (k < 1)
        throw RangeError("integral_estimate_check: need k >= 1 so that r_{k-1} exists");
    if (rs.size() < i)
        throw DimensionError("integral_estimate_check: r sequence too short");

    IntegralEstimate est;
    const Matrix phisn = normalize_regressors(phis_raw.leftCols(i), rs.head(i));
    const auto bjk = kernels::bjk_series(phisn, k, i);
    const std::vector<double> mu(rs.data(), rs.data() + i);
    est.lhs = kernels::weighted_sum(bjk, mu, k);

    const double r_end = r_at(rs, i - 1);
    const double r_start = r_at(rs, k - 1);
    est.rhs = r_end * (std::log(r_end) - std::log(r_start)) - (r_end - r_start);
    est.holds = est.lhs <= est.rhs + 1e-9 * (1.0 + std::abs(est.rhs));
    return est;
}

double dk_term(const Vector& rs, long t_prev, long t_cur)
{
    if (!(t_prev < t_cur))
        throw RangeError("dk_term: need t_prev < t_cur");
    const double r_cur = r_at(rs, t_cur - 1);
    const double r_prev = r_at(rs, t_prev - 1);
    if (r_cur < 1.0 || r_prev < 1.0)
        throw DomainError("dk_term: r values must be >= 1");
    return r_cur * (std::log(r_cur) - std::log(r_prev)) + r_prev;
}

std::vector<CriterionPoint> criterion_partial_sums(const Matrix& phis_raw, const Vector& rs,
                                                   const BlockSchedule& schedule,
                                                   CriterionVariant variant)
{
    std::vector<CriterionPoint> out;
    double running = 0.0;
    const long len = phis_raw.cols();
    for (int k = 2; k <= schedule.max_k(); ++k) {
        const long lo = schedule.t[k - 2];
        const long hi = schedule.t[k - 1];
        if (hi > len)
            break;
        CriterionPoint pt{k, 0.0, 0.0, 0.0, running, hi == lo};
        if (!pt.empty_block) {
            SymmetricMatrix S(phis_raw.rows());
            for (long j = lo; j < hi; ++j)
                S.add_outer(phis_raw.col(j));
            pt.lambda_min = std::max(0.0, eig_extremes(S).lambda_min);

            if (variant == CriterionVariant::Dk) {
                pt.denominator = dk_term(rs, lo, hi);
            } else {
                double max_mu = 0.0;
                Matrix phisn(phis_raw.rows(), hi - lo);
                for (long j = lo; j < hi; ++j) {
                    max_mu = std::max(max_mu, rs(j));
                    phisn.col(j - lo) = phis_raw.col(j) / std::sqrt(rs(j));
                }
                const auto bjk = kernels::bjk_series(phisn, 0, hi - lo);
                const std::span<const double> mu(rs.data() + lo, hi - lo);
                const double sum_muB = kernels::weighted_sum(bjk, mu, 0);
                const double root = std::sqrt(max_mu) + std::sqrt(sum_muB);
                pt.denominator = root * root;
            }
            pt.term = pt.denominator > 0.0 ? std::max(0.0, pt.lambda_min / pt.denominator) : 0.0;
        }
        running += pt.term;
        pt.partial_sum = running;
        out.push_back(pt);
    }
    return out;
}

bool MainTheoremLedger::all_pass() const
{
    return std::all_of(rows.begin(), rows.end(), [](const LedgerRow& r) { return r.pass || !r.applicable; });
}

void MainTheoremLedger::append(const MainTheoremLedger& other)
{
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

LedgerRow make_row(std::string name, long k, double lhs, double rhs, double tol)
{
    LedgerRow row{std::move(name), k, lhs, rhs, rhs - lhs, false};
    row.pass = std::isfinite(lhs) && lhs <= rhs + tol * (1.0 + std::abs(rhs));
    return row;
}

MainTheoremLedger weyl_split_check(const SymmetricMatrix& S_end, const SymmetricMatrix& S_start,
                                   double kappa_bound_M, double alpha, double r_end, int dim,
                                   long k)
{
    const auto end = eig_extremes(S_end);
    const auto start = eig_extremes(S_start);
    const double diff_min = eig_extremes(S_end - S_start).lambda_min;
    const double log_r = std::log(r_end);
    const double envelope = log_r > 0.0 ? kappa_bound_M * std::pow(log_r, alpha) : 0.0;
    const double kappa = end.lambda_min > kSingularThreshold * end.lambda_max
                             ? end.lambda_max / end.lambda_min
                             : std::numeric_limits<double>::infinity();
    const double trace_floor =
        envelope > 0.0 ? S_end.trace() / (dim * envelope) : std::numeric_limits<double>::infinity();

    MainTheoremLedger ledger;
    ledger.rows.push_back(make_row("weyl", k, end.lambda_min - start.lambda_max, diff_min));
    LedgerRow env = make_row("kappa_envelope", k, kappa, envelope);
    env.applicable = std::isfinite(kappa);
    LedgerRow lower = make_row("trace_lower", k, trace_floor, end.lambda_min);
    LedgerRow block = make_row("block_lower", k, trace_floor - S_start.trace(), diff_min);
    lower.applicable = block.applicable = env.applicable && env.pass;
    ledger.rows.push_back(env);
    ledger.rows.push_back(lower);
    ledger.rows.push_back(make_row("trace_upper", k, start.lambda_max, S_start.trace()));
    ledger.rows.push_back(block);
    return ledger;
}

void write_blocks_csv(std::ostream& os, const std::vector<BlockBoundReport>& reports)
{
    CsvWriter csv(os);
    csv.header({"k_start", "k_end", "lambda_min_S", "max_mu", "sum_muB", "bound_value",
                "exact_norm_sq", "criterion_term", "holds"});
    for (const auto& r : reports) {
        csv.field(r.k_start).field(r.k_end).field(r.lambda_min_S).field(r.max_mu);
        csv.field(r.sum_muB).field(r.bound_value).field(r.exact_norm_sq).field(r.criterion_term);
        csv.field(r.holds);
        csv.end_row();
    }
}

void write_ledger_csv(std::ostream& os, const MainTheoremLedger& ledger)
{
    CsvWriter csv(os);
    csv.header({"name", "k", "lhs", "rhs", "slack", "pass", "applicable"});
    for (const auto& r : ledger.rows) {
        csv.field(r.name).field(r.k).field(r.lhs).field(r.rhs).field(r.slack).field(r.pass);
        csv.field(r.applicable);
        csv.end_row();
    }
}

} // namespace sglab
