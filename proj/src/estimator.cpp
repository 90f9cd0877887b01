#include "sglab/estimator.hpp"

#include <cmath>
#include <ostream>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

namespace {

void push_ring(std::deque<Vector>& ring, const Vector& value, int capacity)
{
    if (capacity <= 0)
        return;
    ring.push_front(value);
    while (static_cast<int>(ring.size()) > capacity)
        ring.pop_back();
}

void kahan_add(EstimatorState& s, double x)
{
    const double y = x - s.r_carry;
    const double t = s.r + y;
    s.r_carry = (t - s.r) - y;
    s.r = t;
}

} // namespace

EstimatorState make_estimator(const RegressorLayout& layout, const EstimatorInit& init)
{
    if (layout.d < 1 || layout.l < 1 || layout.p < 0 || layout.q < 0 || layout.r < 0)
        throw DimensionError("make_estimator: invalid layout");
    if (layout.dim() < 1)
        throw DimensionError("make_estimator: empty regressor");

    EstimatorState s;
    s.layout = layout;
    const int m = layout.dim();
    s.theta = init.theta0.value_or(Matrix::Zero(m, layout.d));
    s.phi = init.phi0.value_or(Vector::Zero(m));
    if (s.theta.rows() != m || s.theta.cols() != layout.d)
        throw DimensionError("make_estimator: theta0 has the wrong shape");
    if (s.phi.size() != m)
        throw DimensionError("make_estimator: phi0 has the wrong size");

    if (init.y0) {
        if (init.y0->size() != layout.d)
            throw DimensionError("make_estimator: y0 has the wrong size");
        push_ring(s.y_ring, *init.y0, layout.p);
    }
    if (init.u0) {
        if (init.u0->size() != layout.l)
            throw DimensionError("make_estimator: u0 has the wrong size");
        push_ring(s.u_ring, *init.u0, layout.q);
    }
    return s;
}

Vector form_regressor(const EstimatorState& state)
{
    const auto& L = state.layout;
    Vector phi = Vector::Zero(L.dim());
    Eigen::Index pos = 0;
    auto stack = [&](const std::deque<Vector>& ring, int count, int width) {
        for (int i = 0; i < count; ++i) {
            if (i < static_cast<int>(ring.size()))
                phi.segment(pos, width) = ring[i];
            pos += width;
        }
    };
    stack(state.y_ring, L.p, L.d);
    stack(state.u_ring, L.q, L.l);
    stack(state.residual_ring, L.r, L.d);
    return phi;
}

Vector sg_update(EstimatorState& state, const Vector& y_next, const Vector& u_next)
{
    const auto& L = state.layout;
    if (y_next.size() != L.d || u_next.size() != L.l)
        throw DimensionError("sg_update: observation dimension mismatch");
    if (!y_next.allFinite())
        throw DataError("sg_update: non-finite observation");

    Vector residual = y_next - state.theta.transpose() * state.phi;
    state.theta.noalias() += (state.phi / state.r) * residual.transpose();

    ++state.n;
    push_ring(state.y_ring, y_next, L.p);
    push_ring(state.u_ring, u_next, L.q);
    push_ring(state.residual_ring, residual, L.r);

    state.phi = form_regressor(state);
    kahan_add(state, state.phi.squaredNorm());
    return residual;
}

double estimation_error(const EstimatorState& state, const Matrix& truth)
{
    if (truth.rows() != state.theta.rows() || truth.cols() != state.theta.cols())
        throw DimensionError("estimation_error: shape mismatch");
    return (state.theta - truth).norm();
}

ConditionADiag condition_a_diagnostic(const Matrix& phis, const Vector& rs, const Matrix& eps,
                                      long stride)
{
    const long n_steps = phis.cols();
    if (n_steps < 100)
        throw InsufficientData("condition_a_diagnostic: need at least 100 steps");
    if (rs.size() < n_steps || eps.cols() < n_steps)
        throw DimensionError("condition_a_diagnostic: sequence lengths disagree");
    if (stride < 1)
        throw ConfigError("condition_a_diagnostic: stride must be positive");

    // partial[n] = sum_{i < n} phi_i eps_{i+1}^T / r_i
    std::vector<Matrix> partials;
    std::vector<long> idx;
    Matrix running = Matrix::Zero(phis.rows(), eps.rows());
    for (long i = 0; i < n_steps; ++i) {
        if (i % stride == 0) {
            partials.push_back(running);
            idx.push_back(i);
        }
        running.noalias() += (phis.col(i) / rs(i)) * eps.col(i).transpose();
    }

    ConditionADiag diag;
    diag.partial_sum = running;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t s = 0; s < partials.size(); ++s) {
        const double tail = spectral_norm(running - partials[s]);
        diag.tail_norm_series.emplace_back(idx[s], tail);
        if (2 * idx[s] >= n_steps && tail > 0.0) {
            xs.push_back(std::log(rs(idx[s])));
            ys.push_back(std::log(tail));
        }
    }

    if (xs.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= ys.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        diag.delta_fit = sxx > 0.0 ? -sxy / sxx : 0.0;
    }
    return diag;
}

void write_estimator_csv(std::ostream& os, const std::vector<EstimatorLogRow>& rows)
{
    CsvWriter csv(os);
    csv.header({"n", "r_n", "theta_err", "residual_norm"});
    for (const auto& row : rows) {
        csv.field(row.n).field(row.r).field(row.theta_err).field(row.residual_norm);
        csv.end_row();
    }
}

} // namespace sglab
