#include "sglab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

long BlockSchedule::t_at(int k) const
{
    if (k < 1 || k > max_k())
        throw InsufficientHorizon("schedule: t_" + std::to_string(k) +
                                  " lies beyond the horizon");
    return t[k - 1];
}

void BlockSchedule::require(int k) const
{
    if (k > max_k())
        throw InsufficientHorizon("schedule: horizon reaches only k = " +
                                  std::to_string(max_k()) + ", need k = " + std::to_string(k));
}

double log_factorial(int k)
{
    return std::lgamma(static_cast<double>(k) + 1.0);
}

double factorial_exact(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i)
        f *= i;
    return f;
}

BlockSchedule factorial_schedule(const Vector& rs)
{
    if (rs.size() == 0 || !(rs(0) >= 1.0))
        throw DomainError("factorial_schedule: r_0 must be >= 1");

    BlockSchedule sched;
    for (Eigen::Index n = 1; n < rs.size(); ++n) {
        if (rs(n) < rs(n - 1))
            throw DomainError("factorial_schedule: r must be nondecreasing");
        sched.l_const = std::max(sched.l_const, rs(n) / rs(n - 1));
    }

    // k! is compared exactly up to 20 and in log space beyond.
    auto reaches = [](double r, int k) {
        return k <= 20 ? r >= factorial_exact(k) : std::log(r) >= log_factorial(k);
    };
    int k = 1;
    for (Eigen::Index j = 0; j < rs.size(); ++j) {
        // A jump in r can clear several thresholds at once; those t_k coincide
        // and the blocks between them are empty.
        while (reaches(rs(j), k)) {
            sched.t.push_back(j);
            ++k;
        }
    }
    sched.ratio_certs = verify_ratio(sched, rs);
    return sched;
}

std::vector<RatioCert> verify_ratio(const BlockSchedule& sched, const Vector& rs)
{
    std::vector<RatioCert> certs;
    const double l = sched.l_const;
    for (int k = 2; k <= sched.max_k(); ++k) {
        const long tk = sched.t[k - 1];
        const long tp = sched.t[k - 2];
        if (tk >= rs.size() || tp >= rs.size())
            break;
        const double ratio = rs(tk) / rs(tp);
        RatioCert c{k, k / l, ratio, l * k, false};
        c.pass = c.lower < ratio && ratio < c.upper;
        certs.push_back(c);
    }
    return certs;
}

void write_schedule_csv(std::ostream& os, const BlockSchedule& sched, const Vector& rs)
{
    CsvWriter csv(os);
    csv.header({"k", "t_k", "r_t_k", "ratio", "pass"});
    for (int k = 1; k <= sched.max_k(); ++k) {
        const long tk = sched.t[k - 1];
        csv.field(k).field(tk).field(rs(tk));
        if (k >= 2 && static_cast<std::size_t>(k - 2) < sched.ratio_certs.size()) {
            const auto& c = sched.ratio_certs[k - 2];
            csv.field(c.ratio).field(c.pass);
        } else {
            csv.field("").field("");
        }
        csv.end_row();
    }
}

} // namespace sglab
