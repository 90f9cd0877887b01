#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sglab {

/// Minimal CSV emitter. Reals are printed with 17 significant digits so that
/// reruns are byte-identical and values round-trip.
class CsvWriter
{
public:
    explicit CsvWriter(std::ostream& os);

    void header(const std::vector<std::string>& columns);

    CsvWriter& field(double value);
    CsvWriter& field(long value);
    CsvWriter& field(int value) { return field(static_cast<long>(value)); }
    CsvWriter& field(bool value);
    CsvWriter& field(const std::string& value);
    CsvWriter& field(const char* value) { return field(std::string(value)); }
    CsvWriter& fields(const Eigen::Ref<const Eigen::VectorXd>& values);

    void end_row();

private:
    void separator();

    std::ostream& m_os;
    bool m_first = true;
};

std::string format_real(double value);

} // namespace sglab
