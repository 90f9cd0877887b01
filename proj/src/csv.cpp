#include "sglab/csv.hpp"

#include <cmath>
#include <cstdio>

namespace sglab {

std::string format_real(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os)
    : m_os(os)
{
}

void CsvWriter::header(const std::vector<std::string>& columns)
{
    for (const auto& c : columns)
        field(c);
    end_row();
}

void CsvWriter::separator()
{
    if (!m_first)
        m_os << ',';
    m_first = false;
}

CsvWriter& CsvWriter::field(double value)
{
    separator();
    m_os << format_real(value);
    return *this;
}

CsvWriter& CsvWriter::field(long value)
{
    separator();
    m_os << value;
    return *this;
}

CsvWriter& CsvWriter::field(bool value)
{
    separator();
    m_os << (value ? 1 : 0);
    return *this;
}

CsvWriter& CsvWriter::field(const std::string& value)
{
    separator();
    m_os << value;
    return *this;
}

CsvWriter& CsvWriter::fields(const Eigen::Ref<const Eigen::VectorXd>& values)
{
    for (Eigen::Index i = 0; i < values.size(); ++i)
        field(values(i));
    return *this;
}

void CsvWriter::end_row()
{
    m_os << '\n';
    m_first = true;
}

} // namespace sglab
