#ifndef KESTEN_CSV_HPP
#define KESTEN_CSV_HPP

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace kesten {

/// 17 significant digits, '.' decimal point, independent of the global locale.
inline std::string format_double(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Minimal writer for the comma-separated dialect used by all exports.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(std::initializer_list<std::string> cols) { header(std::vector<std::string>(cols)); }
    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            os_ << (i ? "," : "") << cols[i];
        os_ << '\n';
    }

    CsvWriter& cell(double x) { return raw(format_double(x)); }
    CsvWriter& cell(long long x) { return raw(std::to_string(x)); }
    CsvWriter& cell(int x) { return raw(std::to_string(x)); }
    CsvWriter& cell(std::size_t x) { return raw(std::to_string(x)); }
    CsvWriter& cell(const std::string& s) { return raw(s); }
    CsvWriter& cell(const char* s) { return raw(s); }
    void end_row() {
        os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_)
            os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
};

} // namespace kesten

#endif // KESTEN_CSV_HPP
