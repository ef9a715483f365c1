// csv.hpp: CSV reading/writing and atomic output files.

#pragma once

#include "cavsync/integrate.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace cavsync {

// Doubles are written with 17 significant digits, so every value round trips.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void header(std::initializer_list<std::string> names);
    void header(const std::vector<std::string>& names);
    void row_begin() { first_ = true; }
    void field(double v);
    void field_text(const std::string& s);
    void row_end();

private:
    std::ostream& out_;
    bool first_ = true;
};

std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] std::vector<double> values(const std::string& name) const;
};

// Numeric table with a header row; "nan" and "inf" are accepted.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

// Writes `t` followed by every channel of the series.
void write_timeseries_csv(std::ostream& out, const TimeSeries& series);
TimeSeries timeseries_from_csv(const CsvTable& table);

// Output written to "<path>.partial" and renamed onto <path> by commit().
// Without commit the .partial file stays as a marker of the failed run.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path path);
    std::ofstream& stream() { return out_; }
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path partial_;
    std::ofstream out_;
};

}  // namespace cavsync
