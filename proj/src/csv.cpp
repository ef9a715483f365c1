#include "cavsync/csv.hpp"

#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>

namespace cavsync {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

void CsvWriter::header(std::initializer_list<std::string> names) {
    header(std::vector<std::string>(names));
}

void CsvWriter::header(const std::vector<std::string>& names) {
    row_begin();
    for (const auto& n : names) field_text(n);
    row_end();
}

void CsvWriter::field(double v) { field_text(format_double(v)); }

void CsvWriter::field_text(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
}

void CsvWriter::row_end() { out_ << '\n'; }

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw ValidationError("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::values(const std::string& name) const {
    const auto c = column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r[c]);
    return v;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ValidationError(fmt::format("CSV line {}: '{}' is not a number", line, s));
    }
    return v;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.columns.empty()) {
            t.columns = split(line);
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            throw ValidationError(fmt::format("CSV line {}: expected {} fields, found {}", ln,
                                              t.columns.size(), cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c, ln));
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ValidationError("CSV input is empty");
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_csv(in);
}

void write_timeseries_csv(std::ostream& out, const TimeSeries& series) {
    CsvWriter w(out);
    std::vector<std::string> names{"t"};
    for (const auto& n : series.names()) names.push_back(n);
    w.header(names);
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        w.row_begin();
        w.field(series.times[i]);
        for (std::size_t c = 0; c < series.n_channels(); ++c) w.field(series.channel(c)[i]);
        w.row_end();
    }
}

TimeSeries timeseries_from_csv(const CsvTable& table) {
    TimeSeries s;
    const auto tc = table.column("t");
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c == tc) continue;
        s.add_channel(table.columns[c]);
        cols.push_back(c);
    }
    for (const auto& r : table.rows) {
        s.times.push_back(r[tc]);
        for (std::size_t j = 0; j < cols.size(); ++j) s.channel_mut(j).push_back(r[cols[j]]);
    }
    s.validate();
    return s;
}

AtomicFile::AtomicFile(std::filesystem::path path)
    : path_(std::move(path)), partial_(path_.string() + ".partial"), out_(partial_) {
    if (!out_) throw ValidationError("cannot write " + partial_.string());
}

void AtomicFile::commit() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + partial_.string());
    out_.close();
    std::filesystem::rename(partial_, path_);
}

}  // namespace cavsync
