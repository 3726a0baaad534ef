#pragma once

// File formats: trajectory and histogram CSV, flat key=value configs,
// SVG quick-looks and JSON-lines check reports.

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qjump/record.hpp"
#include "qjump/stats.hpp"

namespace qjump::io {

/// Ordered "# key=value" lines written above the CSV header.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct TrajectoryTable {
    std::vector<double> time;
    std::vector<double> mean_n;
    std::vector<double> var_n;
    std::vector<double> quad_phase;  // NaN where the mode has no cavity
    std::vector<double> i_h_raw;
    std::vector<double> i_h_filtered;

    std::size_t size() const { return time.size(); }
};

TrajectoryTable make_table(const sme::TrajectoryRecord& rec, const record::FilteredSeries& filtered);

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);

void write_trajectory_csv(std::ostream& os, const TrajectoryTable& table, const Metadata& meta);

struct TrajectoryDocument {
    Metadata meta;
    TrajectoryTable table;
};

TrajectoryDocument read_trajectory_csv(std::istream& is);

struct HistogramTable {
    std::vector<double> weight;
    std::vector<double> thermal;
};

void write_histogram_csv(std::ostream& os, const HistogramTable& table, const Metadata& meta);

struct HistogramDocument {
    Metadata meta;
    HistogramTable table;
};

HistogramDocument read_histogram_csv(std::istream& is);

/// Flat "key = value" text; '#' starts a comment. Later keys win.
using Config = std::map<std::string, std::string>;
Config parse_config(std::istream& is);

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line plot, one polyline per series on shared axes.
void write_svg(std::ostream& os, const std::string& title, const std::vector<SvgSeries>& series,
               const std::string& xlabel, const std::string& ylabel);

/// Bar chart of a histogram against a reference law.
void write_histogram_svg(std::ostream& os, const std::string& title, const HistogramTable& table);

struct CheckResult {
    std::string suite;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double expected = 0.0;
    std::string detail;
};

std::string to_json_line(const CheckResult& r);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace qjump::io
