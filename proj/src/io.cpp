#include "qjump/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "qjump/errors.hpp"

namespace qjump::io {

namespace {

const char* const kTrajectoryHeader = "time,mean_n,var_n,quad_phase,i_h_raw,i_h_filtered";
const char* const kHistogramHeader = "n,weight,thermal";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line) {
    const std::string t = trim(field);
    if (t == "nan" || t == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw InvalidArgument("csv: bad number '" + t + "' on line " + std::to_string(line));
    }
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, sep)) out.push_back(f);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

void write_meta(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

// Reads metadata lines and the header; returns the data rows.
std::vector<std::vector<double>> read_rows(std::istream& is, const std::string& header,
                                           Metadata& meta) {
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    std::vector<std::vector<double>> rows;
    const std::size_t columns = split(header, ',').size();
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (seen_header) throw InvalidArgument("csv: metadata after the header");
            const std::string body = trim(line.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            meta.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
            continue;
        }
        if (!seen_header) {
            if (trim(line) != header) throw InvalidArgument("csv: expected header '" + header + "'");
            seen_header = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != columns) {
            throw InvalidArgument("csv: wrong column count on line " + std::to_string(lineno));
        }
        std::vector<double> row;
        row.reserve(columns);
        for (const auto& f : fields) row.push_back(parse_double(f, lineno));
        rows.push_back(std::move(row));
    }
    if (!seen_header) throw InvalidArgument("csv: missing header");
    return rows;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

TrajectoryTable make_table(const sme::TrajectoryRecord& rec, const record::FilteredSeries& filtered) {
    const std::size_t n = rec.size();
    if (rec.photocurrent.size() != n || filtered.values.size() != n) {
        throw DimensionMismatch("make_table: record and filtered series differ in length");
    }
    TrajectoryTable t;
    t.time = rec.times;
    t.mean_n = rec.mean_n;
    t.var_n = rec.var_n;
    t.quad_phase = rec.quad_phase.size() == n
                       ? rec.quad_phase
                       : std::vector<double>(n, std::numeric_limits<double>::quiet_NaN());
    t.i_h_raw = rec.photocurrent;
    t.i_h_filtered = filtered.values;
    return t;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw InvalidArgument("format_double: conversion failed");
    return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryTable& t, const Metadata& meta) {
    const std::size_t n = t.size();
    for (const auto* col : {&t.mean_n, &t.var_n, &t.quad_phase, &t.i_h_raw, &t.i_h_filtered}) {
        if (col->size() != n) throw DimensionMismatch("write_trajectory_csv: ragged columns");
    }
    write_meta(os, meta);
    os << kTrajectoryHeader << '\n';
    for (std::size_t k = 0; k < n; ++k) {
        os << format_double(t.time[k]) << ',' << format_double(t.mean_n[k]) << ','
           << format_double(t.var_n[k]) << ',' << format_double(t.quad_phase[k]) << ','
           << format_double(t.i_h_raw[k]) << ',' << format_double(t.i_h_filtered[k]) << '\n';
    }
}

TrajectoryDocument read_trajectory_csv(std::istream& is) {
    TrajectoryDocument doc;
    const auto rows = read_rows(is, kTrajectoryHeader, doc.meta);
    auto& t = doc.table;
    for (const auto& r : rows) {
        t.time.push_back(r[0]);
        t.mean_n.push_back(r[1]);
        t.var_n.push_back(r[2]);
        t.quad_phase.push_back(r[3]);
        t.i_h_raw.push_back(r[4]);
        t.i_h_filtered.push_back(r[5]);
    }
    return doc;
}

void write_histogram_csv(std::ostream& os, const HistogramTable& t, const Metadata& meta) {
    if (t.weight.size() != t.thermal.size()) {
        throw DimensionMismatch("write_histogram_csv: weight and thermal differ in length");
    }
    write_meta(os, meta);
    os << kHistogramHeader << '\n';
    for (std::size_t n = 0; n < t.weight.size(); ++n) {
        os << n << ',' << format_double(t.weight[n]) << ',' << format_double(t.thermal[n]) << '\n';
    }
}

HistogramDocument read_histogram_csv(std::istream& is) {
    HistogramDocument doc;
    const auto rows = read_rows(is, kHistogramHeader, doc.meta);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k][0] != double(k)) throw InvalidArgument("histogram csv: levels out of order");
        doc.table.weight.push_back(rows[k][1]);
        doc.table.thermal.push_back(rows[k][2]);
    }
    return doc;
}

Config parse_config(std::istream& is) {
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config: expected key = value on line " + std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidArgument("config: empty key on line " + std::to_string(lineno));
        cfg[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

void write_svg(std::ostream& os, const std::string& title, const std::vector<SvgSeries>& series,
               const std::string& xlabel, const std::string& ylabel) {
    const double W = 720, H = 360, L = 60, R = 20, T = 30, B = 45;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw DimensionMismatch("write_svg: x and y differ in length");
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    }
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > y0)) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
       << escape_xml(title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
       << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\">"
           << format_double(std::round(xv * 1000) / 1000) << "</text>\n";
        os << "<text x=\"" << L - 4 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
           << format_double(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">"
       << escape_xml(xlabel) << "</text>\n";
    os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << (T + H - B) / 2 << ")\">" << escape_xml(ylabel) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& sr = series[s];
        const char* color = kColors[s % std::size(kColors)];
        // thin long series so the file stays small
        const std::size_t stride = std::max<std::size_t>(1, sr.x.size() / 4000);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
        for (std::size_t k = 0; k < sr.x.size(); k += stride) {
            if (!std::isfinite(sr.x[k]) || !std::isfinite(sr.y[k])) continue;
            os << px(sr.x[k]) << ',' << py(sr.y[k]) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 + 13 * double(s)
           << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape_xml(sr.label) << "</text>\n";
    }
    os << "</svg>\n";
}

void write_histogram_svg(std::ostream& os, const std::string& title, const HistogramTable& t) {
    const double W = 480, H = 320, L = 50, R = 20, T = 30, B = 40;
    const std::size_t n = t.weight.size();
    double top = 0;
    for (std::size_t k = 0; k < n; ++k) top = std::max({top, t.weight[k], t.thermal[k]});
    if (!(top > 0)) top = 1;
    const double slot = (W - L - R) / double(std::max<std::size_t>(n, 1));
    auto py = [&](double y) { return H - B - y / top * (H - T - B); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
       << escape_xml(title) << "</text>\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double x = L + slot * double(k);
        os << "<rect x=\"" << x + 0.15 * slot << "\" y=\"" << py(t.weight[k]) << "\" width=\""
           << 0.7 * slot << "\" height=\"" << H - B - py(t.weight[k]) << "\" fill=\"#1f77b4\"/>\n";
        os << "<line x1=\"" << x + 0.1 * slot << "\" x2=\"" << x + 0.9 * slot << "\" y1=\""
           << py(t.thermal[k]) << "\" y2=\"" << py(t.thermal[k])
           << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << x + 0.5 * slot << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\">" << k
           << "</text>\n";
    }
    os << "<text x=\"" << W - R << "\" y=\"" << T + 12
       << "\" text-anchor=\"end\" fill=\"#d62728\">thermal</text>\n";
    os << "</svg>\n";
}

std::string to_json_line(const CheckResult& r) {
    nlohmann::json j;
    j["suite"] = r.suite;
    j["check"] = r.name;
    j["passed"] = r.passed;
    j["measured"] = std::isfinite(r.measured) ? nlohmann::json(r.measured) : nlohmann::json(nullptr);
    j["expected"] = std::isfinite(r.expected) ? nlohmann::json(r.expected) : nlohmann::json(nullptr);
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j.dump();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw InvalidArgument("write to '" + path + "' failed");
}

}  // namespace qjump::io
