// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lfpsoc/errors.hpp"

namespace lfp {

namespace {

std::string trim(std::string s)
{
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line, const std::string& col)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+')
        ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || p != e)
        throw ParseError("malformed number '" + s + "' in column '" + col + "'", line);
    return v;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open " + path.string());
    return in;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const
{
    auto c = find(name);
    if (!c)
        throw ParseError("missing column '" + name + "'", 1);
    return *c;
}

std::optional<std::size_t> CsvTable::find(const std::string& name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty() || line[0] == '#')
            continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             lineno);
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            row.push_back(parse_double(cells[i], lineno, t.header[i]));
        t.rows.push_back(std::move(row));
        t.lines.push_back(lineno);
    }
    if (!have_header)
        throw ParseError("empty file, no header", lineno);
    return t;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_csv(in);
}

// Shortest text that parses back to the same double.
std::string format_number(double v)
{
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), path_(path), width_(header.size())
{
    if (!out_)
        throw InvalidInput("cannot write " + path.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != width_)
        throw InvalidInput("row width does not match header of " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_)
        throw InvalidInput("write failed for " + path_.string());
}

void CsvWriter::row(std::initializer_list<double> values)
{
    std::vector<std::string> cells;
    for (double v : values)
        cells.push_back(format_number(v));
    row(cells);
}

IngestResult ingest_trace(std::istream& in, const IngestOptions& opt)
{
    CsvTable t = read_csv(in);
    const std::size_t ct = t.column("t");
    const std::size_t ci = t.column("current_a");
    const std::size_t cv = t.column("voltage_v");
    auto cs = t.find("true_soc");
    auto cu = t.find("true_up_v");
    if (t.rows.empty())
        throw ParseError("trace has no samples", 1);

    std::vector<TraceSample> raw;
    for (const auto& r : t.rows)
        raw.push_back({r[ct], r[ci], r[cv], cs ? r[*cs] : 0.0, cu ? r[*cu] : 0.0});

    IngestResult res;
    res.trace.has_truth = cs.has_value();

    double min_step = 0.0;
    bool uniform = true;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        double step = raw[i].t - raw[i - 1].t;
        if (!(step > 0.0))
            throw ParseError("time not strictly increasing", t.lines[i]);
        if (i == 1 || step < min_step)
            min_step = step;
    }
    for (std::size_t i = 2; i < raw.size(); ++i) {
        double a = raw[i].t - raw[i - 1].t, b = raw[1].t - raw[0].t;
        if (std::abs(a - b) > 1e-9 * std::max(1.0, b)) {
            uniform = false;
            if (opt.strict && !opt.resample_dt)
                throw ParseError("non-uniform sample spacing", t.lines[i]);
        }
    }
    double native_dt = raw.size() > 1 ? raw[1].t - raw[0].t : opt.resample_dt.value_or(1.0);
    double dt = opt.resample_dt.value_or(uniform ? native_dt : min_step);
    if (!(dt > 0.0))
        throw InvalidInput("resample interval must be positive");

    if (uniform && std::abs(dt - native_dt) <= 1e-12 * dt) {
        res.trace.dt = native_dt;
        res.trace.samples = std::move(raw);
        return res;
    }

    if (!uniform)
        res.warnings.push_back("non-uniform timestamps resampled to dt=" + format_number(dt) + " s by zero-order hold");
    double last_span = raw.size() > 1 ? raw.back().t - raw[raw.size() - 2].t : dt;
    double end = raw.back().t + last_span;
    double t0 = raw.front().t;
    std::size_t src = 0;
    res.trace.dt = dt;
    for (std::size_t j = 0;; ++j) {
        double tj = t0 + static_cast<double>(j) * dt;
        if (tj > end - 1e-9 * dt)
            break;
        while (src + 1 < raw.size() && raw[src + 1].t <= tj + 1e-9 * dt)
            ++src;
        TraceSample s = raw[src];
        s.t = tj;
        res.trace.samples.push_back(s);
    }
    return res;
}

IngestResult ingest_trace(const std::filesystem::path& path, const IngestOptions& opt)
{
    auto in = open_in(path);
    return ingest_trace(in, opt);
}

void write_trace(std::ostream& out, const Trace& trace)
{
    out << (trace.has_truth ? "t,current_a,voltage_v,true_soc,true_up_v\n" : "t,current_a,voltage_v\n");
    for (const auto& s : trace.samples) {
        out << format_number(s.t) << ',' << format_number(s.current) << ',' << format_number(s.voltage);
        if (trace.has_truth)
            out << ',' << format_number(s.true_soc) << ',' << format_number(s.true_up);
        out << '\n';
    }
}

void write_trace(const std::filesystem::path& path, const Trace& trace)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidInput("cannot write " + path.string());
    write_trace(out, trace);
}

OscCurve read_curve(std::istream& in)
{
    CsvTable t = read_csv(in);
    std::size_t cs = t.column("soc");
    std::size_t cv = t.column("ocv_v");
    std::vector<OcvKnot> knots;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (r[cs] < 0.0 || r[cs] > 1.0)
            throw ParseError("soc outside [0, 1]", t.lines[i]);
        if (!knots.empty() && !(r[cs] > knots.back().soc))
            throw ParseError("soc not strictly ascending", t.lines[i]);
        if (!knots.empty() && knots.back().ocv - r[cv] > OscCurve::kDipTolerance)
            throw ParseError("ocv decreases by more than the dip tolerance", t.lines[i]);
        knots.push_back({r[cs], r[cv]});
    }
    try {
        return OscCurve(std::move(knots));
    } catch (const InvalidInput& e) {
        throw ParseError(e.what(), t.lines.empty() ? 1 : t.lines.back());
    }
}

OscCurve read_curve(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_curve(in);
}

void write_curve(const std::filesystem::path& path, const OscCurve& curve)
{
    CsvWriter w(path, {"soc", "ocv_v"});
    for (const auto& k : curve.knots())
        w.row({k.soc, k.ocv});
}

}  // namespace lfp
