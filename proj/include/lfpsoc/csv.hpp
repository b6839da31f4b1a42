// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lfpsoc/ecm.hpp"
#include "lfpsoc/osc.hpp"

namespace lfp {

// Numeric CSV table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  // source line of each row

    // Column index by name; throws ParseError naming the column when absent.
    std::size_t column(const std::string& name) const;
    std::optional<std::size_t> find(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

std::string format_number(double v);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void row(std::initializer_list<double> values);

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t width_;
};

struct IngestOptions {
    std::optional<double> resample_dt;
    bool strict = false;
};

struct IngestResult {
    Trace trace;
    std::vector<std::string> warnings;
};

IngestResult ingest_trace(std::istream& in, const IngestOptions& opt = {});
IngestResult ingest_trace(const std::filesystem::path& path, const IngestOptions& opt = {});
void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);

OscCurve read_curve(std::istream& in);
OscCurve read_curve(const std::filesystem::path& path);
void write_curve(const std::filesystem::path& path, const OscCurve& curve);

}  // namespace lfp
