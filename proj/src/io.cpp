#include "pbec/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pbec/errors.hpp"
#include "pbec/version.hpp"

namespace pbec {

std::map<std::string, std::string> output_metadata(const RunConfig& cfg,
                                                   const Scene& scene,
                                                   int hierarchy_rank_total) {
    std::map<std::string, std::string> md;
    md["artifact"] = "pbec";
    md["artifact_version"] = PBEC_VERSION;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    md["config_hash"] = hash;
    md["n_modes"] = std::to_string(scene.n_modes());
    md["n_bins"] = std::to_string(scene.n_bins());
    md["grid_per_axis"] = std::to_string(scene.grid.per_axis);
    md["cell_area"] = format_double(scene.grid.cell_area);
    md["hierarchy_rank_total"] = std::to_string(hierarchy_rank_total);
    md["representation"] = cfg.full_field ? "full_field" : "hierarchical";

    // resolved config, line by line, under the config. prefix
    std::stringstream ss(cfg.serialize());
    std::string line;
    while (std::getline(ss, line)) {
        const size_t eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        md["config." + line.substr(0, eq)] = line.substr(eq + 3);
    }
    return md;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> columns,
                     const std::map<std::string, std::string>& metadata)
    : path_(std::move(path)), n_cols_(columns.size()) {
    for (const auto& [k, v] : metadata) buffer_ += "# " + k + " = " + v + "\n";
    for (size_t c = 0; c < columns.size(); ++c) {
        if (c) buffer_ += ",";
        buffer_ += csv_escape(columns[c]);
    }
    buffer_ += "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != n_cols_)
        throw std::logic_error("CSV row width mismatch in " + path_);
    for (size_t c = 0; c < values.size(); ++c) {
        if (c) buffer_ += ",";
        buffer_ += format_double(values[c]);
    }
    buffer_ += "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != n_cols_)
        throw std::logic_error("CSV row width mismatch in " + path_);
    for (size_t c = 0; c < values.size(); ++c) {
        if (c) buffer_ += ",";
        buffer_ += csv_escape(values[c]);
    }
    buffer_ += "\n";
}

void CsvWriter::close() {
    if (closed_) return;
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw SolverError("cannot write output file " + path_);
    out << buffer_;
    closed_ = true;
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

} // namespace pbec
