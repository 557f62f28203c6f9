#pragma once

#include <map>
#include <string>
#include <vector>

#include "pbec/config.hpp"

namespace pbec {

/// Metadata embedded in every output file: artifact version, config hash,
/// resolved config, solver tolerances, hierarchy depth and grid shape.
std::map<std::string, std::string> output_metadata(const RunConfig& cfg,
                                                   const Scene& scene,
                                                   int hierarchy_rank_total);

/// CSV with '#'-prefixed metadata lines, a header row, and rows of values
/// formatted with 17 significant digits ('.' decimal separator).
class CsvWriter {
public:
    CsvWriter(std::string path, std::vector<std::string> columns,
              const std::map<std::string, std::string>& metadata);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    void close();
    ~CsvWriter();

private:
    std::string path_;
    std::string buffer_;
    size_t n_cols_;
    bool closed_ = false;
};

std::string csv_escape(const std::string& s);

} // namespace pbec
