#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "ddshaper/types.hpp"

namespace ddshaper {

// Writes text to path via a temporary file + rename so readers never see a
// partial file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

// Scan CSV: header tau_s,f_equiv_hz,p with f_equiv = 1/(2 tau). A shape
// column is appended when the result carries a label.
std::string scan_to_csv(const ScanResult& scan);
void write_scan_csv(const ScanResult& scan, const std::filesystem::path& path);

// Difference curves of a pulse-shape comparison:
// tau_s,dp_square,dp_cosine,dp_cosine14.
std::string differences_to_csv(const Eigen::ArrayXd& tau,
                               const Eigen::ArrayXd& dp_square,
                               const Eigen::ArrayXd& dp_cosine,
                               const Eigen::ArrayXd& dp_cosine14);

void write_json(const json& j, const std::filesystem::path& path);

// gnuplot script plotting p against tau from a scan CSV.
std::string gnuplot_script(const std::string& csv_name,
                           const std::string& title);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace ddshaper
