#include "ddshaper/scan_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddshaper {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(),
              static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string scan_to_csv(const ScanResult& scan) {
  std::ostringstream os;
  const bool with_shape = !scan.label.empty();
  os << (with_shape ? "tau_s,f_equiv_hz,p,shape\n" : "tau_s,f_equiv_hz,p\n");
  for (Eigen::Index i = 0; i < scan.tau_values.size(); ++i) {
    const double tau = scan.tau_values[i];
    os << format_double(tau) << ',' << format_double(1.0 / (2.0 * tau)) << ','
       << format_double(scan.p_values[i]);
    if (with_shape) os << ',' << scan.label;
    os << '\n';
  }
  return os.str();
}

void write_scan_csv(const ScanResult& scan,
                    const std::filesystem::path& path) {
  write_file_atomic(path, scan_to_csv(scan));
}

std::string differences_to_csv(const Eigen::ArrayXd& tau,
                               const Eigen::ArrayXd& dp_square,
                               const Eigen::ArrayXd& dp_cosine,
                               const Eigen::ArrayXd& dp_cosine14) {
  std::ostringstream os;
  os << "tau_s,dp_square,dp_cosine,dp_cosine14\n";
  auto cell = [](const Eigen::ArrayXd& a, Eigen::Index i) {
    return a.size() > i ? format_double(a[i]) : std::string("nan");
  };
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    os << format_double(tau[i]) << ',' << cell(dp_square, i) << ','
       << cell(dp_cosine, i) << ',' << cell(dp_cosine14, i) << '\n';
  }
  return os.str();
}

void write_json(const json& j, const std::filesystem::path& path) {
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string gnuplot_script(const std::string& csv_name,
                           const std::string& title) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set xlabel 'tau [s]'\n"
     << "set ylabel 'p'\n"
     << "set title '" << title << "'\n"
     << "plot '" << csv_name << "' using 1:3 skip 1 with linespoints "
     << "title 'p(tau)'\n"
     << "pause -1\n";
  return os.str();
}

}  // namespace ddshaper
