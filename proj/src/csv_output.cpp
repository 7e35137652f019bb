#include "nonlocal_flow/csv_output.hpp"

#include <charconv>
#include <fstream>

#include "nonlocal_flow/errors.hpp"

namespace nonlocal_flow {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void close_or_throw(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void emit_csv(const TrajectoryRecord& record,
              const std::filesystem::path& path) {
  {
    std::ofstream out = open_or_throw(path);
    out << "t,lambda,mass";
    for (const auto& s : record.lyapunov_series) out << ",E_" << s.name;
    out << '\n';
    for (std::size_t k = 0; k < record.size(); ++k) {
      out << format_double(record.times[k]) << ','
          << format_double(record.lambda_series[k]) << ','
          << format_double(record.mass_series[k]);
      for (const auto& s : record.lyapunov_series) {
        out << ',' << format_double(s.values[k]);
      }
      out << '\n';
    }
    close_or_throw(out, path);
  }

  std::filesystem::path sidecar = path;
  sidecar += ".final.csv";
  std::ofstream out = open_or_throw(sidecar);
  out << "atom_index,value,weight\n";
  if (!record.snapshots.empty()) {
    const Ensemble& last = record.final_state();
    for (std::size_t i = 0; i < last.size(); ++i) {
      out << i << ',' << format_double(last.values()[i]) << ','
          << format_double(last.weights()[i]) << '\n';
    }
  }
  close_or_throw(out, sidecar);
}

}  // namespace nonlocal_flow
