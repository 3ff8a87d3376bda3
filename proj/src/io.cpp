#include "ratefield/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ratefield {

namespace {

std::ofstream open_out(const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw InvalidArgument("cannot open for writing: " + filename);
  out.precision(17);
  return out;
}

struct CsvReader {
  std::ifstream in;
  std::string filename;
  long line_no = 0;

  explicit CsvReader(const std::string& fname) : in(fname), filename(fname) {
    if (!in) throw InvalidArgument("cannot open: " + fname);
  }

  bool next(std::vector<double>& fields, long expected) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      fields.clear();
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          fields.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw InvalidArgument(filename + ":" + std::to_string(line_no) +
                                ": cannot parse '" + cell + "' as a number");
        }
      }
      if (expected > 0 && static_cast<long>(fields.size()) != expected)
        throw InvalidArgument(filename + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(expected) + " columns, got " +
                              std::to_string(fields.size()));
      return true;
    }
    return false;
  }

  void expect_header(const std::string& header) {
    std::string line;
    if (!std::getline(in, line))
      throw InvalidArgument(filename + ": empty file, expected header '" + header + "'");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
      throw InvalidArgument(filename + ":1: expected header '" + header + "', got '" +
                            line + "'");
  }
};

}  // namespace

void write_path_csv(const std::string& filename, const LogRatePath& path) {
  std::ofstream out = open_out(filename);
  out << "time,value\n";
  for (Index j = 0; j < path.size(); ++j)
    out << path.grid().time_at(j) << "," << path[j] << "\n";
}

LogRatePath read_path_csv(const std::string& filename) {
  CsvReader reader(filename);
  reader.expect_header("time,value");
  std::vector<double> times, values, fields;
  while (reader.next(fields, 2)) {
    times.push_back(fields[0]);
    values.push_back(fields[1]);
  }
  if (times.size() < 3)
    throw InvalidArgument(filename + ": a path needs at least 3 rows");
  if (std::abs(times.front()) > 1e-12)
    throw InvalidArgument(filename + ": path must start at time 0");
  const Index n = static_cast<Index>(times.size()) - 1;
  const double dt = times.back() / static_cast<double>(n);
  for (Index j = 0; j <= n; ++j)
    if (std::abs(times[j] - dt * static_cast<double>(j)) > 1e-6 * (1.0 + times.back()))
      throw InvalidArgument(filename + ":" + std::to_string(j + 2) +
                            ": time values are not uniformly spaced");
  TimeGrid grid(times.back(), n);
  return LogRatePath(grid,
                     Eigen::Map<Eigen::VectorXd>(values.data(), n + 1));
}

void write_spikes_csv(const std::string& filename, const SpikeTrain& spikes) {
  std::ofstream out = open_out(filename);
  out << "time\n";
  for (Index i = 0; i < spikes.count(); ++i) out << spikes.times()[i] << "\n";
}

SpikeTrain read_spikes_csv(const std::string& filename) {
  CsvReader reader(filename);
  reader.expect_header("time");
  std::vector<double> times, fields;
  while (reader.next(fields, 1)) times.push_back(fields[0]);
  std::sort(times.begin(), times.end());
  return SpikeTrain(
      Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Index>(times.size())));
}

void write_counts_csv(const std::string& filename, const TimeGrid& grid,
                      const Eigen::VectorXi& counts) {
  std::ofstream out = open_out(filename);
  out << "time,count\n";
  for (Index j = 0; j < counts.size(); ++j)
    out << grid.time_at(j) << "," << counts[j] << "\n";
}

void write_mentions_csv(const std::string& filename,
                        const std::vector<MentionRecord>& records) {
  std::ofstream out = open_out(filename);
  out << "i,f\n";
  for (const auto& r : records) out << r.i << "," << r.f << "\n";
}

std::vector<MentionRecord> read_mentions_csv(const std::string& filename) {
  CsvReader reader(filename);
  reader.expect_header("i,f");
  std::vector<MentionRecord> records;
  std::vector<double> fields;
  while (reader.next(fields, 2)) records.push_back({fields[0], fields[1]});
  return records;
}

void write_histogram_csv(const std::string& filename, const HistogramTable& hist) {
  std::ofstream out = open_out(filename);
  out << "x,density,se,gauss_ref\n";
  for (Index b = 0; b < hist.centers.size(); ++b)
    out << hist.centers[b] << "," << hist.density[b] << "," << hist.se[b] << ","
        << hist.gauss_ref[b] << "\n";
}

void write_table_csv(const std::string& filename,
                     const std::vector<std::string>& columns,
                     const Eigen::MatrixXd& rows) {
  if (static_cast<Index>(columns.size()) != rows.cols())
    throw InvalidArgument("write_table_csv: column names do not match data");
  std::ofstream out = open_out(filename);
  for (size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
  for (Index r = 0; r < rows.rows(); ++r)
    for (Index c = 0; c < rows.cols(); ++c)
      out << rows(r, c) << (c + 1 < rows.cols() ? ',' : '\n');
}

}  // namespace ratefield
