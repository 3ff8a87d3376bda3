#pragma once

#include <string>
#include <vector>

#include "ratefield/grid.hpp"
#include "ratefield/spde_sampler.hpp"
#include "ratefield/synth.hpp"

namespace ratefield {

// CSV formats (all files carry a header row):
//   paths       time,value
//   spike lists time       (one event per row)
//   counts      time,count
//   mentions    i,f
//   densities   x,density[,...]
// Parse errors cite the offending line number.

void write_path_csv(const std::string& filename, const LogRatePath& path);
LogRatePath read_path_csv(const std::string& filename);

void write_spikes_csv(const std::string& filename, const SpikeTrain& spikes);
SpikeTrain read_spikes_csv(const std::string& filename);

void write_counts_csv(const std::string& filename, const TimeGrid& grid,
                      const Eigen::VectorXi& counts);

void write_mentions_csv(const std::string& filename,
                        const std::vector<MentionRecord>& records);
std::vector<MentionRecord> read_mentions_csv(const std::string& filename);

void write_histogram_csv(const std::string& filename, const HistogramTable& hist);

// generic numeric table with an explicit header, used for scans and bands
void write_table_csv(const std::string& filename,
                     const std::vector<std::string>& columns,
                     const Eigen::MatrixXd& rows);

}  // namespace ratefield
