#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chainsde/estimate.hpp"
#include "chainsde/filter.hpp"
#include "chainsde/simulate.hpp"

namespace chainsde {

// All floating-point output uses 17 significant digits so values round-trip.
std::string format_double(double v);

// A CSV table held in memory; write_csv emits header + rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::initializer_list<double> values);
  void add_row(std::vector<std::string> values);
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Columnar ensemble dump: path, level, step, t, component, value.
void write_ensemble_csv(const std::filesystem::path& path, const ChainEnsemble& ens);

// Binary cache with a 16-byte header: magic "DCSE", u32 version, u64 payload
// dims follow as u32 fields, then raw little-endian doubles.
void write_ensemble_cache(const std::filesystem::path& path, const ChainEnsemble& ens);
ChainEnsemble read_ensemble_cache(const std::filesystem::path& path);

void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve);

// t, per-level means, upper-triangular covariance entries.
void write_gaussian_flow_csv(const std::filesystem::path& path,
                             const GaussianLawFlow& flow);

void write_filter_report_csv(const std::filesystem::path& path,
                             const FilterReport& report);

void write_observation_csv(const std::filesystem::path& path,
                           const ObservationPath& obs);
ObservationPath read_observation_csv(const std::filesystem::path& path);

}  // namespace chainsde
