#include "chainsde/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chainsde {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'S', 'E'};
constexpr std::uint32_t kCacheVersion = 1;

void fail_io(const std::filesystem::path& path, const char* what) {
  throw Error(ErrorCode::IoError, std::string(what) + ": " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvTable::add_row(std::initializer_list<double> values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_double(v));
  rows.push_back(std::move(row));
}

void CsvTable::add_row(std::vector<std::string> values) {
  rows.push_back(std::move(values));
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) fail_io(path, "cannot open for writing");
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) fail_io(path, "write failed");
}

void write_ensemble_csv(const std::filesystem::path& path, const ChainEnsemble& ens) {
  std::ofstream out(path);
  if (!out) fail_io(path, "cannot open for writing");
  out << "path,level,step,t,component,value\n";
  for (int p = 0; p < ens.n_paths; ++p)
    for (int l = 0; l < ens.depth; ++l)
      for (int s = 0; s < ens.grid.n_points(); ++s)
        for (int c = 0; c < ens.dim; ++c)
          out << p << ',' << l << ',' << s << ',' << format_double(ens.grid.time(s))
              << ',' << c << ',' << format_double(ens.at(p, l, s, c)) << "\n";
  if (!out) fail_io(path, "write failed");
}

void write_ensemble_cache(const std::filesystem::path& path, const ChainEnsemble& ens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io(path, "cannot open for writing");
  std::uint64_t count = ens.values.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kCacheVersion), 4);
  out.write(reinterpret_cast<const char*>(&count), 8);
  std::uint32_t dims[4] = {static_cast<std::uint32_t>(ens.n_paths),
                           static_cast<std::uint32_t>(ens.depth),
                           static_cast<std::uint32_t>(ens.grid.n_steps),
                           static_cast<std::uint32_t>(ens.dim)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(&ens.grid.t0), 8);
  out.write(reinterpret_cast<const char*>(&ens.grid.dt), 8);
  out.write(reinterpret_cast<const char*>(&ens.seed), 8);
  out.write(reinterpret_cast<const char*>(ens.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) fail_io(path, "write failed");
}

ChainEnsemble read_ensemble_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io(path, "cannot open for reading");
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail_io(path, "bad cache magic");
  if (version != kCacheVersion) fail_io(path, "unsupported cache version");
  std::uint32_t dims[4];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  ChainEnsemble ens;
  ens.n_paths = static_cast<int>(dims[0]);
  ens.depth = static_cast<int>(dims[1]);
  ens.grid.n_steps = static_cast<int>(dims[2]);
  ens.dim = static_cast<int>(dims[3]);
  in.read(reinterpret_cast<char*>(&ens.grid.t0), 8);
  in.read(reinterpret_cast<char*>(&ens.grid.dt), 8);
  in.read(reinterpret_cast<char*>(&ens.seed), 8);
  std::uint64_t expect = static_cast<std::uint64_t>(ens.n_paths) * ens.depth *
                         ens.grid.n_points() * ens.dim;
  if (count != expect) fail_io(path, "cache size mismatch");
  ens.values.resize(count);
  in.read(reinterpret_cast<char*>(ens.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail_io(path, "truncated cache");
  return ens;
}

void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve) {
  CsvTable table;
  table.header = {"y", "value"};
  for (int i = 0; i < curve.mesh.n_nodes; ++i)
    table.add_row({curve.mesh.node(i), curve.values[i]});
  write_csv(path, table);
}

void write_gaussian_flow_csv(const std::filesystem::path& path,
                             const GaussianLawFlow& flow) {
  const int d = flow.depth();
  CsvTable table;
  table.header.push_back("t");
  for (int i = 0; i < d; ++i) table.header.push_back("mean_" + std::to_string(i));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      table.header.push_back("cov_" + std::to_string(i) + "_" + std::to_string(j));
  for (int s = 0; s < flow.grid.n_points(); ++s) {
    std::vector<std::string> row;
    row.push_back(format_double(flow.grid.time(s)));
    for (int i = 0; i < d; ++i) row.push_back(format_double(flow.level_means(s, i)));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) row.push_back(format_double(flow.covs[s](i, j)));
    table.add_row(std::move(row));
  }
  write_csv(path, table);
}

void write_filter_report_csv(const std::filesystem::path& path,
                             const FilterReport& report) {
  CsvTable table;
  table.header = {"t", "mean", "var", "rho1", "phi_y", "phi_y2", "phi_bump", "ess"};
  for (int s = 0; s < report.grid.n_points(); ++s) {
    double ess = static_cast<int>(report.ess.size()) > s ? report.ess[s] : 0.0;
    table.add_row({report.grid.time(s), report.mean[s], report.var[s], report.rho1[s],
                   report.test_functionals(s, 0), report.test_functionals(s, 1),
                   report.test_functionals(s, 2), ess});
  }
  write_csv(path, table);
}

void write_observation_csv(const std::filesystem::path& path,
                           const ObservationPath& obs) {
  CsvTable table;
  table.header = {"t", "x_k"};
  for (int s = 0; s < obs.grid.n_points(); ++s)
    table.add_row({obs.grid.time(s), obs.values[s]});
  write_csv(path, table);
}

ObservationPath read_observation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io(path, "cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) fail_io(path, "empty observation file");
  std::vector<double> ts, xs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 2) fail_io(path, "malformed observation row");
    ts.push_back(std::stod(fields[0]));
    xs.push_back(std::stod(fields[1]));
  }
  if (ts.size() < 2) fail_io(path, "observation needs at least 2 rows");
  ObservationPath obs;
  obs.provenance = ObsProvenance::External;
  obs.grid.t0 = ts.front();
  obs.grid.n_steps = static_cast<int>(ts.size()) - 1;
  obs.grid.dt = (ts.back() - ts.front()) / obs.grid.n_steps;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(obs.grid.time(static_cast<int>(i)) - ts[i]) > 1e-9 * (1.0 + std::abs(ts[i])))
      throw Error(ErrorCode::GridMismatch, "observation times are not uniform");
  obs.values = Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  obs.validate();
  return obs;
}

}  // namespace chainsde
