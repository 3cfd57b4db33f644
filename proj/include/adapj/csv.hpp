#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adapj/types.hpp"

namespace adapj {
namespace csv {

/// Round-trip-exact double formatting; keeps serialized time series
/// byte-stable across runs and exact on re-parse.
inline std::string fmt(double v) {
  char buf[40];
  for (int prec : {15, 16}) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);  // LF line endings everywhere
  if (!f) fail(ErrorCategory::Io, "cannot open '" + path + "' for writing");
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCategory::Io, "cannot open '" + path + "' for reading");
  return f;
}

}  // namespace csv

/// Dataset schema: t,s_0..s_{ds-1},a_0..a_{da-1}
inline void write_dataset_csv(const std::string& path, const BabblingDataset& data) {
  auto f = csv::open_out(path);
  f << "t";
  for (Eigen::Index i = 0; i < data.state_dim(); ++i) f << ",s_" << i;
  for (Eigen::Index i = 0; i < data.act_dim(); ++i) f << ",a_" << i;
  f << "\n";
  for (const Sample& s : data.samples) {
    f << s.t;
    for (Eigen::Index i = 0; i < s.state.size(); ++i) f << "," << csv::fmt(s.state[i]);
    for (Eigen::Index i = 0; i < s.actuation.size(); ++i) f << "," << csv::fmt(s.actuation[i]);
    f << "\n";
  }
}

inline BabblingDataset read_dataset_csv(const std::string& path, double dt) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line)) fail(ErrorCategory::Data, "empty dataset file '" + path + "'");
  const auto header = csv::split_line(line);
  Eigen::Index ds = 0, da = 0;
  for (const std::string& h : header) {
    if (h.rfind("s_", 0) == 0) ++ds;
    if (h.rfind("a_", 0) == 0) ++da;
  }
  if (header.empty() || header[0] != "t" || ds == 0 || da == 0)
    fail(ErrorCategory::Data, "bad dataset header in '" + path + "'");
  BabblingDataset data;
  data.dt = dt;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != static_cast<std::size_t>(1 + ds + da))
      fail(ErrorCategory::Data, "bad dataset row in '" + path + "'");
    Sample s;
    s.t = std::stol(fields[0]);
    s.state.resize(ds);
    s.actuation.resize(da);
    for (Eigen::Index i = 0; i < ds; ++i) s.state[i] = std::stod(fields[1 + i]);
    for (Eigen::Index i = 0; i < da; ++i) s.actuation[i] = std::stod(fields[1 + ds + i]);
    data.samples.push_back(std::move(s));
  }
  data.validate();
  return data;
}

/// Trajectory schema: t,sd_0..sd_{ds-1}
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto f = csv::open_out(path);
  f << "t";
  for (Eigen::Index i = 0; i < traj.dim(); ++i) f << ",sd_" << i;
  f << "\n";
  for (std::size_t t = 0; t < traj.desired.size(); ++t) {
    f << t;
    for (Eigen::Index i = 0; i < traj.desired[t].size(); ++i)
      f << "," << csv::fmt(traj.desired[t][i]);
    f << "\n";
  }
}

/// Long-format matrix blocks (block,row,col,value); shared by controller
/// matrices and network weights.
inline void write_matrix_blocks_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& blocks) {
  auto f = csv::open_out(path);
  f << "block,row,col,value\n";
  for (const auto& [name, m] : blocks)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        f << name << "," << r << "," << c << "," << csv::fmt(m(r, c)) << "\n";
}

inline std::vector<std::pair<std::string, Eigen::MatrixXd>> read_matrix_blocks_csv(
    const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line) || line != "block,row,col,value")
    fail(ErrorCategory::Data, "bad matrix block header in '" + path + "'");
  struct Entry { Eigen::Index r, c; double v; };
  std::vector<std::pair<std::string, std::vector<Entry>>> raw;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 4) fail(ErrorCategory::Data, "bad matrix block row in '" + path + "'");
    auto it = std::find_if(raw.begin(), raw.end(),
                           [&](const auto& p) { return p.first == fields[0]; });
    if (it == raw.end()) {
      raw.push_back({fields[0], {}});
      it = raw.end() - 1;
    }
    it->second.push_back({std::stol(fields[1]), std::stol(fields[2]), std::stod(fields[3])});
  }
  std::vector<std::pair<std::string, Eigen::MatrixXd>> blocks;
  for (const auto& [name, entries] : raw) {
    Eigen::Index rows = 0, cols = 0;
    for (const Entry& e : entries) {
      rows = std::max(rows, e.r + 1);
      cols = std::max(cols, e.c + 1);
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    for (const Entry& e : entries) m(e.r, e.c) = e.v;
    blocks.emplace_back(name, std::move(m));
  }
  return blocks;
}

}  // namespace adapj
