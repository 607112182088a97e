#include "platoonlab/data_log.hpp"

#include "platoonlab/linalg.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace platoonlab {

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string state_header(int n_x) {
  std::ostringstream os;
  for (int i = 0; i < n_x; ++i) {
    const int vehicle = i / 3 + 1;
    const char* part[] = {"htilde_", "vtilde_", "a_"};
    if (i) os << ",";
    os << part[i % 3] << vehicle;
  }
  return os.str();
}

// One sample per row (columns of the stored matrix become CSV rows).
std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& header) {
  std::ostringstream os;
  os << header << "\n";
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (i) os << ",";
      os << format_value(m(i, j));
    }
    os << "\n";
  }
  return os.str();
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<int>(rows[0].size()),
                    static_cast<int>(rows.size()));
  for (size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows[0].size())
      throw std::runtime_error("ragged CSV in " + path);
    for (size_t i = 0; i < rows[j].size(); ++i) m(i, j) = rows[j][i];
  }
  return m;
}

}  // namespace

DataLog make_data_log(int n_x, int n_u, double t_s) {
  DataLog log;
  log.u0 = Eigen::MatrixXd(n_u, 0);
  log.x0 = Eigen::MatrixXd(n_x, 0);
  log.x1 = Eigen::MatrixXd(n_x, 0);
  log.t_s = t_s;
  return log;
}

void record_sample(DataLog& log, const Eigen::VectorXd& x_k,
                   const Eigen::VectorXd& u_k, const Eigen::VectorXd& x_k1) {
  if (x_k.size() != log.n_x() || x_k1.size() != log.n_x() ||
      u_k.size() != log.n_u()) {
    throw std::invalid_argument("record_sample: dimension mismatch");
  }
  const int t = log.samples();
  log.u0.conservativeResize(Eigen::NoChange, t + 1);
  log.x0.conservativeResize(Eigen::NoChange, t + 1);
  log.x1.conservativeResize(Eigen::NoChange, t + 1);
  log.u0.col(t) = u_k;
  log.x0.col(t) = x_k;
  log.x1.col(t) = x_k1;
}

RankReport validate_log(const DataLog& log) {
  RankReport rep;
  if (log.samples() < log.n_x()) {
    rep.row_rank = std::min(log.samples(), log.n_x());
    rep.ok = false;
    return rep;
  }
  rep.row_rank = numerical_rank(log.x0);
  rep.ok = rep.row_rank == log.n_x();
  return rep;
}

void save_data_log(const DataLog& log, const DataLogMeta& meta,
                   const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
    out << content;
  };
  write("U0.csv", matrix_csv(log.u0, "u"));
  write("X0.csv", matrix_csv(log.x0, state_header(log.n_x())));
  write("X1.csv", matrix_csv(log.x1, state_header(log.n_x())));

  nlohmann::json j;
  j["t_s"] = meta.t_s;
  j["samples"] = meta.samples;
  j["n_x"] = meta.n_x;
  j["scenario_hash"] = meta.scenario_hash;
  j["tau_rear"] = meta.tau_rear;
  j["u_max"] = meta.u_max;
  j["n_vehicles"] = meta.n_vehicles;
  write("metadata.json", j.dump(2) + "\n");
}

DataLog load_data_log(const std::string& dir, DataLogMeta* meta) {
  namespace fs = std::filesystem;
  DataLog log;
  log.u0 = read_matrix_csv((fs::path(dir) / "U0.csv").string());
  log.x0 = read_matrix_csv((fs::path(dir) / "X0.csv").string());
  log.x1 = read_matrix_csv((fs::path(dir) / "X1.csv").string());
  std::ifstream in(fs::path(dir) / "metadata.json");
  if (!in) throw std::runtime_error("missing metadata.json in " + dir);
  nlohmann::json j;
  in >> j;
  log.t_s = j.at("t_s").get<double>();
  if (meta) {
    meta->t_s = log.t_s;
    meta->samples = j.at("samples").get<int>();
    meta->n_x = j.at("n_x").get<int>();
    meta->scenario_hash = j.value("scenario_hash", "");
    meta->tau_rear = j.value("tau_rear", 0.0);
    meta->u_max = j.value("u_max", 0.0);
    meta->n_vehicles = j.value("n_vehicles", 0);
  }
  if (log.x0.cols() != log.u0.cols() || log.x1.cols() != log.u0.cols() ||
      log.x0.rows() != log.x1.rows()) {
    throw std::runtime_error("inconsistent data log shapes in " + dir);
  }
  return log;
}

std::string data_log_hash(const DataLog& log) {
  const std::string canon = matrix_csv(log.u0, "u") +
                            matrix_csv(log.x0, state_header(log.n_x())) +
                            matrix_csv(log.x1, state_header(log.n_x()));
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

}  // namespace platoonlab
