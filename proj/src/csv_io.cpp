#include "odrl/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef ODRL_VERSION
#define ODRL_VERSION "unknown"
#endif

namespace odrl {

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path, const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(path + ": expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_iteration_csv(const std::string& path, const std::vector<IterationRecord>& log) {
  auto out = open_csv(path);
  out << "iteration,objective_start,objective_after_q,objective,eval_residual,policy_change,"
         "greedy_success\n";
  for (const auto& r : log) {
    out << r.iteration << ',' << format_double(r.objective_start) << ','
        << format_double(r.objective_after_q) << ',' << format_double(r.objective_after_pi) << ','
        << format_double(r.eval_residual) << ',' << format_double(r.policy_change) << ','
        << format_double(r.greedy_success) << '\n';
  }
}

void write_heatmap_csv(const std::string& path, const GridWorld& world,
                       const Eigen::VectorXd& values) {
  if (values.size() != world.num_states()) {
    throw std::invalid_argument("heatmap values do not match the world's state count");
  }
  auto out = open_csv(path);
  out << "x,y,value\n";
  for (StateId s = 0; s < world.num_states(); ++s) {
    const Cell c = world.cell_of(s);
    out << c.x << ',' << c.y << ',' << format_double(values(s)) << '\n';
  }
}

void write_state_values_csv(const std::string& path, const Eigen::VectorXd& values) {
  auto out = open_csv(path);
  out << "state,value\n";
  for (Eigen::Index s = 0; s < values.size(); ++s) out << s << ',' << format_double(values(s)) << '\n';
}

Eigen::VectorXd read_state_values_csv(const std::string& path) {
  const auto rows = read_rows(path, "state,value");
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2 || std::stoll(rows[i][0]) != static_cast<long long>(i)) {
      throw std::runtime_error(path + ": malformed row " + std::to_string(i + 2));
    }
    out(static_cast<Eigen::Index>(i)) = std::stod(rows[i][1]);
  }
  return out;
}

void write_state_action_csv(const std::string& path, const Eigen::MatrixXd& table,
                            const std::string& column) {
  auto out = open_csv(path);
  out << "state,action," << column << '\n';
  for (Eigen::Index s = 0; s < table.rows(); ++s) {
    for (Eigen::Index a = 0; a < table.cols(); ++a) {
      out << s << ',' << a << ',' << format_double(table(s, a)) << '\n';
    }
  }
}

void write_curve_csv(const std::string& path, const std::vector<CurveRow>& curve) {
  auto out = open_csv(path);
  out << "episode,env_steps,greedy_success,normalized_final_distance,mean_q_cont,var_q_cont\n";
  for (const auto& r : curve) {
    out << r.episode << ',' << r.env_steps << ',' << format_double(r.greedy_success) << ','
        << format_double(r.normalized_final_distance) << ',' << format_double(r.mean_q_cont) << ','
        << format_double(r.var_q_cont) << '\n';
  }
}

std::vector<CurveRow> read_curve_csv(const std::string& path) {
  const auto rows = read_rows(
      path, "episode,env_steps,greedy_success,normalized_final_distance,mean_q_cont,var_q_cont");
  std::vector<CurveRow> out;
  for (const auto& f : rows) {
    if (f.size() != 6) throw std::runtime_error(path + ": malformed curve row");
    out.push_back({std::stoi(f[0]), std::stoll(f[1]), std::stod(f[2]), std::stod(f[3]),
                   std::stod(f[4]), std::stod(f[5])});
  }
  return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<std::vector<CurveRow>>& curves) {
  if (curves.empty()) throw std::invalid_argument("no curves to aggregate");
  const std::size_t n_rows = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != n_rows) throw std::invalid_argument("curves have different lengths");
  }
  auto out = open_csv(path);
  out << "episode,env_steps";
  for (const char* m : {"greedy_success", "normalized_final_distance", "mean_q_cont"}) {
    out << ',' << m << "_mean," << m << "_median," << m << "_std";
  }
  out << '\n';
  for (std::size_t i = 0; i < n_rows; ++i) {
    const CurveRow& head = curves.front()[i];
    std::vector<double> success, distance, cont;
    for (const auto& c : curves) {
      if (c[i].episode != head.episode) throw std::invalid_argument("curves disagree on episodes");
      success.push_back(c[i].greedy_success);
      distance.push_back(c[i].normalized_final_distance);
      cont.push_back(c[i].mean_q_cont);
    }
    out << head.episode << ',' << head.env_steps;
    for (const auto* v : {&success, &distance, &cont}) {
      out << ',' << format_double(mean_of(*v)) << ',' << format_double(median_of(*v)) << ','
          << format_double(std_of(*v));
    }
    out << '\n';
  }
}

void write_manifest_csv(const std::string& path, const std::vector<ManifestRow>& rows) {
  auto out = open_csv(path);
  out << "file,config_hash,seed,wall_time_s,code_version\n";
  for (const auto& r : rows) {
    out << r.file << ',' << r.config_hash << ',' << r.seed << ',' << format_double(r.wall_time_s)
        << ',' << r.code_version << '\n';
  }
}

const char* code_version() { return ODRL_VERSION; }

}  // namespace odrl
