#include "qsync/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "qsync/version.hpp"

namespace qsync::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(probe, "%lf", &back);
    if (back == v || (v != v && back != back)) return probe;
  }
  return buf;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_metadata(const std::string& config_hash, bool timestamp) {
  std::string out;
  out += "# qsync ";
  out += kVersion;
  out += "\n# config_hash ";
  out += config_hash;
  out += "\n";
  if (timestamp) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    out += "# generated ";
    out += buf;
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  if (traj.states.empty()) throw std::invalid_argument("trajectory_csv: empty trajectory");
  const int n = traj.states.front().size();
  std::string out = "t";
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      out += ",re_z_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
      out += ",im_z_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
    }
  }
  out += ",lambda\n";
  for (const auto& st : traj.states) {
    out += format_double(st.t);
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        out += ",";
        out += format_double(st.z(j, k).real());
        out += ",";
        out += format_double(st.z(j, k).imag());
      }
    }
    out += ",";
    out += format_double(order_parameter(st.z));
    out += "\n";
  }
  return out;
}

std::string kuramoto_csv(const KuramotoTrajectory& traj) {
  if (traj.states.empty()) throw std::invalid_argument("kuramoto_csv: empty trajectory");
  const int n = traj.states.front().size();
  std::string out = "t";
  for (int j = 0; j < n; ++j) out += ",theta_" + std::to_string(j + 1);
  out += ",R\n";
  for (const auto& st : traj.states) {
    out += format_double(st.t);
    for (int j = 0; j < n; ++j) {
      out += ",";
      out += format_double(st.thetas[j]);
    }
    out += ",";
    out += format_double(kuramoto_order_parameter(st).first);
    out += "\n";
  }
  return out;
}

std::string wave_density_csv(const WaveTrajectory& traj) {
  if (traj.snapshots.empty()) throw std::invalid_argument("wave_density_csv: no snapshots");
  const int n = traj.snapshots.front().psis.cols();
  const auto& grid = traj.grid;
  std::string out = "t,x";
  for (int j = 0; j < n; ++j) out += ",density_" + std::to_string(j + 1);
  out += "\n";
  for (const auto& snap : traj.snapshots) {
    for (int g = 0; g < grid.G; ++g) {
      out += format_double(snap.t);
      out += ",";
      out += format_double(grid.x[g]);
      for (int j = 0; j < n; ++j) {
        out += ",";
        out += format_double(std::norm(snap.psis(g, j)));
      }
      out += "\n";
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace qsync::io
