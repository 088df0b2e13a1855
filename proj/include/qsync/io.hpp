#pragma once

#include <string>
#include <string_view>

#include "qsync/correlation_dynamics.hpp"
#include "qsync/kuramoto.hpp"
#include "qsync/wave_oracle.hpp"

namespace qsync::io {

// Shortest text form that round-trips a double exactly.
std::string format_double(double v);

// 64-bit FNV-1a of the bytes, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

// Comment header carried by every CSV file. The timestamp line is the only
// part allowed to differ between reruns of the same configuration.
std::string csv_metadata(const std::string& config_hash, bool timestamp);

// Body: header `t, re_z_j_k, im_z_j_k, ..., lambda` over ordered pairs j<k
// (1-based), one row per recorded step.
std::string trajectory_csv(const Trajectory& traj);

// Body: header `t, theta_1..theta_N, R`, one row per recorded step.
std::string kuramoto_csv(const KuramotoTrajectory& traj);

// Body: header `t, x, density_1..density_N`; one row per grid point per
// stored snapshot, snapshots in time order.
std::string wave_density_csv(const WaveTrajectory& traj);

// Writes content to path, creating parent directories as needed.
void write_file(const std::string& path, const std::string& content);

}  // namespace qsync::io
