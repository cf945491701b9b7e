#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scns/dynamics.hpp"

namespace scns {

/// Fixed header of an "SCNS1" snapshot.
struct SnapshotHeader {
  TorusGrid grid;
  int noise_modes = 0;
  double t = 0.0;
  ModelParams params;
};

/// Bit-exact layout: "SCNS1", u32 (d, n, N, K), f64 (t, L, a, γ, μ, η, M₀, ε, δ, Γ, R),
/// then ρ samples and each u component's samples, row-major, little-endian.
std::vector<std::uint8_t> encode_snapshot(const State& state, const ModelParams& params, int noise_modes);
State decode_snapshot(const std::vector<std::uint8_t>& bytes, SnapshotHeader* header = nullptr);

void write_snapshot(const std::filesystem::path& path, const State& state, const ModelParams& params,
                    int noise_modes);
State read_snapshot(const std::filesystem::path& path, SnapshotHeader* header = nullptr);

/// Trajectory index: CSV with columns t, mass, energy, kinetic, sobolev12_sq, min_rho, seed.
std::string trajectory_csv(const TrajectoryRecord& record);
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& record);
std::vector<IndexRow> read_trajectory_csv(const std::filesystem::path& path);

/// Wiener increments: "SCNSW1", u32 K, u64 steps, f64 Δt, then steps×K f64 values.
void write_increments(const std::filesystem::path& path, const TrajectoryRecord& record);
std::vector<double> read_increments(const std::filesystem::path& path, int* modes = nullptr,
                                    double* dt = nullptr);

/// Writes `bytes` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace scns
