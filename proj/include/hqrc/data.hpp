#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hqrc::data {

/// Regular lat/lon grid; cell (i, j) is centred at (lat0 + i·dlat, lon0 + j·dlon).
struct GridGeometry {
  int n_lat = 0;
  int n_lon = 0;
  double lat0 = -89.5;
  double lon0 = 0.5;
  double dlat = 1.0;
  double dlon = 1.0;

  std::size_t n_cells() const { return static_cast<std::size_t>(n_lat) * static_cast<std::size_t>(n_lon); }
  double lat(int i) const { return lat0 + i * dlat; }
  double lon(int j) const { return lon0 + j * dlon; }
  bool operator==(const GridGeometry&) const = default;
};

/// Time × lat × lon values (°C), stored time-major as 32-bit floats.
struct GriddedSeries {
  GridGeometry grid;
  int n_time = 0;
  std::string cadence = "weekly";
  /// Optional ISO dates, one per snapshot.
  std::vector<std::string> dates;
  std::vector<float> values;

  float at(int t, int i, int j) const {
    return values[static_cast<std::size_t>(t) * grid.n_cells() + static_cast<std::size_t>(i) * grid.n_lon + j];
  }
  bool operator==(const GriddedSeries&) const = default;
};

/// true = ocean (kept).
struct LandMask {
  int n_lat = 0;
  int n_lon = 0;
  std::vector<std::uint8_t> ocean;

  static LandMask all_ocean(int n_lat, int n_lon);
  std::size_t n_kept() const;
  /// Row-major cell indices of kept cells, in flatten order.
  std::vector<std::size_t> kept_cells() const;
  bool operator==(const LandMask&) const = default;
};

struct GsfDataset {
  GriddedSeries series;
  LandMask mask;
};

/// GSF container, little-endian throughout:
///   bytes 0..7   magic "GSF1\r\n\x1a\n"
///   bytes 8..15  u64 header length H
///   H bytes      UTF-8 JSON header: version, n_time, n_lat, n_lon, lat0, lon0,
///                dlat, dlon, cadence, mask_encoding ("bits-lsb0"), value_type
///                ("f32le"), dates
///   ceil(n_lat·n_lon / 8) bytes  mask, row-major cells, bit k of byte c/8 is
///                cell c with k = c mod 8; 1 = ocean
///   n_time·n_lat·n_lon f32       values, time-major then lat then lon
std::vector<std::uint8_t> encode_series(const GsfDataset& ds);
GsfDataset decode_series(std::span<const std::uint8_t> bytes);
void write_series(const std::filesystem::path& path, const GsfDataset& ds);
GsfDataset load_series(const std::filesystem::path& path);

/// Kept cells only: N_kept × T, one snapshot per column.
Eigen::MatrixXd flatten(const GriddedSeries& series, const LandMask& mask);
/// Kept-cell vector back to a row-major lat×lon field, land filled with `sentinel`.
Eigen::VectorXd unflatten(const Eigen::VectorXd& column, const LandMask& mask, double sentinel);

enum class SynthKind { kSinusoidMix, kNoisySeasonal };

struct SynthSpec {
  SynthKind kind = SynthKind::kSinusoidMix;
  int n_lat = 24;
  int n_lon = 32;
  int n_time = 900;
  /// Number of spatial patterns (sinusoid-mix rank).
  int rank = 5;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
};

/// Deterministic stand-in datasets. sinusoid-mix is mean + Σ_r A_r sin(2πt/P_r + φ_r) p_r
/// with orthonormal patterns p_r, so its anomaly has rank ≤ `rank`.
/// noisy-seasonal adds a weekly-annual cycle, drift and AR(1) noise on every cell.
GsfDataset synth_series(const SynthSpec& spec);
/// The same field in double precision, N_cells × T.
Eigen::MatrixXd synth_field(const SynthSpec& spec);
GridGeometry synth_grid(const SynthSpec& spec);
SynthKind parse_synth_kind(const std::string& name);

/// [train_begin, train_end) precedes [test_begin, test_end).
struct SplitSpec {
  Eigen::Index train_begin = 0;
  Eigen::Index train_end = 0;
  Eigen::Index test_begin = 0;
  Eigen::Index test_end = 0;

  Eigen::Index n_train() const { return train_end - train_begin; }
  Eigen::Index n_test() const { return test_end - test_begin; }
  void validate(Eigen::Index n_time) const;
};

/// Training runs through `train_end` (exclusive) and testing covers the rest.
SplitSpec split_at(Eigen::Index n_time, Eigen::Index train_end);
/// Training covers every snapshot dated on or before `last_train_date` (ISO).
SplitSpec split_by_date(const GriddedSeries& series, const std::string& last_train_date);

struct RegionSpec {
  double lat_min = -10.0;
  double lat_max = 10.0;
  double lon_min = 200.0;
  double lon_max = 250.0;

  static RegionSpec east_pacific() { return {}; }
  void validate() const;
};

/// Indices into the flattened state of kept cells whose centres lie inside
/// the region (inclusive). Longitudes are compared modulo 360.
std::vector<Eigen::Index> region_indices(const LandMask& mask, const GridGeometry& grid, const RegionSpec& region);

}  // namespace hqrc::data
