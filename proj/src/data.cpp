#include "hqrc/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"
#include "hqrc/rng.hpp"
#include "json.hpp"

namespace hqrc::data {

using Eigen::Index;
using json = nlohmann::json;

namespace {
constexpr std::string_view kMagic{"GSF1\r\n\x1a\n", 8};
constexpr int kVersion = 1;
}  // namespace

LandMask LandMask::all_ocean(int n_lat, int n_lon) {
  return {n_lat, n_lon, std::vector<std::uint8_t>(static_cast<std::size_t>(n_lat) * n_lon, 1)};
}

std::size_t LandMask::n_kept() const {
  std::size_t n = 0;
  for (auto v : ocean) n += v ? 1 : 0;
  return n;
}

std::vector<std::size_t> LandMask::kept_cells() const {
  std::vector<std::size_t> cells;
  cells.reserve(n_kept());
  for (std::size_t c = 0; c < ocean.size(); ++c)
    if (ocean[c]) cells.push_back(c);
  return cells;
}

std::vector<std::uint8_t> encode_series(const GsfDataset& ds) {
  const auto& s = ds.series;
  const auto& g = s.grid;
  if (ds.mask.n_lat != g.n_lat || ds.mask.n_lon != g.n_lon || ds.mask.ocean.size() != g.n_cells()) {
    throw DomainError("mask shape does not match the grid");
  }
  if (s.values.size() != g.n_cells() * static_cast<std::size_t>(s.n_time)) {
    throw DomainError("value count does not match n_time × n_lat × n_lon");
  }
  if (!s.dates.empty() && s.dates.size() != static_cast<std::size_t>(s.n_time)) {
    throw DomainError("date table length does not match n_time");
  }
  json header = {{"version", kVersion},     {"n_time", s.n_time},     {"n_lat", g.n_lat},
                 {"n_lon", g.n_lon},        {"lat0", g.lat0},         {"lon0", g.lon0},
                 {"dlat", g.dlat},          {"dlon", g.dlon},         {"cadence", s.cadence},
                 {"mask_encoding", "bits-lsb0"}, {"value_type", "f32le"}, {"dates", s.dates}};
  const std::string text = header.dump();

  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u64(text.size());
  w.put_bytes(text);
  std::vector<std::uint8_t> bits((g.n_cells() + 7) / 8, 0);
  for (std::size_t c = 0; c < g.n_cells(); ++c)
    if (ds.mask.ocean[c]) bits[c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
  for (auto b : bits) w.put_u8(b);
  for (float v : s.values) w.put_f32(v);
  return w.take();
}

namespace {

template <typename T>
T header_field(const json& h, const char* name, std::uint64_t offset) {
  if (!h.contains(name)) throw ParseError(std::string("GSF header is missing field '") + name + "'", offset);
  try {
    return h.at(name).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("GSF header field '") + name + "' has the wrong type", offset);
  }
}

}  // namespace

GsfDataset decode_series(std::span<const std::uint8_t> bytes) {
  io::ByteReader rd(bytes);
  if (bytes.size() < kMagic.size() || rd.bytes(kMagic.size(), "magic") != kMagic) {
    throw ParseError("GSF magic mismatch", 0);
  }
  const std::uint64_t header_len = rd.u64("header_length");
  if (header_len == 0 || header_len > rd.remaining()) {
    throw ParseError("GSF field 'header_length' = " + std::to_string(header_len) + " exceeds file size", 8);
  }
  const std::uint64_t header_at = rd.offset();
  json h;
  try {
    h = json::parse(rd.bytes(header_len, "header"));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("GSF header is not valid JSON: ") + e.what(), header_at);
  }
  if (const int v = header_field<int>(h, "version", header_at); v != kVersion) {
    throw ParseError("GSF version " + std::to_string(v) + " is not supported", header_at);
  }
  if (header_field<std::string>(h, "mask_encoding", header_at) != "bits-lsb0" ||
      header_field<std::string>(h, "value_type", header_at) != "f32le") {
    throw ParseError("unsupported GSF mask or value encoding", header_at);
  }

  GsfDataset ds;
  auto& s = ds.series;
  auto& g = s.grid;
  s.n_time = header_field<int>(h, "n_time", header_at);
  g.n_lat = header_field<int>(h, "n_lat", header_at);
  g.n_lon = header_field<int>(h, "n_lon", header_at);
  g.lat0 = header_field<double>(h, "lat0", header_at);
  g.lon0 = header_field<double>(h, "lon0", header_at);
  g.dlat = header_field<double>(h, "dlat", header_at);
  g.dlon = header_field<double>(h, "dlon", header_at);
  s.cadence = header_field<std::string>(h, "cadence", header_at);
  if (h.contains("dates")) s.dates = header_field<std::vector<std::string>>(h, "dates", header_at);
  if (s.n_time < 0 || g.n_lat <= 0 || g.n_lon <= 0) throw ParseError("GSF dims must be positive", header_at);
  if (!s.dates.empty() && s.dates.size() != static_cast<std::size_t>(s.n_time)) {
    throw ParseError("GSF field 'dates' length does not match n_time", header_at);
  }

  const std::uint64_t cells = g.n_cells();
  const std::uint64_t mask_bytes = (cells + 7) / 8;
  const std::uint64_t expected = mask_bytes + 4ull * cells * static_cast<std::uint64_t>(s.n_time);
  if (rd.remaining() != expected) {
    throw ParseError("GSF payload is " + std::to_string(rd.remaining()) + " bytes but header dims imply " +
                         std::to_string(expected),
                     rd.offset());
  }
  ds.mask.n_lat = g.n_lat;
  ds.mask.n_lon = g.n_lon;
  ds.mask.ocean.assign(cells, 0);
  for (std::uint64_t b = 0; b < mask_bytes; ++b) {
    const auto byte = rd.u8("mask");
    for (int k = 0; k < 8; ++k) {
      const std::uint64_t c = b * 8 + static_cast<std::uint64_t>(k);
      if (c < cells) ds.mask.ocean[c] = (byte >> k) & 1u;
    }
  }
  s.values.resize(cells * static_cast<std::uint64_t>(s.n_time));
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const std::uint64_t at = rd.offset();
    const float v = rd.f32("values");
    if (ds.mask.ocean[i % cells] && !std::isfinite(v)) {
      throw ParseError("non-finite value at ocean cell " + std::to_string(i % cells) + ", snapshot " +
                           std::to_string(i / cells),
                       at);
    }
    s.values[i] = v;
  }
  return ds;
}

void write_series(const std::filesystem::path& path, const GsfDataset& ds) {
  io::write_file_atomic(path, encode_series(ds));
}

GsfDataset load_series(const std::filesystem::path& path) { return decode_series(io::read_file(path)); }

Eigen::MatrixXd flatten(const GriddedSeries& series, const LandMask& mask) {
  if (mask.n_lat != series.grid.n_lat || mask.n_lon != series.grid.n_lon) {
    throw DomainError("mask shape does not match the grid");
  }
  const auto kept = mask.kept_cells();
  if (kept.empty()) throw DomainError("mask keeps no cells");
  const std::size_t cells = series.grid.n_cells();
  Eigen::MatrixXd out(static_cast<Index>(kept.size()), series.n_time);
  for (int t = 0; t < series.n_time; ++t) {
    const float* snap = series.values.data() + static_cast<std::size_t>(t) * cells;
    for (std::size_t k = 0; k < kept.size(); ++k) out(static_cast<Index>(k), t) = snap[kept[k]];
  }
  return out;
}

Eigen::VectorXd unflatten(const Eigen::VectorXd& column, const LandMask& mask, double sentinel) {
  const auto kept = mask.kept_cells();
  if (kept.empty()) throw DomainError("mask keeps no cells");
  if (static_cast<std::size_t>(column.size()) != kept.size()) {
    throw DomainError("state length does not match the mask's kept cells");
  }
  Eigen::VectorXd grid = Eigen::VectorXd::Constant(static_cast<Index>(mask.ocean.size()), sentinel);
  for (std::size_t k = 0; k < kept.size(); ++k) grid(static_cast<Index>(kept[k])) = column(static_cast<Index>(k));
  return grid;
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "sinusoid-mix") return SynthKind::kSinusoidMix;
  if (name == "noisy-seasonal") return SynthKind::kNoisySeasonal;
  throw DomainError("unknown synthetic kind '" + name + "'");
}

namespace {

double gaussian(Pcg32& rng) {
  // Box-Muller; keeps the stream definition independent of the standard library.
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::string> weekly_dates(int n, std::chrono::sys_days start) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const std::chrono::year_month_day ymd{start + std::chrono::days{7 * t}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    out.emplace_back(buf);
  }
  return out;
}

constexpr double kPeriods[] = {52.0, 26.0, 130.0, 17.3, 91.0, 39.0, 65.0, 21.7};

}  // namespace

GridGeometry synth_grid(const SynthSpec& spec) {
  return {spec.n_lat, spec.n_lon, -(spec.n_lat - 1) * 0.5, 190.5, 1.0, 1.0};
}

Eigen::MatrixXd synth_field(const SynthSpec& spec) {
  if (spec.n_lat < 1 || spec.n_lon < 1 || spec.n_time < 1) throw DomainError("synthetic dims must be positive");
  const GridGeometry grid = synth_grid(spec);
  const Index cells = static_cast<Index>(grid.n_cells());
  Pcg32 rng(spec.seed, streams::kSynth);

  Eigen::VectorXd mean(cells);
  for (int i = 0; i < spec.n_lat; ++i)
    for (int j = 0; j < spec.n_lon; ++j)
      mean(static_cast<Index>(i) * spec.n_lon + j) =
          26.0 - 0.25 * std::abs(grid.lat(i)) + 0.5 * std::sin(grid.lon(j) * std::numbers::pi / 90.0);

  Eigen::MatrixXd field(cells, spec.n_time);
  if (spec.kind == SynthKind::kSinusoidMix) {
    const int rank = std::clamp(spec.rank, 0, static_cast<int>(std::min<Index>(cells, spec.n_time)));
    Eigen::MatrixXd raw(cells, std::max(rank, 1));
    for (Index c = 0; c < raw.cols(); ++c)
      for (Index k = 0; k < cells; ++k) raw(k, c) = rng.uniform(-1.0, 1.0);
    const Eigen::MatrixXd patterns = raw.householderQr().householderQ() * Eigen::MatrixXd::Identity(cells, raw.cols());
    const double unit = std::sqrt(static_cast<double>(cells));
    Eigen::VectorXd amp(rank), phase(rank);
    for (int r = 0; r < rank; ++r) {
      amp(r) = spec.amplitude * unit * 2.0 * std::pow(0.7, r);
      phase(r) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (int t = 0; t < spec.n_time; ++t) {
      field.col(t) = mean;
      for (int r = 0; r < rank; ++r) {
        const double period = kPeriods[r % std::size(kPeriods)] * (1.0 + 0.1 * (r / std::size(kPeriods)));
        field.col(t) += amp(r) * std::sin(2.0 * std::numbers::pi * t / period + phase(r)) * patterns.col(r);
      }
    }
  } else {
    Eigen::VectorXd season_a(cells), season_b(cells), drift(cells);
    for (Index k = 0; k < cells; ++k) {
      season_a(k) = spec.amplitude * (1.5 + rng.uniform(-0.5, 0.5));
      season_b(k) = spec.amplitude * rng.uniform(-0.5, 0.5);
      drift(k) = spec.amplitude * rng.uniform(0.0, 0.5) / std::max(spec.n_time, 1);
    }
    Eigen::VectorXd noise = Eigen::VectorXd::Zero(cells);
    for (int t = 0; t < spec.n_time; ++t) {
      const double w = 2.0 * std::numbers::pi * t / 52.0;
      for (Index k = 0; k < cells; ++k) noise(k) = 0.8 * noise(k) + 0.1 * spec.amplitude * gaussian(rng);
      field.col(t) = mean + std::sin(w) * season_a + std::cos(w) * season_b + t * drift + noise;
    }
  }

  return field;
}

GsfDataset synth_series(const SynthSpec& spec) {
  const Eigen::MatrixXd field = synth_field(spec);
  GsfDataset ds;
  auto& s = ds.series;
  s.grid = synth_grid(spec);
  s.n_time = spec.n_time;
  s.dates = weekly_dates(spec.n_time, std::chrono::sys_days{std::chrono::year{1981} / 10 / 22});
  ds.mask = LandMask::all_ocean(spec.n_lat, spec.n_lon);
  const Index cells = field.rows();
  s.values.resize(static_cast<std::size_t>(cells) * spec.n_time);
  for (int t = 0; t < spec.n_time; ++t)
    for (Index k = 0; k < cells; ++k)
      s.values[static_cast<std::size_t>(t) * cells + static_cast<std::size_t>(k)] = static_cast<float>(field(k, t));
  return ds;
}

void SplitSpec::validate(Index n_time) const {
  if (!(0 <= train_begin && train_begin < train_end && train_end <= test_begin && test_begin < test_end &&
        test_end <= n_time)) {
    throw DomainError("split must be non-empty, ordered train before test, and within the series");
  }
}

SplitSpec split_at(Index n_time, Index train_end) {
  SplitSpec s{0, train_end, train_end, n_time};
  s.validate(n_time);
  return s;
}

SplitSpec split_by_date(const GriddedSeries& series, const std::string& last_train_date) {
  if (series.dates.empty()) throw DomainError("series carries no date table; split by index instead");
  Index end = 0;
  while (end < series.n_time && series.dates[static_cast<std::size_t>(end)] <= last_train_date) ++end;
  return split_at(series.n_time, end);
}

void RegionSpec::validate() const {
  if (!(lat_min < lat_max) || !(lon_min < lon_max)) throw DomainError("region bounds must satisfy min < max");
}

std::vector<Index> region_indices(const LandMask& mask, const GridGeometry& grid, const RegionSpec& region) {
  region.validate();
  if (mask.n_lat != grid.n_lat || mask.n_lon != grid.n_lon) throw DomainError("mask shape does not match the grid");
  auto wrap = [](double lon) {
    const double w = std::fmod(lon, 360.0);
    return w < 0.0 ? w + 360.0 : w;
  };
  std::vector<Index> out;
  Index flat = 0;
  for (int i = 0; i < grid.n_lat; ++i) {
    for (int j = 0; j < grid.n_lon; ++j) {
      if (!mask.ocean[static_cast<std::size_t>(i) * grid.n_lon + j]) continue;
      const double lat = grid.lat(i);
      const double lon = wrap(grid.lon(j));
      if (lat >= region.lat_min && lat <= region.lat_max && lon >= region.lon_min && lon <= region.lon_max) {
        out.push_back(flat);
      }
      ++flat;
    }
  }
  if (out.empty()) throw DomainError("region selects no ocean cells");
  return out;
}

}  // namespace hqrc::data
