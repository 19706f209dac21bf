#include "slitscan/io.hpp"

#include "slitscan/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slitscan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kGeometryKeys[] = {"wavelength_m",   "slit_width_m", "slit_sep_m",
                                         "l_slits_lens_m", "l_lens_det_m", "d_direct_m",
                                         "focal_m"};

double* geometry_field(Geometry& g, std::string_view key) {
  if (key == "wavelength_m") return &g.wavelength_m;
  if (key == "slit_width_m") return &g.slit_width_m;
  if (key == "slit_sep_m") return &g.slit_sep_m;
  if (key == "l_slits_lens_m") return &g.l_slits_lens_m;
  if (key == "l_lens_det_m") return &g.l_lens_det_m;
  if (key == "d_direct_m") return &g.d_direct_m;
  if (key == "focal_m") return &g.focal_m;
  return nullptr;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r'))
      c.remove_suffix(1);
  }
  return cells;
}

double parse_double(std::string_view cell, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": cannot parse '" << cell << "' as a number";
    throw DataError(msg.str());
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const fs::path& path, std::size_t columns) {
  auto in = open_in(path);
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    const auto cells = split_csv(line);
    if (t.header.empty()) {
      for (const auto c : cells) t.header.emplace_back(c);
      if (t.header.size() != columns) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": expected " << columns
            << " header columns, found " << t.header.size();
        throw DataError(msg.str());
      }
      continue;
    }
    if (cells.size() != columns) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << columns << " columns, found "
          << cells.size();
      throw DataError(msg.str());
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto c : cells) row.push_back(parse_double(c, path, line_no));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty())
    throw DataError(path.string() + ": empty file");
  return t;
}

IntensityProfile uniform_profile(const fs::path& path, const std::vector<double>& x,
                                 std::vector<double> y, bool allow_negative) {
  if (x.size() < 2)
    throw DataError(path.string() + ": need at least two rows");
  const double pitch = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (!(pitch > 0.0))
    throw DataError(path.string() + ": positions must increase");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double expected = x.front() + static_cast<double>(i) * pitch;
    if (std::abs(x[i] - expected) > 1e-6 * pitch) {
      std::ostringstream msg;
      msg << path.string() << ": row " << i + 1 << " breaks the uniform spacing";
      throw DataError(msg.str());
    }
  }
  return {x.front(), pitch, std::move(y), allow_negative};
}

} // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{})
    return "nan";
  return {buf, ptr};
}

std::string geometry_to_json(const Geometry& geom) {
  Geometry g = geom;
  json j = json::object();
  for (const char* key : kGeometryKeys) j[key] = *geometry_field(g, key);
  return j.dump(2);
}

Geometry geometry_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("geometry: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("geometry: expected a JSON object");
  Geometry g;
  for (const char* key : kGeometryKeys) {
    if (!j.contains(key))
      throw ConfigError(std::string("geometry: missing key '") + key + "'");
    if (!j[key].is_number())
      throw ConfigError(std::string("geometry: key '") + key + "' must be a number");
    *geometry_field(g, key) = j[key].get<double>();
  }
  g.validate();
  return g;
}

void write_profile_csv(const fs::path& path, const IntensityProfile& profile) {
  auto out = open_out(path);
  out << "position_m,value\n";
  const auto v = profile.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    out << format_number(profile.position(i)) << ',' << format_number(v[i]) << '\n';
}

void write_field_csv(const fs::path& path, const SampledField& field) {
  write_profile_csv(path, field.intensity());
}

IntensityProfile read_profile_csv(const fs::path& path) {
  const auto t = read_table(path, 2);
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : t.rows) {
    x.push_back(r[0]);
    y.push_back(r[1]);
  }
  return uniform_profile(path, x, std::move(y), true);
}

std::vector<double> FluxTable::by_aperture_offset(Signal signal) const {
  const auto& src = signal == Signal::total ? total : signal == Signal::left ? left : right;
  return {src.rbegin(), src.rend()};
}

FluxTable flux_table(const ScanSeries& series) {
  FluxTable t;
  for (const auto& r : series.records) {
    t.steps.push_back(r.step_index);
    t.s_m.push_back(r.slit_position_m);
    t.total.push_back(r.total_flux);
    t.left.push_back(r.left_signal);
    t.right.push_back(r.right_signal);
  }
  return t;
}

void write_scan_csv(const fs::path& path, const ScanSeries& series,
                    const std::optional<fs::path>& profile_dir) {
  auto out = open_out(path);
  out << "step,s_mm,F,left,right\n";
  for (const auto& r : series.records) {
    out << r.step_index << ',' << format_number(r.slit_position_m * 1e3) << ','
        << format_number(r.total_flux) << ',' << format_number(r.left_signal) << ','
        << format_number(r.right_signal) << '\n';
    if (profile_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%03zu.csv", r.step_index);
      write_profile_csv(*profile_dir / name, r.detector_profile);
    }
  }
}

FluxTable read_scan_csv(const fs::path& path) {
  const auto t = read_table(path, 5);
  const std::vector<std::string> expected = {"step", "s_mm", "F", "left", "right"};
  if (t.header != expected)
    throw DataError(path.string() + ":1: expected header step,s_mm,F,left,right");
  FluxTable f;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[0] < 0.0 || r[0] != std::floor(r[0])) {
      std::ostringstream msg;
      msg << path.string() << ": row " << i + 1 << ": step must be a non-negative integer";
      throw DataError(msg.str());
    }
    f.steps.push_back(static_cast<std::size_t>(r[0]));
    f.s_m.push_back(r[1] * 1e-3);
    f.total.push_back(r[2]);
    f.left.push_back(r[3]);
    f.right.push_back(r[4]);
  }
  if (f.size() == 0)
    throw DataError(path.string() + ": no data rows");
  return f;
}

void write_reconstruction(const fs::path& csv_path, const fs::path& json_path,
                          const ReconstructionResult& result) {
  {
    auto out = open_out(csv_path);
    out << "position_mm,P_hat\n";
    for (std::size_t k = 0; k < result.p_hat.size(); ++k)
      out << format_number(result.positions[k] * 1e3) << ',' << format_number(result.p_hat[k])
          << '\n';
  }
  json j = json::object();
  j["residual_norm"] = result.residual_norm;
  j["effective_rank"] = result.effective_rank;
  j["cutoff"] = result.cutoff;
  j["smoothing_rms"] = result.smoothing_rms_m;
  j["pattern_length"] = result.p_hat.size();
  j["stacked_rows"] = result.stacked_rows;
  j["rank_deficient"] = result.rank_deficient();
  write_text(json_path, j.dump(2) + "\n");
}

IntensityProfile read_reconstruction_csv(const fs::path& path) {
  const auto t = read_table(path, 2);
  if (t.header[0] != "position_mm" || t.header[1] != "P_hat")
    throw DataError(path.string() + ":1: expected header position_mm,P_hat");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : t.rows) {
    x.push_back(r[0] * 1e-3);
    y.push_back(r[1]);
  }
  return uniform_profile(path, x, std::move(y), true);
}

std::string duality_report_json(const DualityReport& r) {
  json j = json::object();
  j["V"] = r.visibility;
  j["D"] = r.distinguishability;
  j["duality"] = r.duality;
  j["violated"] = r.violated;
  j["V_method"] = r.v_method;
  j["D_method"] = r.d_method;
  return j.dump(2);
}

void write_text(const fs::path& path, std::string_view text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace slitscan
