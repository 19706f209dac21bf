#include "run_config.hpp"

#include <slitscan/error.hpp>
#include <slitscan/io.hpp>

#include <json.hpp>

#include <cmath>
#include <set>
#include <type_traits>

namespace slitscan::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& block, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : block.items()) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok)
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

const json& object_at(const json& parent, const char* key, std::string_view where) {
  const auto& b = parent.at(key);
  if (!b.is_object())
    throw ConfigError(std::string(where) + ": '" + key + "' must be an object");
  return b;
}

template <class T>
void read(const json& block, const char* key, std::string_view where, T& out) {
  if (!block.contains(key))
    return;
  const auto& v = block.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>)
    ok = v.is_boolean();
  else if constexpr (std::is_unsigned_v<T>)
    ok = v.is_number_unsigned();
  else if constexpr (std::is_arithmetic_v<T>)
    ok = v.is_number();
  else
    ok = v.is_string();
  if (!ok)
    throw ConfigError(std::string(where) + ": key '" + key + "' has the wrong type");
  out = v.get<T>();
}

ScanEntry parse_scan(const json& j, std::size_t index) {
  const std::string where = "scans[" + std::to_string(index) + "]";
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  reject_unknown(j, where,
                 {"aperture_width_m", "step_m", "n_steps", "start_m", "stage_ratio", "exposure_s",
                  "frames_per_step", "opening", "reference_half_width_m"});
  ScanEntry e;
  read(j, "aperture_width_m", where, e.scan.aperture_width_m);
  read(j, "step_m", where, e.scan.step_m);
  read(j, "n_steps", where, e.scan.n_steps);
  read(j, "stage_ratio", where, e.scan.stage_ratio);
  read(j, "frames_per_step", where, e.scan.frames_per_step);
  read(j, "reference_half_width_m", where, e.scan.reference_half_width_m);
  if (j.contains("start_m"))
    read(j, "start_m", where, e.scan.start_m);
  else
    e.scan.start_m = -0.5 * static_cast<double>(e.scan.n_steps - 1) * e.scan.step_m;
  if (j.contains("opening")) {
    std::string o;
    read(j, "opening", where, o);
    e.scan.opening = parse_opening(o);
  }
  if (j.contains("exposure_s")) {
    const auto& v = j.at("exposure_s");
    if (v.is_string() && v.get<std::string>() == "auto") {
      e.auto_exposure = true;
    } else if (v.is_number()) {
      e.auto_exposure = false;
      e.scan.exposure_s = v.get<double>();
    } else {
      throw ConfigError(where + ": exposure_s must be a number or \"auto\"");
    }
  }
  e.scan.validate();
  return e;
}

ScanEntry default_scan(double width_m) {
  ScanEntry e;
  e.scan.aperture_width_m = width_m;
  return e;
}

} // namespace

double RunConfig::h_scale() const {
  return metrics.h_scale.value_or(geometry.l_slits_lens_m / geometry.d_direct_m);
}

DetectorConfig RunConfig::detector_for_scan(std::size_t index) const {
  DetectorConfig d = detector;
  d.rng_seed = seed + index;
  return d;
}

RunConfig default_run_config() {
  RunConfig c;
  c.scans = {default_scan(4e-3), default_scan(5e-3)};
  c.detector.noise_enabled = true;
  return c;
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("config: expected a JSON object at top level");
  reject_unknown(j, "config",
                 {"geometry", "source", "scans", "detector", "reconstruction", "metrics",
                  "output_dir", "seed"});
  if (!j.contains("geometry"))
    throw ConfigError("config: missing key 'geometry'");

  RunConfig c = default_run_config();
  c.geometry = geometry_from_json(object_at(j, "geometry", "config").dump());

  if (j.contains("source")) {
    const auto& b = object_at(j, "source", "config");
    reject_unknown(b, "source", {"illumination_tilt", "grid_samples", "grid_half_span_m"});
    read(b, "illumination_tilt", "source", c.source.illumination_tilt);
    read(b, "grid_samples", "source", c.source.grid.samples);
    read(b, "grid_half_span_m", "source", c.source.grid.half_span_m);
  }
  if (j.contains("scans")) {
    const auto& s = j.at("scans");
    if (!s.is_array() || s.empty())
      throw ConfigError("config: 'scans' must be a non-empty array");
    c.scans.clear();
    std::set<std::string> tags;
    for (std::size_t i = 0; i < s.size(); ++i) {
      c.scans.push_back(parse_scan(s[i], i));
      if (!tags.insert(width_tag(c.scans.back().scan.aperture_width_m)).second)
        throw ConfigError("scans[" + std::to_string(i) + "]: duplicate aperture width");
    }
  }
  if (j.contains("detector")) {
    const auto& b = object_at(j, "detector", "config");
    reject_unknown(b, "detector",
                   {"pixel_pitch_m", "n_pixels", "readout_noise_e", "gain", "full_well_e",
                    "noise_enabled", "midline"});
    read(b, "pixel_pitch_m", "detector", c.detector.pixel_pitch_m);
    read(b, "n_pixels", "detector", c.detector.n_pixels);
    read(b, "readout_noise_e", "detector", c.detector.readout_noise_e);
    read(b, "gain", "detector", c.detector.gain);
    read(b, "full_well_e", "detector", c.detector.full_well_e);
    read(b, "noise_enabled", "detector", c.detector.noise_enabled);
    if (b.contains("midline")) {
      std::string m;
      read(b, "midline", "detector", m);
      c.detector.midline = parse_midline(m);
    }
    c.detector.validate();
  }
  if (j.contains("reconstruction")) {
    const auto& b = object_at(j, "reconstruction", "config");
    reject_unknown(b, "reconstruction",
                   {"cutoff", "smoothing_rms_m", "window_m", "clamp_nonnegative"});
    read(b, "cutoff", "reconstruction", c.reconstruction.cutoff);
    read(b, "smoothing_rms_m", "reconstruction", c.reconstruction.smoothing_rms_m);
    read(b, "window_m", "reconstruction", c.reconstruction.window_m);
    read(b, "clamp_nonnegative", "reconstruction", c.reconstruction.clamp_nonnegative);
    if (!(c.reconstruction.smoothing_rms_m >= 0.0) || !(c.reconstruction.window_m > 0.0))
      throw ConfigError("reconstruction: smoothing_rms_m must be >= 0 and window_m > 0");
  }
  if (j.contains("metrics")) {
    const auto& b = object_at(j, "metrics", "config");
    reject_unknown(b, "metrics", {"peak_selector", "guard_px", "h_scale", "prominence"});
    if (b.contains("peak_selector")) {
      std::string p;
      read(b, "peak_selector", "metrics", p);
      c.metrics.peak_selector = parse_peak_selector(p);
    }
    read(b, "guard_px", "metrics", c.metrics.guard_px);
    if (b.contains("h_scale")) {
      double h = 0.0;
      read(b, "h_scale", "metrics", h);
      if (!(h > 0.0)) throw ConfigError("metrics: h_scale must be positive");
      c.metrics.h_scale = h;
    }
    read(b, "prominence", "metrics", c.metrics.prominence);
  }
  if (j.contains("output_dir")) {
    std::string o;
    read(j, "output_dir", "config", o);
    c.output_dir = o;
  }
  read(j, "seed", "config", c.seed);
  return c;
}

std::string canonical_json(const RunConfig& c) {
  json j;
  j["geometry"] = json::parse(geometry_to_json(c.geometry));
  j["source"] = {{"illumination_tilt", c.source.illumination_tilt},
                 {"grid_samples", c.source.grid.samples},
                 {"grid_half_span_m", c.source.grid.half_span_m}};
  j["scans"] = json::array();
  for (const auto& e : c.scans) {
    json s = {{"aperture_width_m", e.scan.aperture_width_m},
              {"step_m", e.scan.step_m},
              {"n_steps", e.scan.n_steps},
              {"start_m", e.scan.start_m},
              {"stage_ratio", e.scan.stage_ratio},
              {"frames_per_step", e.scan.frames_per_step},
              {"opening", std::string(to_string(e.scan.opening))},
              {"reference_half_width_m", e.scan.reference_half_width_m}};
    if (e.auto_exposure)
      s["exposure_s"] = "auto";
    else
      s["exposure_s"] = e.scan.exposure_s;
    j["scans"].push_back(s);
  }
  j["detector"] = {{"pixel_pitch_m", c.detector.pixel_pitch_m},
                   {"n_pixels", c.detector.n_pixels},
                   {"readout_noise_e", c.detector.readout_noise_e},
                   {"gain", c.detector.gain},
                   {"full_well_e", c.detector.full_well_e},
                   {"noise_enabled", c.detector.noise_enabled},
                   {"midline", std::string(to_string(c.detector.midline))}};
  j["reconstruction"] = {{"cutoff", c.reconstruction.cutoff},
                         {"smoothing_rms_m", c.reconstruction.smoothing_rms_m},
                         {"window_m", c.reconstruction.window_m},
                         {"clamp_nonnegative", c.reconstruction.clamp_nonnegative}};
  j["metrics"] = {{"peak_selector", std::string(to_string(c.metrics.peak_selector))},
                  {"guard_px", c.metrics.guard_px},
                  {"h_scale", c.h_scale()},
                  {"prominence", c.metrics.prominence}};
  j["output_dir"] = c.output_dir.generic_string();
  j["seed"] = c.seed;
  return j.dump(2);
}

std::string width_tag(double aperture_width_m) {
  return format_number(std::round(aperture_width_m * 1e6) / 1e3) + "mm";
}

} // namespace slitscan::cli
