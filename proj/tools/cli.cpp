#include "cli.hpp"

#include "run_config.hpp"

#include <slitscan/error.hpp>
#include <slitscan/io.hpp>
#include <slitscan/metrics.hpp>
#include <slitscan/optics.hpp>
#include <slitscan/reconstruct.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#ifndef SLITSCAN_VERSION
#define SLITSCAN_VERSION "0.0.0"
#endif

namespace slitscan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool no_noise = false;
};

/// Files written by one command, relative to the output directory.
class Stage {
public:
  Stage(std::string name, fs::path root)
      : name_(std::move(name)), root_(std::move(root)), t0_(std::chrono::steady_clock::now()) {}

  fs::path file(const fs::path& rel) {
    files_.insert(rel.generic_string());
    return root_ / rel;
  }
  const std::string& name() const { return name_; }
  const std::set<std::string>& files() const { return files_; }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  std::string name_;
  fs::path root_;
  std::set<std::string> files_;
  std::chrono::steady_clock::time_point t0_;
};

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

void update_manifest(const RunConfig& config, const Stage& stage) {
  const fs::path path = config.output_dir / "manifest.json";
  const std::string hash = sha256_hex(canonical_json(config));
  json m = json::object();
  if (fs::exists(path)) {
    try {
      m = json::parse(read_text(path));
    } catch (const json::exception&) {
      m = json::object();
    }
    if (!m.is_object() || m.value("config_sha256", "") != hash)
      m = json::object();
  }
  m["config_sha256"] = hash;
  m["version"] = SLITSCAN_VERSION;
  json files = json::array();
  for (const auto& f : stage.files()) files.push_back(f);
  m["stages"][stage.name()] = {{"files", files}, {"seconds", stage.seconds()}};
  write_text(path, m.dump(2) + "\n");
}

RunConfig load_config(const GlobalOptions& g) {
  RunConfig c = g.config_path.empty() ? default_run_config()
                                      : parse_run_config(read_text(g.config_path));
  if (g.seed) c.seed = *g.seed;
  if (!g.out_dir.empty()) c.output_dir = g.out_dir;
  if (g.no_noise) c.detector.noise_enabled = false;
  return c;
}

IntensityProfile crop(const IntensityProfile& p, double lo, double hi) {
  std::size_t first = p.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p.position(i);
    if (x >= lo && x <= hi) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first >= last)
    throw ConfigError("crop window holds fewer than two samples");
  const auto v = p.values();
  return {p.position(first), p.pitch(),
          std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                              v.begin() + static_cast<std::ptrdiff_t>(last) + 1)};
}

SampledField source_field(const RunConfig& c) {
  return double_slit_field(c.geometry, c.source.grid, c.source.illumination_tilt);
}

// ---------------------------------------------------------------- fringes

void cmd_fringes(const RunConfig& c, std::ostream& out) {
  Stage stage("fringes", c.output_dir);
  const auto at_d = propagate_fresnel(source_field(c), c.geometry.d_direct_m,
                                      c.geometry.wavelength_m);
  const auto profile = crop(at_d.intensity(), -10e-3, 10e-3);
  write_profile_csv(stage.file("fringes.csv"), profile);
  write_text(stage.file("fringes.gp"),
             "set datafile separator ','\n"
             "set key autotitle columnhead\n"
             "set xlabel 'position (mm)'\n"
             "set ylabel 'intensity'\n"
             "plot 'fringes.csv' using ($1*1e3):2 with lines title 'direct image'\n");
  update_manifest(c, stage);
  out << "fringes: " << profile.size() << " samples at D = " << c.geometry.d_direct_m
      << " m, period " << c.geometry.wavelength_m * c.geometry.d_direct_m /
                              c.geometry.slit_sep_m * 1e3
      << " mm\n";
}

// ------------------------------------------------------------------- scan

json scan_meta(const ScanConfig& s, const AssignmentStats& stats, const RunConfig& c) {
  return {{"aperture_width_m", s.aperture_width_m},
          {"step_m", s.step_m},
          {"n_steps", s.n_steps},
          {"start_m", s.start_m},
          {"stage_ratio", s.stage_ratio},
          {"exposure_s", s.exposure_s},
          {"frames_per_step", s.frames_per_step},
          {"opening", std::string(to_string(s.opening))},
          {"reference_half_width_m", s.reference_half_width_m},
          {"guard_px", c.metrics.guard_px},
          {"midline", std::string(to_string(c.detector.midline))},
          {"noise_enabled", c.detector.noise_enabled},
          {"contamination", stats.contamination_fraction},
          {"p_correct", stats.p_correct},
          {"distinguishability", stats.distinguishability}};
}

void cmd_scan(const RunConfig& c, bool profiles, std::ostream& out) {
  Stage stage("scan", c.output_dir);
  const auto pupil =
      propagate_fresnel(source_field(c), c.geometry.l_slits_lens_m, c.geometry.wavelength_m);
  write_profile_csv(stage.file("pupil_intensity.csv"), crop(pupil.intensity(), -20e-3, 20e-3));

  for (std::size_t i = 0; i < c.scans.size(); ++i) {
    ScanConfig scan = c.scans[i].scan;
    const DetectorConfig det = c.detector_for_scan(i);
    if (c.scans[i].auto_exposure)
      scan.exposure_s = auto_exposure(pupil, c.geometry, scan, det);
    const auto series = run_scan_from_pupil(pupil, c.geometry, scan, det);
    const auto stats = assignment_probability(series, c.metrics.guard_px);

    const std::string tag = width_tag(scan.aperture_width_m);
    std::optional<fs::path> profile_dir;
    if (profiles) {
      profile_dir = c.output_dir / ("scan_" + tag + "_profiles");
      for (const auto& r : series.records) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%03zu.csv", r.step_index);
        stage.file(fs::path("scan_" + tag + "_profiles") / name);
      }
    }
    write_scan_csv(stage.file("scan_" + tag + ".csv"), series, profile_dir);
    write_text(stage.file("scan_" + tag + ".json"), scan_meta(scan, stats, c).dump(2) + "\n");
    out << "scan " << tag << ": " << series.records.size() << " steps, exposure "
        << scan.exposure_s << " s, contamination " << 100.0 * stats.contamination_fraction
        << "%, D = " << stats.distinguishability << "\n";
  }
  update_manifest(c, stage);
}

// ------------------------------------------------------------ reconstruct

struct FluxInput {
  fs::path csv;
  ScanConfig scan;
  FluxTable table;
};

ScanConfig scan_from_meta(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
    ScanConfig s;
    s.aperture_width_m = j.at("aperture_width_m").get<double>();
    s.step_m = j.at("step_m").get<double>();
    s.n_steps = j.at("n_steps").get<std::size_t>();
    s.start_m = j.at("start_m").get<double>();
    s.exposure_s = j.at("exposure_s").get<double>();
    s.opening = parse_opening(j.at("opening").get<std::string>());
    s.reference_half_width_m = j.at("reference_half_width_m").get<double>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed scan metadata: " + e.what());
  }
}

std::vector<FluxInput> gather_inputs(const RunConfig& c, const std::vector<std::string>& files,
                                     const std::vector<double>& widths_mm) {
  std::vector<fs::path> paths;
  if (files.empty()) {
    for (const auto& e : c.scans)
      paths.push_back(c.output_dir / ("scan_" + width_tag(e.scan.aperture_width_m) + ".csv"));
  } else {
    paths.assign(files.begin(), files.end());
  }
  if (!widths_mm.empty() && widths_mm.size() != paths.size())
    throw ConfigError("reconstruct: give one --width-mm per --flux file");

  std::vector<FluxInput> inputs;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    FluxInput in{paths[i], {}, read_scan_csv(paths[i])};
    const fs::path meta = fs::path(paths[i]).replace_extension(".json");
    if (!widths_mm.empty()) {
      in.scan = c.scans.front().scan;
      in.scan.aperture_width_m = widths_mm[i] * 1e-3;
      in.scan.n_steps = in.table.size();
      in.scan.start_m = in.table.s_m.front();
      in.scan.exposure_s = 1.0;
    } else if (fs::exists(meta)) {
      in.scan = scan_from_meta(meta);
    } else {
      throw ConfigError("reconstruct: unknown aperture width for " + paths[i].string() +
                        " (no " + meta.filename().string() + "; pass --width-mm)");
    }
    if (in.table.size() != in.scan.n_steps) {
      std::ostringstream msg;
      msg << paths[i].string() << ": " << in.table.size() << " rows but the scan declares "
          << in.scan.n_steps << " steps";
      throw DataError(msg.str());
    }
    for (std::size_t k = 0; k < in.table.size(); ++k) {
      const double expected = in.scan.slit_position(k);
      if (in.table.steps[k] != k || std::abs(in.table.s_m[k] - expected) > 1e-3 * in.scan.step_m) {
        std::ostringstream msg;
        msg << paths[i].string() << ": row " << k + 1 << " does not match step " << k
            << " of the declared scan";
        throw DataError(msg.str());
      }
    }
    inputs.push_back(std::move(in));
  }
  return inputs;
}

void cmd_reconstruct(const RunConfig& c, const std::vector<std::string>& files,
                     const std::vector<double>& widths_mm, std::ostream& out,
                     std::ostream& err) {
  Stage stage("reconstruct", c.output_dir);
  const auto inputs = gather_inputs(c, files, widths_mm);

  std::vector<ApertureMatrix> matrices;
  std::vector<double> exposures;
  double origin = 0.0;
  const double step = inputs.front().scan.step_m;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& s = inputs[i].scan;
    if (std::abs(s.step_m - step) > 1e-9 * step)
      throw ConfigError("reconstruct: scans use different step sizes");
    const auto ref = static_cast<std::size_t>(std::round(s.reference_half_width_m / s.step_m));
    matrices.push_back(build_aperture_matrix(s.n_steps, aperture_elements(s), s.opening, ref));
    exposures.push_back(s.exposure_s);
    const double o = pattern_origin(s, matrices.back());
    if (i == 0)
      origin = o;
    else if (std::abs(o - origin) > 1e-3 * step)
      throw ConfigError("reconstruct: scans do not share a pattern grid");
  }

  SolveOptions opts;
  opts.cutoff = c.reconstruction.cutoff;
  opts.clamp_nonnegative = c.reconstruction.clamp_nonnegative;
  opts.origin_m = origin;
  opts.pitch_m = step;

  for (const Signal sig : {Signal::total, Signal::left, Signal::right}) {
    std::vector<std::vector<double>> fluxes;
    for (const auto& in : inputs) fluxes.push_back(in.table.by_aperture_offset(sig));
    const auto raw = solve_stacked(matrices, fluxes, exposures, opts);
    const auto smooth = gaussian_smooth(raw, c.reconstruction.smoothing_rms_m);
    const std::string base = "reconstruction_" + std::string(to_string(sig));
    write_reconstruction(stage.file(base + ".csv"), stage.file(base + ".json"), smooth);
    write_reconstruction(stage.file(base + "_raw.csv"), stage.file(base + "_raw.json"), raw);
    if (sig == Signal::total) {
      if (raw.rank_deficient())
        err << "warning: rank-deficient system (effective rank " << raw.effective_rank << " of "
            << raw.p_hat.size() << "); emitting the minimum-norm solution\n";
      out << "reconstruct: " << inputs.size() << " scan(s), " << raw.p_hat.size()
          << " elements, effective rank " << raw.effective_rank << ", residual "
          << raw.residual_norm << "\n";
    }
  }
  write_text(stage.file("reconstruction.gp"),
             "set datafile separator ','\n"
             "set key autotitle columnhead\n"
             "set xlabel 'pupil position (mm)'\n"
             "plot 'reconstruction_total.csv' using 1:2 with lines title 'total', \\\n"
             "     'reconstruction_left.csv' using 1:2 with lines title 'left', \\\n"
             "     'reconstruction_right.csv' using 1:2 with lines title 'right'\n");
  update_manifest(c, stage);
}

// ----------------------------------------------------------------- report

double peak_in_window(const IntensityProfile& p, double half_width) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(p.position(i)) <= half_width) m = std::max(m, p.values()[i]);
  return m;
}

void cmd_report(const RunConfig& c, std::ostream& out) {
  Stage stage("report", c.output_dir);
  std::vector<std::string> required = {"fringes.csv", "reconstruction_total.csv",
                                       "reconstruction_left.csv", "reconstruction_right.csv"};
  for (const auto& e : c.scans)
    required.push_back("scan_" + width_tag(e.scan.aperture_width_m) + ".json");
  std::vector<std::string> missing;
  for (const auto& f : required)
    if (!fs::exists(c.output_dir / f)) missing.push_back(f);
  if (!missing.empty()) {
    std::string msg = "report: missing inputs in " + c.output_dir.string() + ":";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }

  const auto total = read_reconstruction_csv(c.output_dir / "reconstruction_total.csv");
  const auto vis = visibility(total, c.metrics.peak_selector, c.metrics.prominence);

  double d_min = std::numeric_limits<double>::infinity();
  double worst_contamination = 0.0;
  json scans = json::array();
  for (const auto& e : c.scans) {
    const std::string tag = width_tag(e.scan.aperture_width_m);
    const auto meta = json::parse(read_text(c.output_dir / ("scan_" + tag + ".json")));
    const double d = meta.at("distinguishability").get<double>();
    const double cont = meta.at("contamination").get<double>();
    if (d < d_min) {
      d_min = d;
      worst_contamination = cont;
    }
    scans.push_back({{"width", tag},
                     {"contamination", cont},
                     {"p_correct", meta.at("p_correct")},
                     {"distinguishability", d}});
  }
  std::ostringstream d_method;
  d_method << "guard " << c.metrics.guard_px << " px, " << to_string(c.detector.midline)
           << " midline, worst contamination " << 100.0 * worst_contamination
           << "%, minimum over scans";
  const auto dual = duality_check(vis.value, d_min, vis.method, d_method.str());

  const MatchOptions mopt{c.reconstruction.window_m, 0.0, 5e-3};
  const auto fringes = read_profile_csv(c.output_dir / "fringes.csv");
  const auto match = match_profiles(total, fringes, c.h_scale(), mopt);

  const auto left = read_reconstruction_csv(c.output_dir / "reconstruction_left.csv");
  const auto right = read_reconstruction_csv(c.output_dir / "reconstruction_right.csv");
  const double w = c.reconstruction.window_m;
  const double lp = peak_in_window(left, w);
  const double rp = peak_in_window(right, w);
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < left.size() && i < right.size(); ++i) {
    if (std::abs(left.position(i)) > w) continue;
    const double d = left.values()[i] / lp - right.values()[i] / rp;
    ss += d * d;
    ++count;
  }
  const double lr_rms = count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;

  json report = json::parse(duality_report_json(dual));
  report["V_i_max"] = vis.i_max;
  report["V_i_min"] = vis.i_min;
  report["match"] = {{"reference", "fringes.csv"},
                     {"h_scale", c.h_scale()},
                     {"shift_m", match.shift_m},
                     {"v_scale", match.v_scale},
                     {"rms_residual", match.rms_residual},
                     {"window_m", w}};
  report["left_right"] = {{"left_peak", lp},
                          {"right_peak", rp},
                          {"normalized_rms_difference", lr_rms},
                          {"window_m", w}};
  report["scans"] = scans;
  write_text(stage.file("report.json"), report.dump(2) + "\n");

  std::ostringstream txt;
  txt << std::setprecision(4);
  txt << "visibility V          " << dual.visibility << "  (" << dual.v_method << ")\n"
      << "distinguishability D  " << dual.distinguishability << "  (" << dual.d_method << ")\n"
      << "V^2 + D^2             " << dual.duality << (dual.violated ? "  > 1, violated" : "  <= 1")
      << "\n"
      << "profile match         shift " << match.shift_m * 1e3 << " mm, normalized rms "
      << match.rms_residual << " over +-" << w * 1e3 << " mm (h_scale " << c.h_scale() << ")\n"
      << "left vs right         normalized rms difference " << lr_rms << "\n";
  for (const auto& s : scans)
    txt << "scan " << s["width"].get<std::string>() << "             contamination "
        << 100.0 * s["contamination"].get<double>() << "%, D "
        << s["distinguishability"].get<double>() << "\n";
  write_text(stage.file("report.txt"), txt.str());
  update_manifest(c, stage);
  out << txt.str();
}

// ------------------------------------------------------------------- rank

void cmd_rank(std::size_t width, std::size_t n_max, const std::string& opening,
              std::size_t reference, std::ostream& out) {
  const auto dims = full_rank_dims(width, n_max, parse_opening(opening), reference);
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
  out << "\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Which-way double-slit simulator and aperture-scan reconstruction", "slitscan"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the noise seed");
  app.add_option("--out", g.out_dir, "Override the output directory");
  app.add_flag("--no-noise", g.no_noise, "Disable detector noise");
  app.set_version_flag("--version", SLITSCAN_VERSION);

  app.add_subcommand("fringes", "Direct-image fringe profile at D");
  auto* scan = app.add_subcommand("scan", "Simulate the aperture scans");
  bool profiles = false;
  scan->add_flag("--profiles", profiles, "Also write every detector profile");
  auto* rec = app.add_subcommand("reconstruct", "Least-squares pupil pattern from flux series");
  std::vector<std::string> flux_files;
  std::vector<double> widths_mm;
  rec->add_option("--flux", flux_files, "Scan CSV (repeatable); default: the configured scans");
  rec->add_option("--width-mm", widths_mm, "Aperture width per --flux file");
  app.add_subcommand("report", "Visibility, distinguishability and profile match");
  auto* rank = app.add_subcommand("rank", "Full-rank dimensions of an aperture matrix");
  std::size_t width = 0;
  std::size_t n_max = 0;
  std::string opening = "rightward";
  std::size_t reference = 20;
  rank->add_option("--width", width, "Aperture width in elements")->required();
  rank->add_option("--max", n_max, "Largest dimension to test")->required();
  rank->add_option("--opening", opening, "rightward, leftward or centered");
  rank->add_option("--reference", reference, "Fixed-edge offset in elements");
  auto* all = app.add_subcommand("all", "fringes, scan, reconstruct and report");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rank->parsed()) {
      cmd_rank(width, n_max, opening, reference, out);
      return 0;
    }
    const RunConfig config = load_config(g);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "fringes" || all->parsed()) cmd_fringes(config, out);
    if (name == "scan" || all->parsed()) cmd_scan(config, profiles, out);
    if (name == "reconstruct" || all->parsed())
      cmd_reconstruct(config, flux_files, widths_mm, out, err);
    if (name == "report" || all->parsed()) cmd_report(config, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace slitscan::cli
