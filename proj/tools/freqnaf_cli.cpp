#include "freqnaf/baselines.hpp"
#include "freqnaf/experiments.hpp"
#include "freqnaf/io.hpp"
#include "freqnaf/metrics.hpp"
#include "freqnaf/phantom.hpp"
#include "freqnaf/reconstruct.hpp"
#include "freqnaf/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace freqnaf;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

Dims parse_dims(const std::string& text) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw InputError("dims must be N or NX,NY,NZ; got '" + text + "'");
    }
  }
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw InputError("dims must be N or NX,NY,NZ; got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("expected a comma-separated list of numbers; got '" + text + "'");
    }
  }
  if (v.empty()) throw InputError("empty list");
  return v;
}

json section(const json& config, const char* key) {
  if (!config.is_object()) throw InputError("config must be a JSON object");
  if (config.contains("schema_version") && config.at("schema_version") != kSchemaVersion)
    throw InputError("unsupported schema_version " + config.at("schema_version").dump());
  return config.contains(key) ? config.at(key) : json::object();
}

json load_config(const std::string& path) {
  if (path.empty()) return json{{"schema_version", kSchemaVersion}};
  json j = read_json_file(path);
  if (!j.is_object() || !j.contains("schema_version"))
    throw InputError(path + ": config needs a schema_version field");
  return j;
}

ProjectionSet as_line_integrals(const ProjectionSet& p) {
  return p.kind == ProjectionKind::intensity ? log_transform(p) : p;
}

json report_json(const MetricReport& r) {
  return {{"psnr", r.psnr},
          {"ssim", r.ssim},
          {"data_range", r.data_range},
          {"ssim_per_slice", r.ssim_per_slice}};
}

struct Options {
  int threads = 0;
  bool deterministic = false;

  // phantom
  std::string kind = "shepp_logan";
  std::string dims = "64";
  std::uint64_t seed = 0;
  int blobs = 6;
  double extent = kDefaultExtentMm;

  // simulate
  std::string vol, geom = "cone";
  int views = 50;
  double range_deg = 180.0, noise_pct = 0.0, i0 = 1.0;
  int det_rows = 0, det_cols = 0;
  double pitch = 0.0, dso = 1000.0, dsd = 1500.0;

  // shared
  std::string proj, config, out, ckpt, modality = "cbct", algo, recon, truth, loss_csv;
  std::string sweep = "0,20,40,60,80,100", axis = "z", window;
  int seeds = 3;
};

// Detector sized to cover the projected bounding sphere of the volume.
DetectorSpec auto_detector(const Volume& v, const Options& o, bool cone) {
  const double radius = 0.5 * v.bounds().extent().norm();
  double half = radius;
  if (cone) {
    require(o.dso > radius, "dso must place the source outside the volume");
    half = radius * o.dsd / (o.dso - radius);
  }
  DetectorSpec d;
  const int n = *std::max_element(v.dims.begin(), v.dims.end());
  d.cols = o.det_cols > 0 ? o.det_cols : 2 * n;
  d.rows = o.det_rows > 0 ? o.det_rows : 2 * n;
  d.pitch_u = d.pitch_v = o.pitch > 0.0 ? o.pitch : 2.0 * half / d.cols;
  return d;
}

void cmd_phantom(const Options& o) {
  const Dims dims = parse_dims(o.dims);
  Volume v;
  if (o.kind == "shepp_logan")
    v = shepp_logan_3d(dims, o.extent);
  else if (o.kind == "blobs")
    v = smooth_blobs(dims, o.blobs, o.seed, o.extent);
  else
    throw InputError("phantom kind must be shepp_logan or blobs");
  write_volume(o.out, v);
}

void cmd_simulate(const Options& o, Exec exec) {
  const Volume v = read_volume(o.vol);
  require(v.in_value_range(), "volume values leave its value_range");
  require(o.views >= 1, "views must be >= 1");
  require(o.range_deg > 0.0 && o.range_deg <= 360.0, "range-deg must lie in (0,360]");
  const auto angles = uniform_angles(o.views, o.range_deg * std::numbers::pi / 180.0);
  Geometry g;
  if (o.geom == "cone")
    g = ConeBeamGeometry{o.dso, o.dsd, angles, auto_detector(v, o, true)};
  else if (o.geom == "parallel")
    g = ParallelGeometry{angles, auto_detector(v, o, false)};
  else
    throw InputError("geom must be cone or parallel");
  validate(g);
  const ProjectionSet li = forward_project(v, g, default_step(v), exec);
  ProjectionSet intensities = beer_lambert(li, o.i0);
  if (o.noise_pct > 0.0) intensities = add_gaussian_noise(intensities, o.noise_pct, o.seed);
  write_projections(o.out, intensities);
}

void cmd_train(const Options& o, Exec exec) {
  const ProjectionSet p = read_projections(o.proj);
  require(p.kind == ProjectionKind::intensity, "train expects intensity projections");
  const json cfg = load_config(o.config);
  const ModelConfig mc = model_config_from_json(section(cfg, "model"));
  const TrainConfig tc = train_config_from_json(section(cfg, "train"));
  const std::string csv = o.loss_csv.empty() ? o.out + ".loss.csv" : o.loss_csv;

  Checkpoint ck{FieldModel{}, mc, tc, 0, csv};
  const auto hook = [&](long it, const FieldModel& m) {
    ck.model = m;
    ck.iteration = it;
    write_checkpoint(o.out, ck);
  };
  const TrainResult r = train(p, mc, tc, hook, exec);
  ck.model = r.model;
  ck.iteration = tc.total_iters;
  write_checkpoint(o.out, ck);
  write_loss_csv(csv, r.history);
}

void cmd_reconstruct(const Options& o, Exec exec) {
  const Checkpoint ck = read_checkpoint(o.ckpt);
  const Dims dims = parse_dims(o.dims);
  if (o.modality == "cbct") {
    write_volume(o.out, extract_volume(ck.model, dims, exec));
  } else if (o.modality == "spect") {
    require(!o.proj.empty(), "spect reconstruction needs --proj with the real views");
    const ProjectionSet p = read_projections(o.proj);
    const json cfg = load_config(o.config);
    ReconstructionPlan plan;
    plan.modality = Modality::spect;
    plan.output_dims = dims;
    if (cfg.contains("novel_view_count")) plan.novel_view_count = cfg.at("novel_view_count").get<int>();
    if (cfg.contains("samples_per_ray")) plan.samples_per_ray = cfg.at("samples_per_ray").get<int>();
    plan.spect_solver = tv_papa_config_from_json(section(cfg, "tv_papa"));
    write_volume(o.out, spect_reconstruct(p, ck.model, plan, exec));
  } else {
    throw InputError("modality must be cbct or spect");
  }
}

void cmd_baseline(const Options& o, Exec exec) {
  const ProjectionSet li = as_line_integrals(read_projections(o.proj));
  const json cfg = load_config(o.config);
  const Dims dims = o.dims.empty() ? li.volume_dims : parse_dims(o.dims);
  Volume out;
  if (o.algo == "fbp")
    out = fbp(li, filter_from_json(section(cfg, "filter")), dims, exec);
  else if (o.algo == "fdk")
    out = fdk(li, filter_from_json(section(cfg, "filter")), dims, exec);
  else if (o.algo == "sart")
    out = sart(li, sart_config_from_json(section(cfg, "sart")), dims, nullptr, exec).volume;
  else if (o.algo == "tvpapa") {
    ProjectionSet clipped = li;
    const TvPapaConfig tc = tv_papa_config_from_json(section(cfg, "tv_papa"));
    if (tc.fidelity == Fidelity::kl)
      for (double& v : clipped.data) v = std::max(v, 0.0);
    out = tv_papa(clipped, tc, dims, exec).volume;
  } else {
    throw InputError("algo must be fdk, fbp, sart or tvpapa");
  }
  write_volume(o.out, out);
}

void cmd_evaluate(const Options& o) {
  const MetricReport r = evaluate(read_volume(o.recon), read_volume(o.truth));
  const json j = report_json(r);
  std::ofstream f(o.out);
  if (!f) throw InputError("cannot write " + o.out);
  f << j.dump(2) << "\n";
  std::cout << json{{"psnr", r.psnr}, {"ssim", r.ssim}}.dump() << "\n";
}

void cmd_ablate(const Options& o, Exec exec) {
  const ProjectionSet p = read_projections(o.proj);
  require(p.kind == ProjectionKind::intensity, "ablate-freq expects intensity projections");
  const Volume truth = read_volume(o.truth);
  const json cfg = load_config(o.config);
  const auto rows = ablate_frequency(p, truth, model_config_from_json(section(cfg, "model")),
                                     train_config_from_json(section(cfg, "train")),
                                     parse_list(o.sweep), o.seeds, exec);
  std::ofstream f(o.out);
  if (!f) throw InputError("cannot write " + o.out);
  f << "x_percent,seed_index,psnr,ssim,final_loss\n" << std::setprecision(10);
  for (const auto& r : rows)
    f << r.x_percent << ',' << r.seed_index << ',' << r.psnr << ',' << r.ssim << ','
      << r.final_loss << '\n';
  for (const auto& [x, mean] : mean_psnr_by_x(rows))
    std::cout << json{{"x_percent", x}, {"mean_psnr", mean}}.dump() << "\n";
}

void cmd_render(const Options& o) {
  const Volume v = read_volume(o.vol);
  SliceAxis axis = SliceAxis::z;
  if (o.axis == "x")
    axis = SliceAxis::x;
  else if (o.axis == "y")
    axis = SliceAxis::y;
  else if (o.axis != "z")
    throw InputError("axis must be x, y or z");
  double lo = 0.0, hi = 0.0;
  if (o.window.empty()) {
    const auto [a, b] = std::minmax_element(v.values.begin(), v.values.end());
    lo = *a;
    hi = *b > *a ? *b : *a + 1.0;
  } else {
    const auto w = parse_list(o.window);
    require(w.size() == 2, "window must be min,max");
    lo = w[0];
    hi = w[1];
  }
  render_slices(v, axis, lo, hi, o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-field and classical tomographic reconstruction toolkit"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "OpenMP thread count (0: runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic", o.deterministic,
               "Serial kernels; bit-reproducible across thread counts");

  auto* phantom = app.add_subcommand("phantom", "Generate a phantom volume");
  phantom->add_option("--kind", o.kind, "shepp_logan or blobs");
  phantom->add_option("--dims", o.dims, "N or NX,NY,NZ");
  phantom->add_option("--seed", o.seed, "Blob placement seed");
  phantom->add_option("--blobs", o.blobs, "Number of blobs");
  phantom->add_option("--extent", o.extent, "Physical edge length in mm");
  phantom->add_option("--out", o.out)->required();

  auto* simulate = app.add_subcommand("simulate", "Project a volume to intensities");
  simulate->add_option("--vol", o.vol)->required();
  simulate->add_option("--geom", o.geom, "cone or parallel");
  simulate->add_option("--views", o.views);
  simulate->add_option("--range-deg", o.range_deg);
  simulate->add_option("--noise-pct", o.noise_pct);
  simulate->add_option("--seed", o.seed);
  simulate->add_option("--i0", o.i0);
  simulate->add_option("--det-rows", o.det_rows);
  simulate->add_option("--det-cols", o.det_cols);
  simulate->add_option("--pitch", o.pitch, "Detector pitch in mm (0: cover the volume)");
  simulate->add_option("--dso", o.dso);
  simulate->add_option("--dsd", o.dsd);
  simulate->add_option("--out", o.out)->required();

  auto* trainc = app.add_subcommand("train", "Fit a neural field to projections");
  trainc->add_option("--proj", o.proj)->required();
  trainc->add_option("--config", o.config, "JSON with model and train sections");
  trainc->add_option("--loss-csv", o.loss_csv);
  trainc->add_option("--out", o.out)->required();

  auto* recon = app.add_subcommand("reconstruct", "Volume from a trained checkpoint");
  recon->add_option("--ckpt", o.ckpt)->required();
  recon->add_option("--modality", o.modality, "cbct or spect");
  recon->add_option("--proj", o.proj, "Real views (spect)");
  recon->add_option("--config", o.config, "novel_view_count, samples_per_ray, tv_papa");
  recon->add_option("--dims", o.dims);
  recon->add_option("--out", o.out)->required();

  auto* baseline = app.add_subcommand("baseline", "Classical reconstruction");
  baseline->add_option("--algo", o.algo, "fdk, fbp, sart or tvpapa")->required();
  baseline->add_option("--proj", o.proj)->required();
  baseline->add_option("--config", o.config, "JSON with a filter, sart or tv_papa section");
  baseline->add_option("--dims", o.dims, "Defaults to the projected volume's dims");
  baseline->add_option("--out", o.out)->required();

  auto* evaluatec = app.add_subcommand("evaluate", "PSNR and SSIM against a reference");
  evaluatec->add_option("--recon", o.recon)->required();
  evaluatec->add_option("--truth", o.truth)->required();
  evaluatec->add_option("--out", o.out)->required();

  auto* ablate = app.add_subcommand("ablate-freq", "Sweep the regularization duration");
  ablate->add_option("--proj", o.proj)->required();
  ablate->add_option("--truth", o.truth)->required();
  ablate->add_option("--config", o.config);
  ablate->add_option("--sweep", o.sweep);
  ablate->add_option("--seeds", o.seeds);
  ablate->add_option("--out", o.out)->required();

  auto* render = app.add_subcommand("render-slices", "Export 8-bit PNG slices");
  render->add_option("--vol", o.vol)->required();
  render->add_option("--axis", o.axis, "x, y or z");
  render->add_option("--window", o.window, "min,max (default: volume range)");
  render->add_option("--out", o.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("bad_input", e.what(), kExitBadInput);
  }

  try {
    if (o.threads > 0) set_thread_count(o.threads);
    const Exec exec = o.deterministic ? Exec::serial : Exec::parallel;
    set_default_exec(exec);
    if (*phantom) {
      if (phantom->count("--dims") == 0) o.dims = "64";
      cmd_phantom(o);
    } else if (*simulate) {
      cmd_simulate(o, exec);
    } else if (*trainc) {
      cmd_train(o, exec);
    } else if (*recon) {
      if (recon->count("--dims") == 0) o.dims = "64";
      cmd_reconstruct(o, exec);
    } else if (*baseline) {
      if (baseline->count("--dims") == 0) o.dims.clear();
      cmd_baseline(o, exec);
    } else if (*evaluatec) {
      cmd_evaluate(o);
    } else if (*ablate) {
      cmd_ablate(o, exec);
    } else if (*render) {
      cmd_render(o);
    }
  } catch (const InputError& e) {
    return fail("bad_input", e.what(), kExitBadInput);
  } catch (const NumericalError& e) {
    return fail("numerical_failure", e.what(), kExitNumerical);
  } catch (const nlohmann::json::exception& e) {
    return fail("bad_input", e.what(), kExitBadInput);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
