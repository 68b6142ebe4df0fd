#include "freqnaf/io.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace freqnaf {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kCheckpointMagic[8] = {'F', 'Q', 'N', 'A', 'F', 'C', 'K', '1'};

void check_schema(const json& j, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
    throw InputError(std::string(what) + ": unsupported schema_version " +
                     j.at("schema_version").dump());
}

void check_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (key != "schema_version" && !ok.count(key))
      throw InputError(std::string(what) + ": unknown field '" + key + "'");
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("field '") + key + "': " + e.what());
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void write_f32(const fs::path& path, const std::vector<double>& values) {
  std::vector<float> buf(values.begin(), values.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<double> read_f32(const fs::path& path, std::size_t count) {
  const std::string bytes = slurp(path);
  if (bytes.size() != count * sizeof(float))
    throw InputError(path.string() + ": payload has " + std::to_string(bytes.size()) +
                     " bytes, header implies " + std::to_string(count * sizeof(float)));
  std::vector<float> buf(count);
  std::memcpy(buf.data(), bytes.data(), bytes.size());
  return {buf.begin(), buf.end()};
}

json vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InputError(std::string(what) + " must have 3 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Dims dims_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InputError("dims must have 3 entries");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

json range_json(const ValueRange& r) { return json::array({r.lo, r.hi}); }

ValueRange range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("value_range must have 2 entries");
  return {j[0].get<double>(), j[1].get<double>()};
}

json read_header(const fs::path& payload) {
  const json j = read_json_file(header_path(payload));
  check_schema(j, "header");
  if (j.value("dtype", "") != "f32le") throw InputError("header dtype must be f32le");
  return j;
}

// Everything that turns a malformed header into a typed json exception is
// reported as bad input.
template <class F>
auto guarded(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": malformed header: " + e.what());
  }
}

}  // namespace

fs::path header_path(const fs::path& payload) {
  fs::path h = payload;
  h += ".json";
  return h;
}

json read_json_file(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_volume(const fs::path& path, const Volume& volume) {
  volume.validate();
  json h;
  h["schema_version"] = kSchemaVersion;
  h["dims"] = volume.dims;
  h["spacing"] = vec3(volume.spacing);
  h["origin"] = vec3(volume.origin);
  h["value_range"] = range_json(volume.value_range);
  h["dtype"] = "f32le";
  write_text(header_path(path), h.dump(2) + "\n");
  write_f32(path, volume.values);
}

Volume read_volume(const fs::path& path) {
  return guarded(path, [&] {
    const json h = read_header(path);
    Volume v(dims_from(h.at("dims")), vec3_from(h.at("spacing"), "spacing"),
             vec3_from(h.at("origin"), "origin"));
    v.value_range = range_from(h.at("value_range"));
    v.values = read_f32(path, v.size());
    v.validate();
    return v;
  });
}

json geometry_to_json(const Geometry& geometry) {
  const auto& det = detector_of(geometry);
  json j;
  if (const auto* c = std::get_if<ConeBeamGeometry>(&geometry)) {
    j["type"] = "cone";
    j["dso"] = c->dso;
    j["dsd"] = c->dsd;
  } else {
    j["type"] = "parallel";
  }
  j["angles"] = angles_of(geometry);
  j["detector"] = {{"rows", det.rows}, {"cols", det.cols}, {"pitch_u", det.pitch_u},
                   {"pitch_v", det.pitch_v}};
  return j;
}

Geometry geometry_from_json(const json& j) {
  try {
    DetectorSpec det;
    const json& d = j.at("detector");
    det.rows = d.at("rows").get<int>();
    det.cols = d.at("cols").get<int>();
    det.pitch_u = d.at("pitch_u").get<double>();
    det.pitch_v = d.at("pitch_v").get<double>();
    const auto angles = j.at("angles").get<std::vector<double>>();
    const std::string type = j.at("type").get<std::string>();
    Geometry g;
    if (type == "cone") {
      ConeBeamGeometry c;
      c.dso = j.at("dso").get<double>();
      c.dsd = j.at("dsd").get<double>();
      c.angles = angles;
      c.detector = det;
      g = c;
    } else if (type == "parallel") {
      g = ParallelGeometry{angles, det};
    } else {
      throw InputError("geometry type must be cone or parallel, got " + type);
    }
    validate(g);
    return g;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed geometry: ") + e.what());
  }
}

void write_projections(const fs::path& path, const ProjectionSet& p) {
  p.validate();
  json h;
  h["schema_version"] = kSchemaVersion;
  h["geometry"] = geometry_to_json(p.geometry);
  h["kind"] = p.kind == ProjectionKind::intensity ? "intensity" : "line_integral";
  h["i0"] = p.i0;
  h["volume_bounds"] = {{"lo", vec3(p.volume_bounds.lo)}, {"hi", vec3(p.volume_bounds.hi)}};
  h["volume_dims"] = p.volume_dims;
  h["value_range"] = range_json(p.value_range);
  h["dtype"] = "f32le";
  write_text(header_path(path), h.dump(2) + "\n");
  write_f32(path, p.data);
}

ProjectionSet read_projections(const fs::path& path) {
  return guarded(path, [&] {
    const json h = read_header(path);
    ProjectionSet p;
    p.geometry = geometry_from_json(h.at("geometry"));
    const std::string kind = h.at("kind").get<std::string>();
    if (kind == "intensity")
      p.kind = ProjectionKind::intensity;
    else if (kind == "line_integral")
      p.kind = ProjectionKind::line_integral;
    else
      throw InputError("projection kind must be intensity or line_integral");
    p.i0 = h.at("i0").get<double>();
    p.volume_bounds.lo = vec3_from(h.at("volume_bounds").at("lo"), "volume_bounds.lo");
    p.volume_bounds.hi = vec3_from(h.at("volume_bounds").at("hi"), "volume_bounds.hi");
    p.volume_dims = dims_from(h.at("volume_dims"));
    p.value_range = range_from(h.at("value_range"));
    p.data = read_f32(path, static_cast<std::size_t>(p.views()) * p.pixels_per_view());
    p.validate();
    return p;
  });
}

json to_json(const ModelConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"encoder",
           {{"levels", c.encoder.levels},
            {"features_per_level", c.encoder.features_per_level},
            {"table_size", c.encoder.table_size},
            {"base_resolution", c.encoder.base_resolution},
            {"growth_factor", c.encoder.growth_factor}}},
          {"mlp_width", c.mlp_width},
          {"table_init_bound", c.table_init_bound}};
}

json to_json(const TrainConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"total_iters", c.total_iters},
          {"batch_rays", c.batch_rays},
          {"samples_per_ray", c.samples_per_ray},
          {"lr_start", c.lr_start},
          {"lr_end", c.lr_end},
          {"x_percent", c.x_percent},
          {"seed", c.seed},
          {"use_frequency_mask", c.use_frequency_mask},
          {"checkpoint_every", c.checkpoint_every}};
}

ModelConfig model_config_from_json(const json& j) {
  check_schema(j, "model config");
  check_keys(j, "model config", {"encoder", "mlp_width", "table_init_bound"});
  ModelConfig c;
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    check_keys(e, "encoder", {"levels", "features_per_level", "table_size", "base_resolution",
                              "growth_factor", "finest_resolution"});
    read_field(e, "levels", c.encoder.levels);
    read_field(e, "features_per_level", c.encoder.features_per_level);
    read_field(e, "table_size", c.encoder.table_size);
    read_field(e, "base_resolution", c.encoder.base_resolution);
    read_field(e, "growth_factor", c.encoder.growth_factor);
    if (e.contains("finest_resolution")) {
      if (e.contains("growth_factor"))
        throw InputError("encoder: give growth_factor or finest_resolution, not both");
      c.encoder = HashEncoderConfig::spanning(c.encoder.levels, c.encoder.features_per_level,
                                              c.encoder.table_size, c.encoder.base_resolution,
                                              e.at("finest_resolution").get<int>());
    }
  }
  read_field(j, "mlp_width", c.mlp_width);
  read_field(j, "table_init_bound", c.table_init_bound);
  c.encoder.validate();
  require(c.mlp_width >= 1, "mlp_width must be >= 1");
  require(c.table_init_bound >= 0.0, "table_init_bound must be >= 0");
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  check_schema(j, "train config");
  check_keys(j, "train config",
             {"total_iters", "batch_rays", "samples_per_ray", "lr_start", "lr_end", "x_percent",
              "seed", "use_frequency_mask", "checkpoint_every"});
  TrainConfig c;
  read_field(j, "total_iters", c.total_iters);
  read_field(j, "batch_rays", c.batch_rays);
  read_field(j, "samples_per_ray", c.samples_per_ray);
  read_field(j, "lr_start", c.lr_start);
  read_field(j, "lr_end", c.lr_end);
  read_field(j, "x_percent", c.x_percent);
  read_field(j, "seed", c.seed);
  read_field(j, "use_frequency_mask", c.use_frequency_mask);
  read_field(j, "checkpoint_every", c.checkpoint_every);
  c.validate();
  return c;
}

SartConfig sart_config_from_json(const json& j) {
  check_schema(j, "sart config");
  check_keys(j, "sart config", {"iterations", "relaxation", "nonneg_clamp", "step"});
  SartConfig c;
  read_field(j, "iterations", c.iterations);
  read_field(j, "relaxation", c.relaxation);
  read_field(j, "nonneg_clamp", c.nonneg_clamp);
  read_field(j, "step", c.step);
  c.validate();
  return c;
}

TvPapaConfig tv_papa_config_from_json(const json& j) {
  check_schema(j, "tv_papa config");
  check_keys(j, "tv_papa config",
             {"iterations", "tv_weight", "fidelity", "primal_scale", "dual_scale", "step",
              "track_objective"});
  TvPapaConfig c;
  read_field(j, "iterations", c.iterations);
  read_field(j, "tv_weight", c.tv_weight);
  if (j.contains("fidelity")) {
    const std::string f = j.at("fidelity").get<std::string>();
    if (f == "kl")
      c.fidelity = Fidelity::kl;
    else if (f == "least_squares")
      c.fidelity = Fidelity::least_squares;
    else
      throw InputError("fidelity must be kl or least_squares");
  }
  read_field(j, "primal_scale", c.primal_scale);
  read_field(j, "dual_scale", c.dual_scale);
  read_field(j, "step", c.step);
  read_field(j, "track_objective", c.track_objective);
  c.validate();
  return c;
}

FilterSpec filter_from_json(const json& j) {
  check_schema(j, "filter");
  check_keys(j, "filter", {"kind", "padding"});
  FilterSpec f;
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "ram_lak")
      f.kind = FilterKind::ram_lak;
    else if (k == "hann")
      f.kind = FilterKind::hann;
    else
      throw InputError("filter kind must be ram_lak or hann");
  }
  read_field(j, "padding", f.padding);
  return f;
}

namespace {

struct TensorRef {
  std::string name;
  const double* data;
  std::size_t count;
};

std::vector<TensorRef> model_tensors(const FieldModel& m) {
  std::vector<TensorRef> t{{"tables", m.tables.theta.data(), m.tables.theta.size()}};
  for (int l = 0; l < MlpParams::kLayers; ++l) {
    t.push_back({"w" + std::to_string(l), m.mlp.weight[l].data(),
                 static_cast<std::size_t>(m.mlp.weight[l].size())});
    t.push_back({"b" + std::to_string(l), m.mlp.bias[l].data(),
                 static_cast<std::size_t>(m.mlp.bias[l].size())});
  }
  return t;
}

}  // namespace

void write_checkpoint(const fs::path& path, const Checkpoint& ck) {
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["model_config"] = to_json(ck.model_config);
  manifest["train_config"] = to_json(ck.train_config);
  manifest["iteration"] = ck.iteration;
  manifest["loss_history"] = ck.loss_history;
  manifest["bounds"] = {{"lo", vec3(ck.model.bounds.lo)}, {"hi", vec3(ck.model.bounds.hi)}};
  manifest["value_range"] = range_json(ck.model.value_range);
  manifest["encoder"] = to_json(ModelConfig{ck.model.encoder, ck.model.mlp.width, 0.0})["encoder"];
  manifest["mlp"] = {{"input_dim", ck.model.mlp.input_dim}, {"width", ck.model.mlp.width}};
  const auto tensors = model_tensors(ck.model);
  json list = json::array();
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    list.push_back({{"name", t.name}, {"offset", offset}, {"count", t.count}});
    offset += t.count * sizeof(double);
  }
  manifest["tensors"] = list;
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.count * sizeof(double)));
}

Checkpoint read_checkpoint(const fs::path& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw InputError(path.string() + ": not a checkpoint file");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof(len));
  if (len > bytes.size() - 16) throw InputError(path.string() + ": truncated manifest");
  return guarded(path, [&] {
    const json m = json::parse(bytes.substr(16, len));
    check_schema(m, "checkpoint");
    Checkpoint ck;
    ck.model_config = model_config_from_json(m.at("model_config"));
    ck.train_config = train_config_from_json(m.at("train_config"));
    ck.iteration = m.at("iteration").get<long>();
    ck.loss_history = m.at("loss_history").get<std::string>();

    FieldModel& model = ck.model;
    json enc = m.at("encoder");
    model.encoder = model_config_from_json(json{{"encoder", enc}}).encoder;
    model.tables = FeatureTables::zeros(model.encoder);
    model.mlp = MlpParams::zeros(m.at("mlp").at("input_dim").get<int>(),
                                 m.at("mlp").at("width").get<int>());
    require(model.mlp.input_dim == model.encoder.output_dim(),
            "checkpoint MLP input does not match the encoder");
    model.bounds.lo = vec3_from(m.at("bounds").at("lo"), "bounds.lo");
    model.bounds.hi = vec3_from(m.at("bounds").at("hi"), "bounds.hi");
    model.value_range = range_from(m.at("value_range"));

    const std::size_t blob = 16 + len;
    const auto tensors = model_tensors(model);
    const json& list = m.at("tensors");
    require(list.size() == tensors.size(), "checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const json& e = list[i];
      require(e.at("name").get<std::string>() == tensors[i].name, "checkpoint tensor order mismatch");
      require(e.at("count").get<std::size_t>() == tensors[i].count,
              "checkpoint tensor " + tensors[i].name + " has the wrong size");
      const std::size_t off = blob + e.at("offset").get<std::size_t>();
      const std::size_t n = tensors[i].count * sizeof(double);
      require(off + n <= bytes.size(), "checkpoint truncated in tensor " + tensors[i].name);
      std::memcpy(const_cast<double*>(tensors[i].data), bytes.data() + off, n);
    }
    return ck;
  });
}

void write_loss_csv(const fs::path& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "iteration,loss,lr,mask_fraction\n" << std::setprecision(17);
  for (const auto& r : history)
    out << r.iteration << ',' << r.loss << ',' << r.lr << ',' << r.mask_fraction << '\n';
}

namespace {

void write_png(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& px) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw InputError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(px.data() + static_cast<std::size_t>(r) * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

std::vector<fs::path> render_slices(const Volume& volume, SliceAxis axis, double window_lo,
                                    double window_hi, const fs::path& dir) {
  volume.validate();
  require(window_hi > window_lo, "window max must exceed window min");
  fs::create_directories(dir);
  const auto [nx, ny, nz] = volume.dims;
  int count = nz, width = nx, height = ny;
  char tag = 'z';
  if (axis == SliceAxis::y) {
    count = ny, width = nx, height = nz, tag = 'y';
  } else if (axis == SliceAxis::x) {
    count = nx, width = ny, height = nz, tag = 'x';
  }
  std::vector<fs::path> files;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (int s = 0; s < count; ++s) {
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        double v = 0.0;
        if (axis == SliceAxis::z)
          v = volume.at(c, r, s);
        else if (axis == SliceAxis::y)
          v = volume.at(c, s, r);
        else
          v = volume.at(s, c, r);
        const double t = std::clamp((v - window_lo) / (window_hi - window_lo), 0.0, 1.0);
        px[static_cast<std::size_t>(r) * width + c] = static_cast<std::uint8_t>(std::lround(255.0 * t));
      }
    char name[32];
    std::snprintf(name, sizeof(name), "%c_%04d.png", tag, s);
    files.push_back(dir / name);
    write_png(files.back(), width, height, px);
  }
  return files;
}

}  // namespace freqnaf
