// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mvcs/geometry.hpp"
#include "mvcs/grid.hpp"
#include "mvcs/model.hpp"
#include "mvcs/synth.hpp"

namespace mvcs {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Plain-text config: `[section]` headers, `key = value` lines, `#` comments.
// Sections may repeat (one `[camera]` per camera); order is preserved.

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  int line = 0;

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return true;
    return false;
  }

  const std::string& raw(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    throw InvalidArgument("config [" + name + "] at line " + std::to_string(line) +
                          ": missing key '" + key + "'");
  }

  std::vector<double> numbers(const std::string& key, std::size_t expected = 0) const {
    std::vector<double> out;
    std::istringstream is(raw(key));
    std::string tok;
    while (is >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw InvalidArgument("config [" + name + "] key '" + key + "': bad number '" + tok + "'");
      out.push_back(v);
    }
    if (expected && out.size() != expected)
      throw InvalidArgument("config [" + name + "] key '" + key + "': expected " +
                            std::to_string(expected) + " numbers, found " +
                            std::to_string(out.size()));
    return out;
  }

  double number(const std::string& key) const { return numbers(key, 1)[0]; }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  long integer(const std::string& key) const {
    const std::string& s = raw(key);
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
      throw InvalidArgument("config [" + name + "] key '" + key + "': bad integer '" + s + "'");
    return v;
  }
  long integer(const std::string& key, long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries)
      if (k == key) {
        v = std::move(value);
        return;
      }
    entries.emplace_back(key, std::move(value));
  }
};

struct Config {
  std::vector<ConfigSection> sections;

  std::vector<const ConfigSection*> all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
      if (s.name == name) out.push_back(&s);
    return out;
  }

  const ConfigSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  ConfigSection& add(const std::string& name) {
    sections.push_back({name, {}, 0});
    return sections.back();
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline Config parse_config(std::istream& is) {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw InvalidArgument("config line " + std::to_string(lineno) + ": bad section header");
      cfg.sections.push_back({trim(line.substr(1, line.size() - 2)), {}, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    if (cfg.sections.empty()) cfg.sections.push_back({"", {}, lineno});
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.sections.back().has(key))
      throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                            "'");
    cfg.sections.back().entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline std::string format_config(const Config& cfg) {
  std::ostringstream os;
  bool first = true;
  for (const auto& s : cfg.sections) {
    if (!first) os << "\n";
    first = false;
    if (!s.name.empty()) os << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) os << k << " = " << v << "\n";
  }
  return os.str();
}

/// Shortest decimal text that parses back to the same double.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class It>
inline std::string join_exact(It first, It last) {
  std::string out;
  for (It it = first; it != last; ++it) {
    if (!out.empty()) out += ' ';
    out += exact(*it);
  }
  return out;
}

inline std::string mat_text(const Mat3& m) {
  std::vector<double> v;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v.push_back(m(r, c));
  return join_exact(v.begin(), v.end());
}

inline std::string vec_text(const Vec3& v) {
  return exact(v.x()) + " " + exact(v.y()) + " " + exact(v.z());
}

inline Mat3 mat_from(const std::vector<double>& v) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[static_cast<std::size_t>(r * 3 + c)];
  return m;
}

inline Vec3 vec_from(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

// ---------------------------------------------------------------------------
// Cameras and scenes.

inline void write_camera(ConfigSection& s, const CameraView& cam) {
  s.set("K", mat_text(cam.intrinsics()));
  s.set("R", mat_text(cam.rotation()));
  s.set("t", vec_text(cam.translation()));
  s.set("image_size", std::to_string(cam.image_width()) + " " + std::to_string(cam.image_height()));
  const auto& c = cam.crop();
  s.set("crop", exact(c.left) + " " + exact(c.top) + " " + exact(c.width) + " " +
                    exact(c.height) + " " + std::to_string(c.out_size));
}

inline CameraView read_camera(const ConfigSection& s) {
  const auto size = s.numbers("image_size", 2);
  const auto crop = s.numbers("crop", 5);
  if (size[0] != std::floor(size[0]) || size[1] != std::floor(size[1]) ||
      crop[4] != std::floor(crop[4]))
    throw InvalidArgument("camera: image size and crop output size must be integers");
  return CameraView(mat_from(s.numbers("K", 9)), mat_from(s.numbers("R", 9)),
                    vec_from(s.numbers("t", 3)), static_cast<int>(size[0]),
                    static_cast<int>(size[1]),
                    CropBox{crop[0], crop[1], crop[2], crop[3], static_cast<int>(crop[4])});
}

inline std::string format_rig(const std::vector<CameraView>& cams) {
  Config cfg;
  for (const auto& c : cams) write_camera(cfg.add("camera"), c);
  return format_config(cfg);
}

inline std::vector<CameraView> parse_rig(const Config& cfg) {
  std::vector<CameraView> out;
  for (const auto* s : cfg.all("camera")) out.push_back(read_camera(*s));
  if (out.empty()) throw InvalidArgument("rig: no [camera] records");
  return out;
}

inline std::string format_scene(const Scene& scene) {
  Config cfg;
  auto& head = cfg.add("scene");
  head.set("background_seed", std::to_string(scene.background_seed));
  head.set("light", vec_text(scene.light));
  for (const auto& b : scene.bodies) {
    auto& s = cfg.add("body");
    s.set("center", vec_text(b.center));
    s.set("semi_axes", vec_text(b.semi_axes));
    s.set("orientation", mat_text(b.orientation));
    s.set("albedo", vec_text(b.albedo));
  }
  return format_config(cfg);
}

inline Scene parse_scene(const Config& cfg) {
  Scene scene;
  if (const auto* head = cfg.find("scene")) {
    const long seed = head->integer("background_seed", 7);
    require(seed >= 0, "scene: background_seed must be non-negative");
    scene.background_seed = static_cast<std::uint64_t>(seed);
    if (head->has("light")) scene.light = vec_from(head->numbers("light", 3)).normalized();
  }
  for (const auto* s : cfg.all("body")) {
    Body b;
    b.center = vec_from(s->numbers("center", 3));
    b.semi_axes = vec_from(s->numbers("semi_axes", 3));
    if (s->has("orientation")) b.orientation = mat_from(s->numbers("orientation", 9));
    if (s->has("albedo")) b.albedo = vec_from(s->numbers("albedo", 3));
    scene.bodies.push_back(b);
  }
  if (scene.bodies.empty()) throw InvalidArgument("scene: no [body] records");
  scene.validate();
  return scene;
}

inline RigSpec parse_rig_spec(const ConfigSection& s) {
  RigSpec r;
  const std::string kind = s.text("kind", "ring");
  if (kind == "ring") r.kind = RigKind::ring;
  else if (kind == "dome") r.kind = RigKind::dome;
  else if (kind == "two_layer") r.kind = RigKind::two_layer;
  else throw InvalidArgument("rig: unknown kind '" + kind + "'");
  r.camera_count = static_cast<int>(s.integer("cameras", r.camera_count));
  r.radius = s.number("radius", r.radius);
  r.elevation_deg = s.number("elevation_deg", r.elevation_deg);
  r.upper_elevation_deg = s.number("upper_elevation_deg", r.upper_elevation_deg);
  r.arc_deg = s.number("arc_deg", r.arc_deg);
  if (s.has("look_at")) r.look_at = vec_from(s.numbers("look_at", 3));
  r.focal = s.number("focal", r.focal);
  r.image_width = static_cast<int>(s.integer("image_width", r.image_width));
  r.image_height = static_cast<int>(s.integer("image_height", r.image_height));
  r.heatmap_size = static_cast<int>(s.integer("heatmap_size", r.heatmap_size));
  r.crop_margin = s.number("crop_margin", r.crop_margin);
  r.validate();
  return r;
}

inline TrainConfig parse_train_config(const ConfigSection& s, TrainConfig c = {}) {
  c.regime = parse_regime(s.text("regime", to_string(c.regime)));
  c.steps = static_cast<int>(s.integer("steps", c.steps));
  c.warmup_steps = static_cast<int>(s.integer("warmup_steps", c.warmup_steps));
  c.eval_every = static_cast<int>(s.integer("eval_every", c.eval_every));
  c.supervised_per_triplet =
      static_cast<int>(s.integer("supervised_per_triplet", c.supervised_per_triplet));
  c.triplet_labeled_prob = s.number("triplet_labeled_prob", c.triplet_labeled_prob);
  c.hidden = static_cast<int>(s.integer("hidden", c.hidden));
  c.adam.learning_rate = s.number("learning_rate", c.adam.learning_rate);
  c.weights.lambda_s = s.number("lambda_s", c.weights.lambda_s);
  c.weights.lambda_p = s.number("lambda_p", c.weights.lambda_p);
  const long seed = s.integer("seed", static_cast<long>(c.seed));
  require(seed >= 0, "train: seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.rect_size = static_cast<int>(s.integer("rect_size", c.rect_size));
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Files.

/// Writes to a sibling temporary file, then renames over `path`, so readers
/// never observe a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline Config load_config(const fs::path& path) {
  std::istringstream is(read_file(path));
  return parse_config(is);
}

// ProbMap binary: "MVPM", u32 version, u32 width, u32 height, f64 scale,
// then width*height f64 values row-major, all little-endian. Stored values
// are probability / scale; scale is 1 for maps written here.
inline constexpr std::uint32_t kProbMapVersion = 1;

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("probmap: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_probmap(const ProbMap& map) {
  std::string out = "MVPM";
  detail::put<std::uint32_t>(out, kProbMapVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(map.width()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(map.height()));
  detail::put<double>(out, 1.0);
  for (double v : map.values()) detail::put<double>(out, v);
  return out;
}

inline ProbMap decode_probmap(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "MVPM") != 0) throw IoError("probmap: bad magic");
  std::size_t pos = 4;
  if (detail::get<std::uint32_t>(bytes, pos) != kProbMapVersion)
    throw IoError("probmap: unsupported version");
  const auto w = detail::get<std::uint32_t>(bytes, pos);
  const auto h = detail::get<std::uint32_t>(bytes, pos);
  const double scale = detail::get<double>(bytes, pos);
  if (w == 0 || h == 0 || w > 65536 || h > 65536) throw IoError("probmap: bad dimensions");
  if (!(scale > 0) || !std::isfinite(scale)) throw IoError("probmap: bad scale");
  if (bytes.size() != pos + static_cast<std::size_t>(w) * h * sizeof(double))
    throw IoError("probmap: size does not match header");
  Grid<double> g(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = detail::get<double>(bytes, pos) * scale;
  try {
    return ProbMap(std::move(g));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("probmap: ") + e.what());
  }
}

inline void save_probmap(const fs::path& path, const ProbMap& map) {
  write_file_atomic(path, encode_probmap(map));
}

inline ProbMap load_probmap(const fs::path& path) { return decode_probmap(read_file(path)); }

/// 8-bit binary PGM; gray = round(255 p).
inline std::string encode_pgm(const ProbMap& map) {
  std::string out = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) +
                    "\n255\n";
  for (double v : map.values())
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  return out;
}

/// Plain-text PBM (P1); 1 = foreground.
inline std::string encode_pbm(const BinaryMask& mask) {
  std::ostringstream os;
  os << "P1\n" << mask.width() << " " << mask.height() << "\n";
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) os << (x ? " " : "") << int(mask(x, y));
    os << "\n";
  }
  return os.str();
}

inline BinaryMask decode_pbm(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int w = 0, h = 0;
  if (!(is >> magic) || magic != "P1") throw IoError("pbm: expected plain P1 header");
  auto skip_comments = [&] {
    while (is >> std::ws && is.peek() == '#') {
      std::string dummy;
      std::getline(is, dummy);
    }
  };
  skip_comments();
  if (!(is >> w)) throw IoError("pbm: bad width");
  skip_comments();
  if (!(is >> h) || w <= 0 || h <= 0) throw IoError("pbm: bad dimensions");
  BinaryMask mask(w, h, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    skip_comments();
    char c = 0;
    if (!(is >> c) || (c != '0' && c != '1')) throw IoError("pbm: bad or missing pixel");
    mask[i] = static_cast<std::uint8_t>(c - '0');
  }
  return mask;
}

inline BinaryMask load_pbm(const fs::path& path) { return decode_pbm(read_file(path)); }

/// Feature image as text: header "width height channels", then one pixel per
/// line with exact doubles.
inline std::string encode_features(const FeatureImage& f) {
  std::string out = std::to_string(f.width()) + " " + std::to_string(f.height()) + " " +
                    std::to_string(f.channels()) + "\n";
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    const auto p = f.pixel(i);
    out += join_exact(p.begin(), p.end());
    out += '\n';
  }
  return out;
}

inline FeatureImage decode_features(const std::string& text) {
  std::istringstream is(text);
  int w = 0, h = 0, c = 0;
  if (!(is >> w >> h >> c) || w <= 0 || h <= 0 || c <= 0) throw IoError("features: bad header");
  FeatureImage f(w, h, c);
  std::string tok;
  for (double& v : f.values()) {
    if (!(is >> tok)) throw IoError("features: truncated");
    char* end = nullptr;
    v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw IoError("features: bad number '" + tok + "'");
  }
  f.validate();
  return f;
}

}  // namespace mvcs
