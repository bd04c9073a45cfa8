#ifndef ANGIO_PIPELINE_HPP
#define ANGIO_PIPELINE_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "angio/edges.hpp"
#include "angio/error.hpp"
#include "angio/filtering.hpp"
#include "angio/geometry.hpp"
#include "angio/image_io.hpp"
#include "angio/overlay.hpp"
#include "angio/raster.hpp"
#include "angio/segmentation.hpp"
#include "angio/topology.hpp"
#include "angio/tracking.hpp"

namespace angio {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class OtsuSource { Original, Magnitude };
enum class NodeSource { Skeleton, LocalMax };
enum class LengthMode { Trace, Spline };

struct PipelineConfig {
  int median_window = 3;
  FrangiParams frangi;
  OtsuSource otsu_source = OtsuSource::Original;
  SeShape closing_shape = SeShape::Square;
  int closing_radius = 1;
  std::size_t min_component_size = 30;
  PruneParams prune{0, 8};
  CannyParams canny;
  NodeSource node_source = NodeSource::Skeleton;
  int node_window = 5;
  double node_floor = 0.05;
  CostWeights cost;
  double radius_step = 1.0;
  LengthMode length_mode = LengthMode::Trace;
  unsigned threads = 1;
  std::optional<std::filesystem::path> output_dir;

  void validate() const {
    if (median_window < 1 || median_window % 2 == 0)
      throw Error(ErrorCode::EvenWindow, "median window must be odd and >= 1");
    frangi.validate();
    if (closing_radius < 1) throw Error(ErrorCode::InvalidParams, "closing radius must be >= 1");
    if (prune.m < 0 || prune.min_branch < 0) throw Error(ErrorCode::InvalidParams, "prune parameters must be >= 0");
    if (!(canny.sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "Canny sigma must be positive");
    if (!canny.auto_high && !(canny.low > 0.0 && canny.low < canny.high && canny.high <= 1.0))
      throw Error(ErrorCode::InvalidThresholdOrder, "Canny thresholds must satisfy 0 < low < high <= 1");
    if (node_window < 3 || node_window % 2 == 0) throw Error(ErrorCode::EvenWindow, "node window must be odd and >= 3");
    if (!(node_floor >= 0.0 && node_floor < 1.0)) throw Error(ErrorCode::InvalidParams, "node floor must lie in [0, 1)");
    cost.validate();
    if (!(radius_step > 0.0)) throw Error(ErrorCode::InvalidParams, "radius step must be positive");
  }
};

namespace detail {
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename E>
E enum_from(const json& j, const char* key, E fallback,
            std::initializer_list<std::pair<std::string_view, E>> names) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const auto s = j.at(key).get<std::string>();
  for (const auto& [name, value] : names)
    if (name == s) return value;
  throw Error(ErrorCode::InvalidParams, std::string("unknown value '") + s + "' for config field " + key);
}
}  // namespace detail

/// Every field is optional; missing fields keep their defaults.
inline PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidParams, "pipeline config must be a JSON object");
  PipelineConfig c;
  try {
    detail::read_opt(j, "median_window", c.median_window);
    if (j.contains("frangi")) {
      const auto& f = j.at("frangi");
      detail::read_opt(f, "scales", c.frangi.scales);
      detail::read_opt(f, "beta", c.frangi.beta);
      if (f.contains("c") && !f.at("c").is_null()) {
        if (f.at("c").is_string() && f.at("c").get<std::string>() == "auto") {
          c.frangi.c.reset();
        } else {
          c.frangi.c = f.at("c").get<double>();
        }
      }
      c.frangi.polarity = detail::enum_from(f, "polarity", c.frangi.polarity,
                                            {{"dark-on-bright", Polarity::DarkOnBright},
                                             {"bright-on-dark", Polarity::BrightOnDark}});
    }
    c.otsu_source = detail::enum_from(j, "otsu_source", c.otsu_source,
                                      {{"original", OtsuSource::Original}, {"magnitude", OtsuSource::Magnitude}});
    if (j.contains("closing")) {
      const auto& s = j.at("closing");
      c.closing_shape = detail::enum_from(s, "shape", c.closing_shape,
                                          {{"square", SeShape::Square}, {"disk", SeShape::Disk}});
      detail::read_opt(s, "radius", c.closing_radius);
    }
    detail::read_opt(j, "min_component_size", c.min_component_size);
    if (j.contains("prune")) {
      detail::read_opt(j.at("prune"), "m", c.prune.m);
      detail::read_opt(j.at("prune"), "min_branch", c.prune.min_branch);
    }
    if (j.contains("canny")) {
      const auto& k = j.at("canny");
      detail::read_opt(k, "sigma", c.canny.sigma);
      detail::read_opt(k, "low", c.canny.low);
      if (k.contains("high") && k.at("high").is_string() && k.at("high").get<std::string>() == "auto") {
        c.canny.auto_high = true;
      } else {
        detail::read_opt(k, "high", c.canny.high);
      }
    }
    if (j.contains("nodes")) {
      const auto& n = j.at("nodes");
      c.node_source = detail::enum_from(n, "source", c.node_source,
                                        {{"skeleton", NodeSource::Skeleton}, {"local_max", NodeSource::LocalMax}});
      detail::read_opt(n, "window", c.node_window);
      detail::read_opt(n, "floor", c.node_floor);
    }
    if (j.contains("cost")) {
      const auto& w = j.at("cost");
      detail::read_opt(w, "w_dist", c.cost.w_dist);
      detail::read_opt(w, "w_vessel", c.cost.w_vessel);
      detail::read_opt(w, "w_orient", c.cost.w_orient);
      detail::read_opt(w, "epsilon", c.cost.epsilon);
    }
    detail::read_opt(j, "radius_step", c.radius_step);
    c.length_mode = detail::enum_from(j, "length_mode", c.length_mode,
                                      {{"trace", LengthMode::Trace}, {"spline", LengthMode::Spline}});
    detail::read_opt(j, "threads", c.threads);
    if (j.contains("output_dir") && !j.at("output_dir").is_null())
      c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("invalid pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

inline json config_to_json(const PipelineConfig& c) {
  json j;
  j["median_window"] = c.median_window;
  j["frangi"] = {{"scales", c.frangi.scales},
                 {"beta", c.frangi.beta},
                 {"c", c.frangi.c ? json(*c.frangi.c) : json("auto")},
                 {"polarity", c.frangi.polarity == Polarity::DarkOnBright ? "dark-on-bright" : "bright-on-dark"}};
  j["otsu_source"] = c.otsu_source == OtsuSource::Original ? "original" : "magnitude";
  j["closing"] = {{"shape", c.closing_shape == SeShape::Square ? "square" : "disk"}, {"radius", c.closing_radius}};
  j["min_component_size"] = c.min_component_size;
  j["prune"] = {{"m", c.prune.m}, {"min_branch", c.prune.min_branch}};
  j["canny"] = {{"sigma", c.canny.sigma}, {"low", c.canny.low},
                {"high", c.canny.auto_high ? json("auto") : json(c.canny.high)}};
  j["nodes"] = {{"source", c.node_source == NodeSource::Skeleton ? "skeleton" : "local_max"},
                {"window", c.node_window},
                {"floor", c.node_floor}};
  j["cost"] = {{"w_dist", c.cost.w_dist}, {"w_vessel", c.cost.w_vessel},
               {"w_orient", c.cost.w_orient}, {"epsilon", c.cost.epsilon}};
  j["radius_step"] = c.radius_step;
  j["length_mode"] = c.length_mode == LengthMode::Trace ? "trace" : "spline";
  j["threads"] = c.threads;
  if (c.output_dir) j["output_dir"] = c.output_dir->string();
  return j;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParams, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// Optional `<image>.meta.json` sidecar.
struct ImageMetadata {
  std::optional<double> pixel_spacing_mm;
  std::optional<double> frame_rate;
  std::optional<std::vector<double>> angles;
};

inline ImageMetadata metadata_from_json(const json& j) {
  ImageMetadata m;
  try {
    if (j.contains("pixel_spacing_mm") && !j.at("pixel_spacing_mm").is_null())
      m.pixel_spacing_mm = j.at("pixel_spacing_mm").get<double>();
    if (j.contains("frame_rate") && !j.at("frame_rate").is_null()) m.frame_rate = j.at("frame_rate").get<double>();
    if (j.contains("angles") && !j.at("angles").is_null()) m.angles = j.at("angles").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("invalid metadata: ") + e.what());
  }
  if (m.pixel_spacing_mm && !(*m.pixel_spacing_mm > 0.0))
    throw Error(ErrorCode::InvalidParams, "pixel_spacing_mm must be positive");
  return m;
}

inline std::filesystem::path metadata_path(const std::filesystem::path& image_path) {
  return image_path.string() + ".meta.json";
}

inline ImageMetadata load_metadata_for(const std::filesystem::path& image_path) {
  const auto path = metadata_path(image_path);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return {};
  const auto bytes = read_file(path);
  try {
    return metadata_from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParams, "metadata " + path.string() + " is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON views of the domain types
// ---------------------------------------------------------------------------

inline json to_json(Point p) { return json::array({p.x, p.y}); }

inline json to_json(const std::vector<Point>& pixels) {
  json out = json::array();
  for (const auto& p : pixels) out.push_back(to_json(p));
  return out;
}

inline json to_json(const PixelGraph& g) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : g.nodes())
    nodes.push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}, {"v", n.vesselness}, {"theta", n.orientation}});
  for (const auto& e : g.edges()) edges.push_back(json::array({e.a, e.b, e.cost}));
  return {{"nodes", nodes}, {"edges", edges}};
}

inline json to_json(const CenterlinePath& p) {
  return {{"nodes", p.nodes}, {"pixels", to_json(p.pixels)}, {"cost", p.cost}};
}

inline json to_json(const RadiusProfile& r) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back(json::array({s.s, s.radius}));
  return {{"samples", samples}, {"mean_px", r.mean_radius()}, {"off_mask", r.off_mask}};
}

inline json to_json(const std::vector<PixelRun>& runs) {
  json out = json::array();
  for (const auto& run : runs) out.push_back(to_json(run));
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 7> kStageNames = {"median", "frangi",   "otsu", "close",
                                                                "skeleton", "edges", "graph"};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct PipelineResult {
  GrayImage filtered;           // median
  VesselnessMap vesselness;     // frangi
  int threshold = 0;            // otsu
  BinaryMask segmented;         // otsu
  BinaryMask closed;            // close
  Skeleton skeleton;            // skeleton (pruned)
  BinaryMask edges;             // edges
  PixelGraph graph;             // graph
  std::vector<StageTiming> timings;  // one entry per stage, in stage order

  std::vector<std::string> stages() const {
    std::vector<std::string> out;
    for (const auto& t : timings) out.push_back(t.stage);
    return out;
  }
};

/// Hue = vessel direction, value = vesselness magnitude.
inline RgbImage direction_map(const VesselnessMap& v) {
  RgbImage out(v.magnitude.width(), v.magnitude.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double h = v.orientation.data()[i] / std::numbers::pi * 6.0;  // [0, 6)
    const double val = std::clamp(v.magnitude.data()[i], 0.0, 1.0) * 255.0;
    const double f = h - std::floor(h);
    const auto hi = static_cast<int>(std::floor(h)) % 6;
    const double q = val * (1.0 - f), t = val * f;
    double r = 0, g = 0, b = 0;
    switch (hi) {
      case 0: r = val; g = t; break;
      case 1: r = q; g = val; break;
      case 2: g = val; b = t; break;
      case 3: g = q; b = val; break;
      case 4: r = t; b = val; break;
      default: r = val; b = q; break;
    }
    out.data()[i] = {static_cast<std::uint8_t>(std::lround(r)), static_cast<std::uint8_t>(std::lround(g)),
                     static_cast<std::uint8_t>(std::lround(b))};
  }
  return out;
}

inline std::vector<Point> node_positions(const PixelGraph& g) {
  std::vector<Point> out;
  for (const auto& n : g.nodes()) out.push_back(n.position);
  return out;
}

/// Stage raster as shown to the user. Skeleton, edges and graph are
/// overlays on the filtered image.
inline RgbImage render_stage(const PipelineResult& r, std::string_view stage) {
  if (stage == "median") return gray_to_rgb(r.filtered);
  if (stage == "frangi") return gray_to_rgb(rescale_to_gray(r.vesselness.magnitude));
  if (stage == "direction") return direction_map(r.vesselness);
  if (stage == "otsu") return gray_to_rgb(mask_to_gray(r.segmented));
  if (stage == "close") return gray_to_rgb(mask_to_gray(r.closed));
  if (stage == "skeleton")
    return render_overlay(r.filtered, {OverlayLayer::from_mask(r.skeleton.mask, {0, 255, 0})});
  if (stage == "edges") return render_overlay(r.filtered, {OverlayLayer::from_mask(r.edges, {0, 255, 255})});
  if (stage == "graph")
    return render_overlay(r.filtered, {OverlayLayer::from_mask(r.closed, {255, 200, 0}, 0.25),
                                       OverlayLayer::from_points(node_positions(r.graph), {255, 255, 0})});
  throw Error(ErrorCode::BadRequest, "unknown stage '" + std::string(stage) + "'");
}

namespace detail {
template <typename F>
auto timed_stage(std::string_view name, std::vector<StageTiming>& timings, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      timings.push_back({std::string(name),
                         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()});
    } else {
      auto out = body();
      timings.push_back({std::string(name),
                         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()});
      return out;
    }
  } catch (const Error& e) {
    throw e.with_stage(std::string(name));
  }
}
}  // namespace detail

/// Writes the numbered stage artifacts (01_median.png ... 07_graph.json).
/// Timings go to a separate run.json so the numbered files are
/// reproducible bit for bit.
inline void save_artifacts(const PipelineResult& r, const PipelineConfig& config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create output directory " + dir.string());
  save_image(r.filtered, dir / "01_median.png");
  save_image(r.vesselness.magnitude, dir / "02_frangi.png");
  save_image(direction_map(r.vesselness), dir / "02_frangi_direction.png");
  save_image(r.vesselness.best_scale, dir / "02_frangi_scale.png");
  save_image(r.segmented, dir / "03_otsu.png");
  save_image(r.closed, dir / "04_close.png");
  save_image(r.skeleton.mask, dir / "05_skeleton.png");
  save_image(r.edges, dir / "06_edges.png");
  save_image(render_stage(r, "graph"), dir / "07_graph.png");
  auto write_json = [&](const std::filesystem::path& p, const json& j) {
    const auto text = j.dump(1);
    detail::write_file(p, Bytes(text.begin(), text.end()));
  };
  write_json(dir / "03_otsu.json", {{"threshold", r.threshold}});
  write_json(dir / "05_skeleton.json", {{"endpoints", to_json(r.skeleton.endpoints)},
                                        {"branchpoints", to_json(r.skeleton.branchpoints)},
                                        {"branches", to_json(trace_branches(r.skeleton))}});
  write_json(dir / "07_graph.json", to_json(r.graph));
  json timings = json::object();
  for (const auto& t : r.timings) timings[t.stage] = t.ms;
  write_json(dir / "run.json", {{"stages", r.stages()}, {"timings_ms", timings}, {"config", config_to_json(config)}});
}

/// median -> Frangi -> Otsu -> closing (+ small-component removal) ->
/// {skeleton + prune, Canny} -> nodes + graph. Errors carry the stage name.
inline PipelineResult run_pipeline(const GrayImage& image, const PipelineConfig& config) {
  config.validate();
  PipelineResult r;
  r.filtered = detail::timed_stage("median", r.timings, [&] { return median_filter(image, config.median_window); });
  r.vesselness = detail::timed_stage("frangi", r.timings,
                                     [&] { return frangi_vesselness(r.filtered, config.frangi, config.threads); });
  detail::timed_stage("otsu", r.timings, [&] {
    // Vessel pixels must end up above the threshold.
    const GrayImage source = config.otsu_source == OtsuSource::Magnitude ? quantize(r.vesselness.magnitude)
                             : config.frangi.polarity == Polarity::DarkOnBright ? invert(r.filtered)
                                                                                : r.filtered;
    r.threshold = otsu_threshold(source);
    r.segmented = binarize(source, r.threshold);
  });
  r.closed = detail::timed_stage("close", r.timings, [&] {
    const auto se = StructuringElement::make(config.closing_shape, config.closing_radius);
    return remove_small_components(morphology(r.segmented, se, MorphOp::Close), config.min_component_size, 8);
  });
  r.skeleton = detail::timed_stage("skeleton", r.timings, [&] { return prune(skeletonize(r.closed), config.prune); });
  r.edges = detail::timed_stage("edges", r.timings, [&] { return canny(mask_to_gray(r.closed), config.canny); });
  r.graph = detail::timed_stage("graph", r.timings, [&] {
    const auto nodes = config.node_source == NodeSource::Skeleton
                           ? nodes_from_mask(r.skeleton.mask, r.vesselness)
                           : extract_nodes(r.vesselness, config.node_window, config.node_floor);
    return build_graph(nodes, r.vesselness, config.cost);
  });
  if (config.output_dir) save_artifacts(r, config, *config.output_dir);
  return r;
}

// ---------------------------------------------------------------------------
// Segment measurement and sessions
// ---------------------------------------------------------------------------

struct SegmentRecord {
  Point start_click, end_click;
  NodeId start_node = 0, end_node = 0;
  CenterlinePath path;
  std::optional<CubicSpline> spline;  // absent when the path is a single node
  double trace_length_px = 0.0;
  double spline_length_px = 0.0;
  double length_px = 0.0;  // per LengthMode
  std::optional<double> length_mm;
  RadiusProfile radius;
};

inline json to_json(const SegmentRecord& s, std::optional<double> pixel_spacing_mm = std::nullopt) {
  json spline = nullptr;
  if (s.spline) {
    json pts = json::array();
    for (const auto& p : s.spline->control_points()) pts.push_back(json::array({p.x, p.y}));
    json samples = json::array();
    for (const auto& p : sample_spline(*s.spline, 1.0)) samples.push_back(json::array({p.x, p.y}));
    spline = {{"knots", s.spline->knots()}, {"control_points", pts}, {"samples", samples}};
  }
  json radius = to_json(s.radius);
  if (pixel_spacing_mm) radius["mean_mm"] = s.radius.mean_radius() * *pixel_spacing_mm;
  json j = {{"start", to_json(s.start_click)},
            {"end", to_json(s.end_click)},
            {"start_node", s.start_node},
            {"end_node", s.end_node},
            {"nodes", s.path.nodes},
            {"pixels", to_json(s.path.pixels)},
            {"cost", s.path.cost},
            {"spline", spline},
            {"length_px", s.length_px},
            {"trace_length_px", s.trace_length_px},
            {"spline_length_px", s.spline_length_px},
            {"length_mm", s.length_mm ? json(*s.length_mm) : json(nullptr)},
            {"radius", radius},
            {"samples", radius["samples"]}};
  return j;
}

/// Snap both clicks, trace the cheapest path, fit a spline through the path
/// nodes and measure length and radius against the closed mask.
inline SegmentRecord measure_segment(const PipelineResult& result, const FloatImage& distance, Point start_click,
                                     Point end_click, const PipelineConfig& config,
                                     const ImageMetadata& meta = {}) {
  SegmentRecord s;
  s.start_click = start_click;
  s.end_click = end_click;
  s.start_node = snap_to_node(result.graph, start_click);
  s.end_node = snap_to_node(result.graph, end_click);
  s.path = shortest_path(result.graph, s.start_node, s.end_node);
  s.trace_length_px = path_length(std::span<const Point>(s.path.pixels));
  if (s.path.nodes.size() >= 2) {
    std::vector<Point2> control;
    for (auto id : s.path.nodes) control.push_back(to_point2(result.graph.node(id).position));
    s.spline = fit_natural_spline(control);
    s.spline_length_px = path_length(std::span<const Point2>(sample_spline(*s.spline, 0.1)));
  }
  s.length_px = config.length_mode == LengthMode::Spline ? s.spline_length_px : s.trace_length_px;
  if (meta.pixel_spacing_mm) s.length_mm = s.length_px * *meta.pixel_spacing_mm;
  s.radius = estimate_radius(std::span<const Point>(s.path.pixels), distance, config.radius_step);
  return s;
}

struct SessionState {
  std::string id;
  GrayImage image;
  PipelineConfig config;
  ImageMetadata metadata;
  std::optional<PipelineResult> result;
  FloatImage distance;  // of result->closed
  std::vector<SegmentRecord> segments;

  void run() {
    result = run_pipeline(image, config);
    distance = distance_transform(result->closed);
    segments.clear();
  }
};

/// Appends the measured segment to the session (append-only).
inline const SegmentRecord& trace_segment(SessionState& session, Point start_click, Point end_click) {
  if (!session.result) throw Error(ErrorCode::PipelineNotRun, "the pipeline has not been run for this session");
  if (session.result->graph.empty()) throw Error(ErrorCode::EmptyGraph, "the vessel graph is empty");
  session.segments.push_back(
      measure_segment(*session.result, session.distance, start_click, end_click, session.config, session.metadata));
  return session.segments.back();
}

}  // namespace angio

#endif  // ANGIO_PIPELINE_HPP
