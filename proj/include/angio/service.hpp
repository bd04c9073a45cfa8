#ifndef ANGIO_SERVICE_HPP
#define ANGIO_SERVICE_HPP

// HTTP+JSON front end. Service::handle is transport-free so it can be
// exercised directly; serve() binds it to an httplib server.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <string>
#include <utility>

#include <boost/beast/core/detail/base64.hpp>
#include <httplib.h>
#include <json.hpp>

#include "angio/error.hpp"
#include "angio/image_io.hpp"
#include "angio/pipeline.hpp"

namespace angio {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  json as_json() const { return json::parse(body); }
};

inline Bytes base64_decode(std::string_view text) {
  namespace b64 = boost::beast::detail::base64;
  std::string clean;
  clean.reserve(text.size());
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) clean.push_back(ch);
  // Accept data URLs as sent by browsers.
  if (const auto comma = clean.find(','); clean.rfind("data:", 0) == 0 && comma != std::string::npos)
    clean.erase(0, comma + 1);
  // The decoder stops quietly at '=' or junk, so padding is checked here.
  std::size_t body = clean.size();
  while (body > 0 && clean.size() - body < 2 && clean[body - 1] == '=') --body;
  if (clean.size() % 4 != 0 && clean.size() != body) throw Error(ErrorCode::BadRequest, "image is not valid base64");
  Bytes out(b64::decoded_size(clean.size()));
  const auto [written, read] = b64::decode(out.data(), clean.data(), body);
  if (read != body || body % 4 == 1) throw Error(ErrorCode::BadRequest, "image is not valid base64");
  out.resize(written);
  return out;
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::FileNotFound:
      return 404;
    case ErrorCode::PipelineNotRun:
      return 409;
    case ErrorCode::BadRequest:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptFile:
    case ErrorCode::ZeroDimension:
    case ErrorCode::InvalidParams:
    case ErrorCode::EvenWindow:
    case ErrorCode::EvenSize:
    case ErrorCode::NonPositiveSigma:
    case ErrorCode::InvalidThresholdOrder:
    case ErrorCode::OutOfBounds:
      return 400;
    case ErrorCode::IoFailure:
      return 500;
    default:
      return 422;
  }
}

inline Response error_response(const Error& e) {
  json j = {{"error", code_name(e.code())}, {"message", e.what()}};
  if (!e.stage().empty()) j["stage"] = e.stage();
  return {http_status(e.code()), "application/json", j.dump()};
}

class Service {
 public:
  Response handle(const std::string& method, const std::string& path, const std::string& body = {}) {
    try {
      return route(method, path, body);
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(Error(ErrorCode::BadRequest, std::string("malformed JSON: ") + e.what()));
    } catch (const std::exception& e) {
      return {500, "application/json", json{{"error", "Internal"}, {"message", e.what()}}.dump()};
    }
  }

  std::size_t session_count() const {
    std::shared_lock lock(store_mutex_);
    return sessions_.size();
  }

 private:
  struct Slot {
    std::mutex mutex;  // one request per session at a time
    SessionState state;
  };

  static bool is_stage_name(std::string_view name) {
    if (name == "input" || name == "direction") return true;
    return std::find(kStageNames.begin(), kStageNames.end(), name) != kStageNames.end();
  }

  static Response ok(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::shared_lock lock(store_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
    return it->second;
  }

  Response route(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex kSession(R"(^/sessions/([A-Za-z0-9_-]+)$)");
    static const std::regex kAction(R"(^/sessions/([A-Za-z0-9_-]+)/(run|trace|segments)$)");
    static const std::regex kStage(R"(^/sessions/([A-Za-z0-9_-]+)/stage/([a-z_]+)\.png$)");
    std::smatch m;
    if (path == "/sessions" && method == "POST") return create(body);
    if (path == "/health" && method == "GET") return ok({{"status", "ok"}});
    if (std::regex_match(path, m, kSession)) {
      if (method == "DELETE") return remove(m[1]);
      if (method == "GET") return summary(m[1]);
    } else if (std::regex_match(path, m, kAction)) {
      const std::string action = m[2];
      if (action == "run" && method == "POST") return run(m[1]);
      if (action == "trace" && method == "POST") return trace(m[1], body);
      if (action == "segments" && method == "GET") return segments(m[1]);
    } else if (std::regex_match(path, m, kStage)) {
      if (method == "GET") return stage(m[1], m[2]);
    } else {
      return {404, "application/json", json{{"error", "NotFound"}, {"message", "no route " + path}}.dump()};
    }
    return {405, "application/json", json{{"error", "MethodNotAllowed"}, {"message", method + " " + path}}.dump()};
  }

  Response create(const std::string& body) {
    auto slot = std::make_shared<Slot>();
    const json j = json::parse(body);
    if (!j.is_object() || !j.contains("image") || !j.at("image").is_string())
      throw Error(ErrorCode::BadRequest, "expected {\"image\": <base64 PNG/PGM>}");
    slot->state.image = decode_image(base64_decode(j.at("image").get<std::string>()));
    if (j.contains("config") && !j.at("config").is_null()) slot->state.config = config_from_json(j.at("config"));
    // Artifacts are served over HTTP, never written by the service.
    slot->state.config.output_dir.reset();
    if (j.contains("metadata") && !j.at("metadata").is_null()) slot->state.metadata = metadata_from_json(j.at("metadata"));
    std::unique_lock lock(store_mutex_);
    slot->state.id = "s" + std::to_string(++next_id_);
    sessions_.emplace(slot->state.id, slot);
    return ok({{"session_id", slot->state.id},
               {"width", slot->state.image.width()},
               {"height", slot->state.image.height()}},
              201);
  }

  Response remove(const std::string& id) {
    std::unique_lock lock(store_mutex_);
    if (sessions_.erase(id) == 0) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
    return ok({{"deleted", id}});
  }

  static json run_summary(const SessionState& s) {
    json timings = json::object();
    for (const auto& t : s.result->timings) timings[t.stage] = t.ms;
    return {{"session_id", s.id},
            {"stages", s.result->stages()},
            {"timings", timings},
            {"threshold", s.result->threshold},
            {"node_count", s.result->graph.node_count()},
            {"edge_count", s.result->graph.edge_count()},
            {"endpoints", s.result->skeleton.endpoints.size()},
            {"branchpoints", s.result->skeleton.branchpoints.size()}};
  }

  Response summary(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    const auto& s = slot->state;
    json j = {{"session_id", s.id},
              {"width", s.image.width()},
              {"height", s.image.height()},
              {"config", config_to_json(s.config)},
              {"segment_count", s.segments.size()},
              {"run", s.result ? run_summary(s) : json(nullptr)}};
    return ok(j);
  }

  Response run(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    slot->state.run();
    return ok(run_summary(slot->state));
  }

  static Point parse_point(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2 || !j.at(key)[0].is_number_integer() ||
        !j.at(key)[1].is_number_integer())
      throw Error(ErrorCode::BadRequest, std::string("'") + key + "' must be [x, y] integers");
    return {j.at(key)[0].get<int>(), j.at(key)[1].get<int>()};
  }

  Response trace(const std::string& id, const std::string& body) {
    const json j = json::parse(body);
    const Point a = parse_point(j, "start"), b = parse_point(j, "end");
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    auto& s = slot->state;
    if (s.result && (!s.image.contains(a) || !s.image.contains(b)))
      throw Error(ErrorCode::OutOfBounds, "click outside the image");
    const auto& rec = trace_segment(s, a, b);
    json out = to_json(rec, s.metadata.pixel_spacing_mm);
    out["index"] = s.segments.size() - 1;
    return ok(out);
  }

  Response segments(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    json list = json::array();
    for (const auto& rec : slot->state.segments) list.push_back(to_json(rec, slot->state.metadata.pixel_spacing_mm));
    return ok({{"segments", list}});
  }

  Response stage(const std::string& id, const std::string& name) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    const auto& s = slot->state;
    if (!is_stage_name(name))
      return {404, "application/json", json{{"error", "UnknownStage"}, {"message", "no stage '" + name + "'"}}.dump()};
    Bytes png;
    if (name == "input") {
      png = encode_png(s.image);
    } else {
      if (!s.result) throw Error(ErrorCode::PipelineNotRun, "the pipeline has not been run for this session");
      png = encode_png(render_stage(*s.result, name));
    }
    return {200, "image/png", std::string(png.begin(), png.end())};
  }

  mutable std::shared_mutex store_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_id_ = 0;
};

/// Registers every route of `service` on `server`, with permissive CORS so a
/// browser client on another origin can call it.
inline void mount(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  const std::string any = R"(/.*)";
  server.Get(any, forward);
  server.Post(any, forward);
  server.Delete(any, forward);
  server.Options(any, [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.set_payload_max_length(64u << 20);
}

}  // namespace angio

#endif  // ANGIO_SERVICE_HPP
