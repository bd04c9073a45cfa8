// Command-line front end: run, trace, serve, phantom.
//
// Exit codes: 0 success, 1 processing error, 2 bad arguments or unreadable input.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "angio/angio.hpp"

namespace {

constexpr int kExitStage = 1;
constexpr int kExitUsage = 2;

std::optional<angio::Point> parse_xy(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return std::nullopt;
  try {
    std::size_t used_x = 0, used_y = 0;
    const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
    const int x = std::stoi(xs, &used_x), y = std::stoi(ys, &used_y);
    if (used_x != xs.size() || used_y != ys.size()) return std::nullopt;
    return angio::Point{x, y};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool is_input_error(angio::ErrorCode code) {
  using angio::ErrorCode;
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptFile:
    case ErrorCode::ZeroDimension:
    case ErrorCode::InvalidParams:
    case ErrorCode::EvenWindow:
    case ErrorCode::EvenSize:
    case ErrorCode::NonPositiveSigma:
    case ErrorCode::InvalidThresholdOrder:
    case ErrorCode::BadRequest:
      return true;
    default:
      return false;
  }
}

int report(const angio::Error& e) {
  std::cerr << "angio: ";
  if (!e.stage().empty()) std::cerr << "stage " << e.stage() << ": ";
  std::cerr << angio::code_name(e.code()) << ": " << e.what() << "\n";
  // Bad config or input files are caller mistakes; anything raised inside a
  // stage is a processing failure.
  return e.stage().empty() && is_input_error(e.code()) ? kExitUsage : kExitStage;
}

angio::PipelineConfig config_for(const std::string& config_path) {
  return config_path.empty() ? angio::PipelineConfig{} : angio::load_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Angiogram vessel analysis: enhancement, segmentation, skeleton, edges and centreline tracing"};
  app.require_subcommand(1);

  std::string image_path, config_path, out_dir, start_text, end_text, phantom_kind = "tube", phantom_out;
  int port = 8080, threads = 0, phantom_size = 0;
  std::string host = "127.0.0.1";

  auto* run = app.add_subcommand("run", "Run the pipeline and write stage artifacts");
  run->add_option("image", image_path, "Input PNG or PGM")->required();
  run->add_option("--config", config_path, "JSON pipeline config");
  run->add_option("--out", out_dir, "Artifact directory (default: out)");
  run->add_option("--threads", threads, "Frangi worker threads");

  auto* trace = app.add_subcommand("trace", "Run the pipeline and trace one segment; prints JSON");
  trace->add_option("image", image_path, "Input PNG or PGM")->required();
  trace->add_option("--start", start_text, "Start click x,y")->required();
  trace->add_option("--end", end_text, "End click x,y")->required();
  trace->add_option("--config", config_path, "JSON pipeline config");
  trace->add_option("--threads", threads, "Frangi worker threads");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");

  auto* phantom = app.add_subcommand("phantom", "Write a synthetic test image");
  phantom->add_option("kind", phantom_kind, "tube | bar | angiogram")
      ->check(CLI::IsMember({"tube", "bar", "angiogram"}));
  phantom->add_option("output", phantom_out, "Output .pgm or .png")->required();
  phantom->add_option("--size", phantom_size, "Image size in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run || *trace) {
      auto config = config_for(config_path);
      if (threads > 0) config.threads = static_cast<unsigned>(threads);
      const auto image = angio::load_image(image_path);
      if (*run) {
        if (!out_dir.empty()) config.output_dir = out_dir;
        else if (!config.output_dir) config.output_dir = "out";
        const auto result = angio::run_pipeline(image, config);
        std::cout << "wrote " << config.output_dir->string() << " (" << result.graph.node_count() << " nodes, "
                  << result.graph.edge_count() << " edges)\n";
        return 0;
      }
      const auto a = parse_xy(start_text), b = parse_xy(end_text);
      if (!a || !b) {
        std::cerr << "angio: --start and --end take x,y integer pairs\n";
        return kExitUsage;
      }
      if (!image.contains(*a) || !image.contains(*b)) {
        std::cerr << "angio: click outside the " << image.width() << "x" << image.height() << " image\n";
        return kExitUsage;
      }
      angio::SessionState session;
      session.image = image;
      session.config = config;
      session.config.output_dir.reset();
      session.metadata = angio::load_metadata_for(image_path);
      session.run();
      try {
        const auto& rec = angio::trace_segment(session, *a, *b);
        std::cout << angio::to_json(rec, session.metadata.pixel_spacing_mm).dump(2) << "\n";
      } catch (const angio::Error& e) {
        throw e.with_stage("trace");
      }
      return 0;
    }
    if (*serve) {
      angio::Service service;
      httplib::Server server;
      angio::mount(server, service);
      std::cerr << "angio: listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "angio: cannot bind " << host << ":" << port << "\n";
        return kExitUsage;
      }
      return 0;
    }
    if (*phantom) {
      angio::GrayImage img;
      if (phantom_kind == "tube") {
        img = angio::phantom::horizontal_tube(phantom_size > 0 ? phantom_size : 128, phantom_size > 0 ? phantom_size : 128);
      } else if (phantom_kind == "bar") {
        img = angio::phantom::vertical_bar(phantom_size > 0 ? phantom_size : 128, phantom_size > 0 ? phantom_size : 128);
      } else {
        img = angio::phantom::synthetic_angiogram(phantom_size > 0 ? phantom_size : 512);
      }
      angio::save_image(img, phantom_out);
      return 0;
    }
  } catch (const angio::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "angio: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
