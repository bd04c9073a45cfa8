#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "angio/image_io.hpp"
#include "angio/phantom.hpp"
#include "angio/pipeline.hpp"

using namespace angio;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(ANGIO_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path workdir() {
  auto dir = std::filesystem::temp_directory_path() / ("angio_cli_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, RunWritesNumberedArtifacts) {
  const auto dir = workdir();
  save_image(phantom::horizontal_tube(), dir / "phantom.pgm");
  const auto r = run("run " + (dir / "phantom.pgm").string() + " --out " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"01_median.png", "02_frangi.png", "03_otsu.png", "04_close.png", "05_skeleton.png",
                        "06_edges.png", "07_graph.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
}

TEST(Cli, TracePrintsSegmentJson) {
  const auto dir = workdir();
  save_image(phantom::horizontal_tube(), dir / "phantom.pgm");
  const auto r = run("trace " + (dir / "phantom.pgm").string() + " --start 10,64 --end 118,64 2>/dev/null");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["length_px"].get<double>(), 108.0, 0.02 * 108.0);
  EXPECT_TRUE(j["length_mm"].is_null());
}

TEST(Cli, TraceUsesMetadataSidecar) {
  const auto dir = workdir() / "meta";
  std::filesystem::create_directories(dir);
  save_image(phantom::horizontal_tube(), dir / "p.png");
  const std::string text = R"({"pixel_spacing_mm": 0.2})";
  detail::write_file(dir / "p.png.meta.json", Bytes(text.begin(), text.end()));
  const auto r = run("trace " + (dir / "p.png").string() + " --start 10,64 --end 118,64");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["length_mm"].get<double>(), 0.2 * j["length_px"].get<double>(), 1e-12);
}

TEST(Cli, MissingFileExitsTwo) {
  const auto r = run("run /nonexistent/missing.pgm");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("file not found"), std::string::npos) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
}

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  const auto dir = workdir();
  save_image(phantom::horizontal_tube(), dir / "phantom.pgm");
  EXPECT_EQ(run("trace " + (dir / "phantom.pgm").string() + " --start 10 --end 118,64").code, 2);
  EXPECT_EQ(run("trace " + (dir / "phantom.pgm").string() + " --start 10,64").code, 2);
  const std::string bad = R"({"median_window": 4})";
  detail::write_file(dir / "bad.json", Bytes(bad.begin(), bad.end()));
  EXPECT_EQ(run("run " + (dir / "phantom.pgm").string() + " --config " + (dir / "bad.json").string()).code, 2);
}

TEST(Cli, StageErrorExitsOne) {
  const auto dir = workdir();
  save_image(GrayImage(20, 20, 77), dir / "flat.pgm");
  const auto r = run("run " + (dir / "flat.pgm").string() + " --out " + (dir / "flat_out").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("otsu"), std::string::npos) << r.out;
}

TEST(Cli, NoPathExitsOne) {
  const auto dir = workdir();
  BinaryMask m(96, 96);
  const auto a = phantom::line_tube_mask(96, 96, {0, 20}, {1, 20}, 7);
  const auto b = phantom::line_tube_mask(96, 96, {0, 70}, {1, 70}, 7);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = a.data()[i] || b.data()[i];
  save_image(phantom::paint(m, 200, 40), dir / "two.pgm");
  const auto r = run("trace " + (dir / "two.pgm").string() + " --start 30,20 --end 30,70");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("NoPath"), std::string::npos) << r.out;
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }
