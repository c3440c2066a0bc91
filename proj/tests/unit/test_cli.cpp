// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <doctest.h>

#include <fcntl.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the tool in-process with stdout and stderr captured.
Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"nfps"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : store) argv.push_back(s.data());
  const fs::path o = fs::temp_directory_path() / "nfps_cli_stdout.txt";
  const fs::path e = fs::temp_directory_path() / "nfps_cli_stderr.txt";
  std::fflush(stdout);
  std::fflush(stderr);
  const int so = dup(1), se = dup(2);
  const int fo = open(o.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  const int fe = open(e.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  dup2(fo, 1);
  dup2(fe, 2);
  const int code = nfps::cli::run(static_cast<int>(argv.size()), argv.data());
  std::fflush(stdout);
  std::fflush(stderr);
  dup2(so, 1);
  dup2(se, 2);
  close(fo);
  close(fe);
  close(so);
  close(se);
  return {code, slurp(o), slurp(e)};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("help on every subcommand exits 0") {
  CHECK(run({"--help"}).code == 0);
  for (const char* sub : {"render", "sample", "train", "reconstruct", "calibrate", "evaluate"}) {
    const auto r = run({sub, "--help"});
    CHECK(r.code == 0);
    const bool lists_out = r.out.find("--out") != std::string::npos;
    CHECK(lists_out == (std::string(sub) != "evaluate"));
  }
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"render", "--bogus", "1", "--out", "x"}).code == 2);
  CHECK(run({"render"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"render", "--scene", "cube", "--out", "x"}).code == 2);
}

TEST_CASE("domain errors exit 1 with a prefixed line") {
  TempDir t("nfps_cli_err");
  const auto r = run({"reconstruct", "--data", t / "nothing", "--out", t / "o", "--mean-distance", "0.3"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("nfps-error: reconstruct: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("render, reconstruct and evaluate") {
  TempDir t("nfps_cli_flow");
  REQUIRE(run({"render", "--scene", "sphere", "--size", "64", "--out", t / "data"}).code == 0);
  for (const char* f : {"calib.txt", "mask.png", "light_000.png", "light_014.png", "gt_depth.pfm", "gt_normals.pfm", "manifest.json"})
    CHECK(fs::exists(t.path / "data" / f));
  const auto manifest = nlohmann::json::parse(slurp(t.path / "data" / "manifest.json"));
  CHECK(manifest.at("subcommand") == "render");
  CHECK(manifest.contains("seed"));
  CHECK(manifest.contains("flags"));

  REQUIRE(run({"reconstruct", "--data", t / "data", "--out", t / "rec"}).code == 0);
  for (const char* f : {"depth.pfm", "normals.pfm", "normals_nfs.pfm", "mask.png", "history.json"}) CHECK(fs::exists(t.path / "rec" / f));

  const auto ev = run({"evaluate", "--pred", t / "rec", "--gt", t / "data"});
  REQUIRE(ev.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(ev.out, m, std::regex(R"(MAE_deg=([0-9.eE+-]+) MZE_mm=([0-9.eE+-]+))")));
  CHECK(std::stod(m[1]) < 3.0);
  CHECK(std::stod(m[2]) < 3.0);

  REQUIRE(run({"reconstruct", "--data", t / "data", "--out", t / "rec2"}).code == 0);
  CHECK(slurp(t.path / "rec" / "depth.pfm") == slurp(t.path / "rec2" / "depth.pfm"));
}

TEST_CASE("sample and train") {
  TempDir t("nfps_cli_train");
  REQUIRE(run({"sample", "--count", "10", "--d", "8", "--seed", "3", "--out", t / "a.bin"}).code == 0);
  CHECK(fs::file_size(t.path / "a.bin") == 8 + 10 * (6 * 64 + 3) * 4);
  const auto tr = run({"train", "--d", "32", "--steps", "4", "--batch", "4", "--steps-per-epoch", "2", "--holdout", "8",
                       "--out", t / "n.ckpt"});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("HOLDOUT_MAE_deg=") != std::string::npos);
  CHECK(fs::exists(t.path / "n.ckpt"));
}

TEST_CASE("calibrate from rendered planes") {
  TempDir t("nfps_cli_cal");
  REQUIRE(run({"render", "--scene", "planes", "--size", "32", "--out", t / "caps"}).code == 0);
  const auto r = run({"calibrate", "--captures", t / "caps", "--init", t / "caps/calib_init.txt", "--epochs", "20", "--out",
                      t / "fit.txt"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("L1=") != std::string::npos);
  CHECK(fs::exists(t.path / "fit.txt"));
}
