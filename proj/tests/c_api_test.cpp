#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "railsim/railsim.h"

namespace {

std::string fixture(const char* name) { return std::string(RAILSIM_FIXTURE_DIR) + "/desk_line/" + name; }

struct World {
  rs_world* w = nullptr;
  World() {
    REQUIRE(rs_world_load(fixture("route.json").c_str(), fixture("timetable.csv").c_str(), fixture("od.csv").c_str(),
                          &w) == RS_OK);
  }
  ~World() { rs_world_free(w); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  rs_string_free(s);
  return out;
}

rs_record* run(const World& world, const char* controller, std::uint64_t seed) {
  rs_run_options opt;
  rs_run_options_init(&opt);
  const std::string sc = fixture("scenario_toy.json");
  opt.scenario_path = sc.c_str();
  opt.controller = controller;
  opt.seed = seed;
  rs_record* r = nullptr;
  REQUIRE(rs_run(world.w, &opt, &r) == RS_OK);
  return r;
}

}  // namespace

TEST_CASE("status names") {
  CHECK(std::string(rs_status_name(RS_OK)) == "ok");
  CHECK(std::string(rs_status_name(RS_ERR_INCOMPATIBLE)) != std::string(rs_status_name(RS_ERR_PARSE)));
  CHECK(std::string(rs_version()).size() > 0);
}

TEST_CASE("loading errors") {
  rs_world* w = nullptr;
  CHECK(rs_world_load("/nonexistent/route.json", fixture("timetable.csv").c_str(), fixture("od.csv").c_str(), &w) ==
        RS_ERR_IO);
  CHECK(w == nullptr);
  CHECK(std::string(rs_last_error()).size() > 0);
  CHECK(rs_world_load(nullptr, nullptr, nullptr, &w) == RS_ERR_INVALID_ARGUMENT);
  rs_policy* p = nullptr;
  CHECK(rs_policy_load(fixture("route.json").c_str(), &p) != RS_OK);
  CHECK(p == nullptr);
}

TEST_CASE("world info") {
  World world;
  rs_world_info info;
  REQUIRE(rs_world_info_get(world.w, &info) == RS_OK);
  CHECK(std::string(rs_last_error()).empty());
  CHECK(info.stations == 8);
  CHECK(info.control_points == 20);
  CHECK(info.trains > 0);
  CHECK(info.service_start_s < info.service_end_s);
  CHECK(rs_world_info_get(nullptr, &info) == RS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run, metrics, svg and compare") {
  World world;
  rs_record* a = run(world, "timetable-only", 1);
  rs_record* b = run(world, "timetable-only", 1);
  rs_record* c = run(world, "all-proceed", 1);

  char* ma = nullptr;
  char* mb = nullptr;
  REQUIRE(rs_record_metrics_json(a, &ma) == RS_OK);
  REQUIRE(rs_record_metrics_json(b, &mb) == RS_OK);
  CHECK(take(ma) == take(mb));

  char* sa = nullptr;
  char* sb = nullptr;
  REQUIRE(rs_render_svg(a, nullptr, &sa) == RS_OK);
  rs_svg_style style;
  rs_svg_style_init(&style);
  REQUIRE(rs_render_svg(b, &style, &sb) == RS_OK);
  const std::string svg = take(sa);
  CHECK(svg == take(sb));
  CHECK(svg.find("<svg") != std::string::npos);

  char* json = nullptr;
  char* table = nullptr;
  REQUIRE(rs_compare(a, c, &json, &table) == RS_OK);
  CHECK(take(json).find("delta_pct") != std::string::npos);
  CHECK(!take(table).empty());

  const auto path = std::filesystem::temp_directory_path() / "railsim_c_api_record.json";
  REQUIRE(rs_record_save(a, path.c_str()) == RS_OK);
  rs_record* back = nullptr;
  REQUIRE(rs_record_load(path.c_str(), &back) == RS_OK);
  char* mback = nullptr;
  REQUIRE(rs_record_metrics_json(back, &mback) == RS_OK);
  REQUIRE(rs_record_metrics_json(a, &ma) == RS_OK);
  CHECK(take(mback) == take(ma));
  std::filesystem::remove(path);

  double wall = -1.0;
  CHECK(rs_record_wall_ms(a, &wall) == RS_OK);
  CHECK(wall >= 0.0);

  rs_record_free(back);
  rs_record_free(a);
  rs_record_free(b);
  rs_record_free(c);
}

TEST_CASE("records from different scenarios do not compare") {
  World world;
  rs_record* a = run(world, "timetable-only", 1);
  rs_run_options opt;
  rs_run_options_init(&opt);
  const std::string sc = fixture("scenario_midline.json");
  opt.scenario_path = sc.c_str();
  opt.horizon_s = 600;
  rs_record* b = nullptr;
  REQUIRE(rs_run(world.w, &opt, &b) == RS_OK);
  char* json = nullptr;
  char* table = nullptr;
  CHECK(rs_compare(a, b, &json, &table) == RS_ERR_INCOMPATIBLE);
  CHECK(json == nullptr);
  CHECK(std::string(rs_last_error()).size() > 0);
  rs_record_free(a);
  rs_record_free(b);
}

TEST_CASE("bad controller") {
  World world;
  rs_run_options opt;
  rs_run_options_init(&opt);
  const std::string sc = fixture("scenario_toy.json");
  opt.scenario_path = sc.c_str();
  opt.controller = "nonsense";
  rs_record* r = nullptr;
  CHECK(rs_run(world.w, &opt, &r) == RS_ERR_INVALID_ARGUMENT);
  opt.controller = "policy";
  CHECK(rs_run(world.w, &opt, &r) == RS_ERR_INVALID_ARGUMENT);
  CHECK(r == nullptr);
}

TEST_CASE("environment") {
  rs_env* env = nullptr;
  REQUIRE(rs_env_create(fixture("episode_toy.json").c_str(), &env) == RS_OK);
  size_t obs_n = 0;
  REQUIRE(rs_env_observation_size(env, &obs_n) == RS_OK);
  size_t dims_n = 0;
  REQUIRE(rs_env_action_dims(env, nullptr, 0, &dims_n) == RS_OK);
  std::vector<int> dims(dims_n);
  REQUIRE(rs_env_action_dims(env, dims.data(), dims.size(), &dims_n) == RS_OK);
  CHECK(dims_n == 1);
  CHECK(dims[0] == 8);

  std::vector<double> obs(obs_n);
  REQUIRE(rs_env_reset(env, 3, obs.data(), obs.size()) == RS_OK);
  CHECK(rs_env_reset(env, 3, obs.data(), obs.size() - 1) == RS_ERR_INVALID_ARGUMENT);
  REQUIRE(rs_env_reset(env, 3, obs.data(), obs.size()) == RS_OK);
  std::vector<int> act(dims_n, 0);
  double reward = 0.0;
  int done = 0;
  int steps = 0;
  while (!done) {
    REQUIRE(rs_env_step(env, act.data(), act.size(), obs.data(), obs.size(), &reward, &done) == RS_OK);
    ++steps;
  }
  CHECK(steps == 5400 / 60);
  std::vector<int> wrong(dims_n + 1, 0);
  CHECK(rs_env_step(env, wrong.data(), wrong.size(), obs.data(), obs.size(), &reward, &done) ==
        RS_ERR_INVALID_ARGUMENT);
  rs_env_free(env);
  rs_env_free(nullptr);
}
