#include "railsim/railsim.h"

#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "railsim/error.hpp"
#include "railsim/harness.hpp"
#include "railsim/io.hpp"
#include "railsim/ppo.hpp"
#include "railsim/rollout.hpp"

struct rs_world {
  std::shared_ptr<const railsim::World> world;
};

struct rs_policy {
  std::shared_ptr<const railsim::PolicyParams> params;
};

struct rs_record {
  railsim::RunRecord record;
};

struct rs_env {
  std::shared_ptr<const railsim::World> world;
  std::unique_ptr<railsim::RailEnv> env;
};

namespace {

thread_local std::string g_last_error;

rs_status status_of(railsim::ErrorCode c) {
  switch (c) {
    case railsim::ErrorCode::kParse: return RS_ERR_PARSE;
    case railsim::ErrorCode::kDanglingReference: return RS_ERR_DANGLING_REFERENCE;
    case railsim::ErrorCode::kInvariant: return RS_ERR_INVARIANT;
    case railsim::ErrorCode::kInvalidArgument: return RS_ERR_INVALID_ARGUMENT;
    case railsim::ErrorCode::kIo: return RS_ERR_IO;
    case railsim::ErrorCode::kIncompatible: return RS_ERR_INCOMPATIBLE;
    case railsim::ErrorCode::kNumeric: return RS_ERR_NUMERIC;
  }
  return RS_ERR_INTERNAL;
}

template <typename F>
rs_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return RS_OK;
  } catch (const railsim::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return RS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw railsim::Error(railsim::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void copy_out(const std::vector<double>& v, double* dst, size_t capacity) {
  if (!dst) return;
  if (capacity < v.size()) {
    throw railsim::Error(railsim::ErrorCode::kInvalidArgument,
                         "observation buffer holds " + std::to_string(capacity) + ", need " + std::to_string(v.size()));
  }
  std::copy(v.begin(), v.end(), dst);
}

}  // namespace

extern "C" {

const char* rs_last_error(void) { return g_last_error.c_str(); }

const char* rs_status_name(rs_status status) {
  switch (status) {
    case RS_OK: return "ok";
    case RS_ERR_PARSE: return "parse error";
    case RS_ERR_DANGLING_REFERENCE: return "dangling reference";
    case RS_ERR_INVARIANT: return "invariant violation";
    case RS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RS_ERR_IO: return "i/o error";
    case RS_ERR_INCOMPATIBLE: return "incompatible";
    case RS_ERR_NUMERIC: return "numeric error";
    case RS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rs_version(void) { return "0.1.0"; }

void rs_string_free(char* s) { std::free(s); }

rs_status rs_world_load(const char* route_path, const char* timetable_path, const char* od_path, rs_world** out) {
  return guarded([&] {
    require(route_path, "route path");
    require(timetable_path, "timetable path");
    require(od_path, "od path");
    require(out, "out");
    *out = nullptr;
    auto w = std::make_unique<rs_world>();
    w->world = railsim::World::load_files(route_path, timetable_path, od_path);
    *out = w.release();
  });
}

void rs_world_free(rs_world* world) { delete world; }

rs_status rs_world_info_get(const rs_world* world, rs_world_info* out) {
  return guarded([&] {
    require(world, "world");
    require(out, "out");
    const auto& w = *world->world;
    out->stations = w.model().stations().size();
    out->blocks = w.model().blocks().size();
    out->control_points = w.model().control_points().size();
    out->routes = w.model().routes().size();
    out->trains = w.placements().size();
    out->timetable_entries = w.timetable().entries.size();
    out->service_start_s = w.service_start();
    out->service_end_s = w.service_end();
    out->fingerprint = w.fingerprint();
  });
}

rs_status rs_policy_load(const char* path, rs_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto p = std::make_unique<rs_policy>();
    p->params = std::make_shared<const railsim::PolicyParams>(railsim::parse_checkpoint(railsim::read_file(path)));
    *out = p.release();
  });
}

rs_status rs_policy_save(const rs_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    railsim::write_file_atomic(path, railsim::serialize_checkpoint(*policy->params));
  });
}

void rs_policy_free(rs_policy* policy) { delete policy; }

void rs_run_options_init(rs_run_options* o) {
  if (!o) return;
  o->scenario_path = nullptr;
  o->controller = "timetable-only";
  o->policy = nullptr;
  o->seed = 0;
  o->horizon_s = 0;
  o->greedy = 1;
  o->stochastic_passengers = 1;
}

rs_status rs_run(const rs_world* world, const rs_run_options* options, rs_record** out) {
  return guarded([&] {
    require(world, "world");
    require(options, "options");
    require(options->scenario_path, "scenario path");
    require(out, "out");
    *out = nullptr;
    const auto scenario = railsim::parse_scenario(railsim::read_file(options->scenario_path), world->world->model());
    railsim::RunOptions ro;
    ro.controller = railsim::parse_controller(options->controller ? options->controller : "timetable-only");
    if (options->policy) ro.policy = options->policy->params;
    ro.greedy = options->greedy != 0;
    ro.seed = options->seed;
    ro.horizon_s = options->horizon_s > 0 ? options->horizon_s : 0;
    ro.stochastic_passengers = options->stochastic_passengers != 0;
    auto r = std::make_unique<rs_record>();
    r->record = railsim::run_scenario(world->world, scenario, ro);
    *out = r.release();
  });
}

rs_status rs_record_load(const char* path, rs_record** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto r = std::make_unique<rs_record>();
    r->record = railsim::parse_record(railsim::read_file(path));
    *out = r.release();
  });
}

rs_status rs_record_save(const rs_record* record, const char* path) {
  return guarded([&] {
    require(record, "record");
    require(path, "path");
    railsim::write_file_atomic(path, railsim::serialize_record(record->record));
  });
}

void rs_record_free(rs_record* record) { delete record; }

rs_status rs_record_metrics_json(const rs_record* record, char** out) {
  return guarded([&] {
    require(record, "record");
    require(out, "out");
    *out = dup(railsim::metrics_json(railsim::compute_metrics(record->record)));
  });
}

rs_status rs_record_wall_ms(const rs_record* record, double* out) {
  return guarded([&] {
    require(record, "record");
    require(out, "out");
    *out = record->record.wall_ms;
  });
}

void rs_svg_style_init(rs_svg_style* style) {
  if (!style) return;
  const railsim::SvgStyle d;
  style->width = d.width;
  style->height = d.height;
  style->margin = d.margin;
  style->title = d.title ? 1 : 0;
}

rs_status rs_render_svg(const rs_record* record, const rs_svg_style* style, char** out) {
  return guarded([&] {
    require(record, "record");
    require(out, "out");
    railsim::SvgStyle s;
    if (style) {
      if (style->width <= 2 * style->margin || style->height <= 2 * style->margin || style->margin < 0) {
        throw railsim::Error(railsim::ErrorCode::kInvalidArgument, "svg size leaves no plot area");
      }
      s.width = style->width;
      s.height = style->height;
      s.margin = style->margin;
      s.title = style->title != 0;
    }
    if (record->record.positions.empty()) {
      throw railsim::Error(railsim::ErrorCode::kInvalidArgument, "record has no samples");
    }
    *out = dup(railsim::render_time_space_svg(record->record, s));
  });
}

rs_status rs_compare(const rs_record* baseline, const rs_record* candidate, char** report_json, char** report_table) {
  return guarded([&] {
    require(baseline, "baseline");
    require(candidate, "candidate");
    const auto c = railsim::compare(baseline->record, candidate->record);
    std::string j = railsim::compare_json(c);
    std::string t = railsim::compare_table(c);
    char* jp = report_json ? dup(j) : nullptr;
    if (report_table) {
      try {
        *report_table = dup(t);
      } catch (...) {
        std::free(jp);
        throw;
      }
    }
    if (report_json) *report_json = jp;
  });
}

rs_status rs_train(const char* env_config_path, const char* train_config_path, uint64_t seed,
                   rs_train_callback callback, void* user, rs_policy** out) {
  return guarded([&] {
    require(env_config_path, "env config path");
    require(out, "out");
    *out = nullptr;
    const auto cfg = railsim::load_episode_config(env_config_path);
    railsim::PpoConfig pc;
    if (train_config_path) pc = railsim::parse_ppo_config(railsim::read_file(train_config_path));
    if (seed != 0) pc.seed = seed;
    auto world = railsim::World::load_files(cfg.route_path, cfg.timetable_path, cfg.od_path);
    railsim::CurveCallback cb;
    if (callback) {
      cb = [&](const railsim::CurvePoint& c, const railsim::PolicyParams&) {
        callback(railsim::curve_point_json(c).c_str(), user);
      };
    }
    auto result = railsim::train(world, cfg, pc, cb);
    auto p = std::make_unique<rs_policy>();
    p->params = std::make_shared<const railsim::PolicyParams>(std::move(result.params));
    *out = p.release();
  });
}

rs_status rs_rollout_dump(const char* env_config_path, const rs_policy* policy, uint64_t first_seed, size_t count,
                          const char* out_path) {
  return guarded([&] {
    require(env_config_path, "env config path");
    require(policy, "policy");
    require(out_path, "out path");
    const auto cfg = railsim::load_episode_config(env_config_path);
    auto world = railsim::World::load_files(cfg.route_path, cfg.timetable_path, cfg.od_path);
    std::vector<std::uint64_t> seeds;
    for (size_t i = 0; i < count; ++i) seeds.push_back(first_seed + i);
    const auto trajs = railsim::vector_rollout(world, cfg, seeds, railsim::policy_action_fn(policy->params, false),
                                               static_cast<std::size_t>(-1));
    std::ostringstream os;
    railsim::write_trajectories(os, trajs);
    railsim::write_file_atomic(out_path, os.str());
  });
}

rs_status rs_env_create(const char* env_config_path, rs_env** out) {
  return guarded([&] {
    require(env_config_path, "env config path");
    require(out, "out");
    *out = nullptr;
    const auto cfg = railsim::load_episode_config(env_config_path);
    auto e = std::make_unique<rs_env>();
    e->world = railsim::World::load_files(cfg.route_path, cfg.timetable_path, cfg.od_path);
    e->env = std::make_unique<railsim::RailEnv>(e->world, cfg);
    *out = e.release();
  });
}

void rs_env_free(rs_env* env) { delete env; }

rs_status rs_env_observation_size(const rs_env* env, size_t* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    *out = env->env->observation_size();
  });
}

rs_status rs_env_action_dims(const rs_env* env, int* dims, size_t capacity, size_t* count) {
  return guarded([&] {
    require(env, "env");
    const auto d = env->env->action_dims();
    if (count) *count = d.size();
    if (dims) {
      for (size_t i = 0; i < d.size() && i < capacity; ++i) dims[i] = d[i];
    }
  });
}

rs_status rs_env_reset(rs_env* env, uint64_t seed, double* observation, size_t capacity) {
  return guarded([&] {
    require(env, "env");
    copy_out(env->env->reset(seed), observation, capacity);
  });
}

rs_status rs_env_step(rs_env* env, const int* actions, size_t count, double* observation, size_t capacity,
                      double* reward, int* done) {
  return guarded([&] {
    require(env, "env");
    if (count > 0) require(actions, "actions");
    auto r = env->env->step(std::span<const int>(actions, count));
    copy_out(r.observation, observation, capacity);
    if (reward) *reward = r.reward;
    if (done) *done = r.done ? 1 : 0;
  });
}

}  // extern "C"
