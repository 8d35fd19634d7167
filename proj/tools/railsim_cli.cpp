// Command-line front end. Links only the C API of librailsim.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "railsim/railsim.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(rs_status st, const std::string& what) {
  if (st != RS_OK) throw Failure(what + ": " + rs_status_name(st) + ": " + rs_last_error());
}

struct Owned {
  char* p = nullptr;
  ~Owned() { rs_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};

using World = Handle<rs_world, rs_world_free>;
using Policy = Handle<rs_policy, rs_policy_free>;
using Record = Handle<rs_record, rs_record_free>;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure("cannot write " + tmp.string());
    out << text;
    if (!out) throw Failure("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct RunFlags {
  std::string route, timetable, od, scenario;
  std::string controller = "timetable-only";
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::int64_t horizon_s = 0;
  std::string out_dir = ".";
  bool svg = false;
  bool sample = false;
  bool deterministic_passengers = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--route", f.route, "route config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--timetable", f.timetable, "timetable (CSV)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--od", f.od, "OD rates (CSV)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--scenario", f.scenario, "scenario (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--controller", f.controller, "timetable-only | all-proceed | policy")
      ->check(CLI::IsMember({"timetable-only", "all-proceed", "policy"}));
  cmd->add_option("--checkpoint", f.checkpoint, "policy checkpoint for --controller policy");
  cmd->add_option("--seed", f.seed, "passenger and action seed");
  cmd->add_option("--horizon-s", f.horizon_s, "override the scenario horizon");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_flag("--svg", f.svg, "also write a time-space diagram");
  cmd->add_flag("--sample", f.sample, "sample policy actions instead of taking the most likely");
  cmd->add_flag("--deterministic-passengers", f.deterministic_passengers, "expected-value passenger arrivals");
}

void load_world(const RunFlags& f, World& w) {
  check(rs_world_load(f.route.c_str(), f.timetable.c_str(), f.od.c_str(), &w.p), "loading inputs");
}

void load_policy(const RunFlags& f, Policy& p) {
  if (f.controller != "policy") return;
  if (f.checkpoint.empty()) throw Failure("--controller policy needs --checkpoint");
  check(rs_policy_load(f.checkpoint.c_str(), &p.p), "loading checkpoint");
}

void run_once(const RunFlags& f, const World& w, const Policy& p, std::uint64_t seed, Record& rec) {
  rs_run_options o;
  rs_run_options_init(&o);
  o.scenario_path = f.scenario.c_str();
  o.controller = f.controller.c_str();
  o.policy = p.p;
  o.seed = seed;
  o.horizon_s = f.horizon_s;
  o.greedy = f.sample ? 0 : 1;
  o.stochastic_passengers = f.deterministic_passengers ? 0 : 1;
  check(rs_run(w.p, &o, &rec.p), "running scenario");
}

std::string svg_of(const Record& rec) {
  Owned svg;
  check(rs_render_svg(rec.p, nullptr, &svg.p), "rendering");
  return svg.str();
}

json metrics_of(const Record& rec) {
  Owned m;
  check(rs_record_metrics_json(rec.p, &m.p), "computing metrics");
  return json::parse(m.str());
}

double wall_ms_of(const Record& rec) {
  double ms = 0.0;
  check(rs_record_wall_ms(rec.p, &ms), "reading timing");
  return ms;
}

int cmd_simulate(const RunFlags& f) {
  World w;
  Policy p;
  load_world(f, w);
  load_policy(f, p);
  Record rec;
  run_once(f, w, p, f.seed, rec);
  const fs::path dir(f.out_dir);
  fs::create_directories(dir);
  check(rs_record_save(rec.p, (dir / "record.json").c_str()), "saving record");
  const json m = metrics_of(rec);
  write_text(dir / "metrics.json", m.dump() + "\n");
  if (f.svg) write_text(dir / "record.svg", svg_of(rec));
  std::printf("%s seed %llu: stop %.0f train-s, %lld stop events, %lld arrived, deviation %.3f, %.0f ms\n",
              f.controller.c_str(), static_cast<unsigned long long>(f.seed), m["stop_seconds"].get<double>(),
              m["stop_events"].get<long long>(), m["arrived"].get<long long>(), m["mean_deviation"].get<double>(),
              wall_ms_of(rec));
  return 0;
}

int cmd_evaluate(const RunFlags& f, int episodes) {
  if (episodes < 1) throw Failure("--episodes must be at least 1");
  World w;
  Policy p;
  load_world(f, w);
  load_policy(f, p);
  const fs::path dir(f.out_dir);
  fs::create_directories(dir);
  std::string lines;
  std::string timing;
  double stop = 0.0, events = 0.0, arrived = 0.0, dev = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(i);
    Record rec;
    run_once(f, w, p, seed, rec);
    const json m = metrics_of(rec);
    lines += json{{"controller", f.controller}, {"seed", seed}, {"metrics", m}}.dump() + "\n";
    timing += json{{"seed", seed}, {"wall_ms", wall_ms_of(rec)}}.dump() + "\n";
    stop += m["stop_seconds"].get<double>();
    events += m["stop_events"].get<double>();
    arrived += m["arrived"].get<double>();
    dev += m["mean_deviation"].get<double>();
    if (f.svg && i == 0) write_text(dir / "first_episode.svg", svg_of(rec));
  }
  const double n = episodes;
  const json summary = {{"controller", f.controller},
                        {"episodes", episodes},
                        {"first_seed", f.seed},
                        {"mean_stop_seconds", stop / n},
                        {"mean_stop_events", events / n},
                        {"mean_arrived", arrived / n},
                        {"mean_deviation", dev / n}};
  write_text(dir / "metrics.jsonl", lines);
  write_text(dir / "timing.jsonl", timing);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::printf("%-16s %8s %12s %12s %12s %10s\n", "controller", "episodes", "stop [s]", "stop events", "arrived",
              "deviation");
  std::printf("%-16s %8d %12.1f %12.2f %12.1f %10.3f\n", f.controller.c_str(), episodes, stop / n, events / n,
              arrived / n, dev / n);
  return 0;
}

void print_curve(const char* line, void* user) {
  auto* out = static_cast<std::string*>(user);
  *out += line;
  *out += '\n';
  const json j = json::parse(line);
  std::printf("iteration %4d  steps %8lld  mean return %12.2f  entropy %.3f\n", j["iteration"].get<int>(),
              j["steps"].get<long long>(), j["mean_return"].get<double>(), j["entropy"].get<double>());
  std::fflush(stdout);
}

int cmd_train(const std::string& env_config, const std::string& train_config, std::uint64_t seed,
              const std::string& out_dir, int dump_episodes) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::string curve;
  Policy p;
  check(rs_train(env_config.c_str(), train_config.empty() ? nullptr : train_config.c_str(), seed, print_curve, &curve,
                 &p.p),
        "training");
  write_text(dir / "curve.jsonl", curve);
  check(rs_policy_save(p.p, (dir / "checkpoint.json").c_str()), "saving checkpoint");
  if (dump_episodes > 0) {
    check(rs_rollout_dump(env_config.c_str(), p.p, seed == 0 ? 1 : seed, static_cast<size_t>(dump_episodes),
                          (dir / "trajectories.jsonl").c_str()),
          "dumping trajectories");
  }
  std::printf("wrote %s\n", (dir / "checkpoint.json").c_str());
  return 0;
}

int cmd_render(const std::string& record, std::string svg) {
  Record rec;
  check(rs_record_load(record.c_str(), &rec.p), "loading record");
  if (svg.empty()) svg = fs::path(record).replace_extension(".svg").string();
  write_text(svg, svg_of(rec));
  std::printf("wrote %s\n", svg.c_str());
  return 0;
}

int cmd_compare(const std::string& baseline, const std::string& candidate, const std::string& out_dir, bool svg) {
  Record b, c;
  check(rs_record_load(baseline.c_str(), &b.p), "loading baseline");
  check(rs_record_load(candidate.c_str(), &c.p), "loading candidate");
  Owned j, t;
  check(rs_compare(b.p, c.p, &j.p, &t.p), "comparing");
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_text(dir / "compare.json", j.str());
  write_text(dir / "compare.txt", t.str());
  if (svg) {
    write_text(dir / "baseline.svg", svg_of(b));
    write_text(dir / "candidate.svg", svg_of(c));
  }
  std::fputs(t.str().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"railway operation simulator, rescheduling trainer and evaluation harness"};
  app.require_subcommand(1);

  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "run one scenario and write record, metrics and optional SVG");
  add_run_flags(simulate, sim_flags);

  RunFlags eval_flags;
  int episodes = 20;
  auto* evaluate = app.add_subcommand("evaluate", "run a scenario over consecutive seeds and summarize metrics");
  add_run_flags(evaluate, eval_flags);
  evaluate->add_option("--episodes", episodes, "number of seeds, starting at --seed");

  std::string env_config, train_config, train_out = ".";
  std::uint64_t train_seed = 0;
  int dump = 0;
  auto* train = app.add_subcommand("train", "train a rescheduling policy with PPO");
  train->add_option("--env-config", env_config, "episode/domain config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--train-config", train_config, "PPO config (JSON)")->check(CLI::ExistingFile);
  train->add_option("--seed", train_seed, "override the training seed (0 keeps the config's)");
  train->add_option("--out-dir", train_out, "output directory");
  train->add_option("--dump-trajectories", dump, "episodes of the final policy to dump as JSONL");

  std::string render_record, render_svg;
  auto* render = app.add_subcommand("render", "render a saved record as a time-space SVG");
  render->add_option("--record", render_record, "record JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--svg", render_svg, "output path (default: next to the record)");

  std::string cmp_base, cmp_cand, cmp_out = ".";
  bool cmp_svg = false;
  auto* cmp = app.add_subcommand("compare", "compare a baseline and a candidate record of the same scenario");
  cmp->add_option("--baseline", cmp_base, "baseline record")->required()->check(CLI::ExistingFile);
  cmp->add_option("--candidate", cmp_cand, "candidate record")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out-dir", cmp_out, "output directory");
  cmp->add_flag("--svg", cmp_svg, "also write paired SVGs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim_flags);
    if (*evaluate) return cmd_evaluate(eval_flags, episodes);
    if (*train) return cmd_train(env_config, train_config, train_seed, train_out, dump);
    if (*render) return cmd_render(render_record, render_svg);
    if (*cmp) return cmd_compare(cmp_base, cmp_cand, cmp_out, cmp_svg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "railsim: %s\n", e.what());
    return 1;
  }
  return 1;
}
