// Command-line front end: one subcommand per pipeline stage. Stages exchange
// artifacts through an output directory.
#include "gsnav/bench.hpp"
#include "gsnav/episode.hpp"
#include "gsnav/pnm.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace gsnav;

namespace {

constexpr const char* kOutputRootEnv = "GSNAV_OUTPUT_ROOT";

struct CliState {
  RunConfig cfg;
  std::string out;
  std::string start;  // "x,y,yaw_deg"
  bool all_instances = false;
  bool quiet = false;
};

void add_run_options(CLI::App& app, CliState& s) {
  RunConfig& c = s.cfg;
  app.add_option("--scene", c.scene_path, "Scene JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", s.out, "Output directory (default: $GSNAV_OUTPUT_ROOT/<scene name>)");
  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--episode", c.episode_path, "Episode JSON file")->check(CLI::ExistingFile);
  app.add_option("--episode-seed", c.episode_seed, "Seed for a generated episode");
  app.add_option("--subtasks", c.n_subtasks, "Subtasks in a generated episode");
  app.add_option("--start", s.start, "Start pose x,y,yaw_deg for a generated episode");
  app.add_option("--perception", c.perception, "oracle | oracle-noisy:<sigma>,<dropout>");
  app.add_option("--false-positive-rate", c.false_positive_rate);
  app.add_option("--decoy-rate", c.decoy_rate);
  app.add_option("--verify-fn", c.verify_false_negative, "Verifier false-negative rate");
  app.add_option("--verify-fp", c.verify_false_positive, "Verifier false-positive rate");
  app.add_option("--embedding-dim", c.embedding_dim);
  app.add_option("--map-res", c.map_res, "Occupancy map resolution (m)");
  app.add_option("--explore-budget", c.explore_budget, "Exploration step budget");
  app.add_option("--frame-stride", c.frame_stride, "Use every n-th explored frame");
  app.add_option("--p1", c.p1, "Iterations on the newest frame");
  app.add_option("--p2", c.p2, "Keyframe iterations per new frame");
  app.add_option("--lambda", c.lambda, "SSIM weight of the color loss");
  app.add_option("--mu-d", c.mu_d, "Depth loss weight");
  app.add_option("--feature-iters", c.feature_iters);
  app.add_option("--k1", c.k1, "Coarse clusters");
  app.add_option("--k2", c.k2, "Fine clusters per coarse cluster");
  app.add_option("--w-pos", c.w_pos, "Position weight of the coarse clustering");
  app.add_option("--top-k", c.top_k);
  app.add_option("--tau-seg", c.tau_seg);
  app.add_option("--tau-feat", c.tau_feat);
  app.add_option("--tau-match", c.tau_match);
  app.add_option("--step-limit", c.step_limit);
  app.add_flag("--ablate-keyframe", c.ablate_keyframe, "Disable keyframe replay (p2 = 0)");
  app.add_flag("--ablate-verification", c.ablate_verification, "Stop at the first waypoint");
  app.add_flag("--quiet", s.quiet, "Only print the final summary");
}

fs::path output_dir(const CliState& s, const Scene& scene) {
  if (!s.out.empty()) return s.out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root && *root ? root : "runs") / scene.name;
}

Pose parse_start(const std::string& text) {
  double x = 0, y = 0, yaw = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> x >> c1 >> y) || c1 != ',') throw ValidationError("--start must be x,y[,yaw_deg]");
  if (in >> c2 && !(c2 == ',' && in >> yaw)) throw ValidationError("--start must be x,y[,yaw_deg]");
  Pose p;
  p.x = x;
  p.y = y;
  p.yaw = deg_to_rad(yaw);
  return p;
}

struct Context {
  Scene scene;
  fs::path dir;
  RunConfig cfg;
  StageLog log;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

Context make_context(CliState& s) {
  return stage("config", [&] {
    s.cfg.validate();
    Context ctx;
    ctx.scene = load_scene(s.cfg.scene_path);
    ctx.dir = output_dir(s, ctx.scene);
    fs::create_directories(ctx.dir);
    ctx.cfg = s.cfg;
    ctx.cfg.output_dir = ctx.dir.string();
    if (!s.quiet) ctx.log = [](const std::string& m) { std::cerr << m << "\n"; };
    return ctx;
  });
}

fs::path need(const Context& ctx, const std::string& name, const std::string& producer) {
  const fs::path p = ctx.dir / name;
  if (!fs::exists(p)) {
    throw PreconditionError(p.string() + " not found; run `gsnav " + producer + "` first");
  }
  return p;
}

Episode episode_for(const Context& ctx, const CliState& s) {
  if (!ctx.cfg.episode_path.empty()) return load_episode(ctx.cfg.episode_path, ctx.scene);
  if (fs::exists(ctx.dir / "episode.json")) return load_episode(ctx.dir / "episode.json", ctx.scene);
  std::optional<Pose> start;
  if (!s.start.empty()) start = parse_start(s.start);
  Episode ep = generate_episode(ctx.scene, ctx.cfg.episode_seed, ctx.cfg.n_subtasks, start);
  ep.scene_path = ctx.cfg.scene_path;
  return ep;
}

OccupancyMap load_map(const Context& ctx) {
  MapParams mp;
  mp.resolution = ctx.cfg.map_res;
  OccupancyMap map = OccupancyMap::for_scene(ctx.scene, mp);
  map.load_image(read_pgm(need(ctx, "map.pgm", "explore")));
  return map;
}

std::vector<Observation> load_frames(const Context& ctx, const std::string& name,
                                     const std::string& producer) {
  return render_frames(ctx.scene, load_frame_log(need(ctx, name, producer)));
}

FrameLogFile frame_log(const Context& ctx, const std::vector<Observation>& frames) {
  FrameLogFile f;
  f.scene_path = ctx.cfg.scene_path;
  if (!frames.empty()) f.camera = camera_of(frames.front());
  for (const auto& o : frames) f.poses.push_back(o.pose);
  return f;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

int cmd_explore(CliState& s) {
  Context ctx = make_context(s);
  const Episode ep = stage("config", [&] { return episode_for(ctx, s); });
  stage("explore", [&] {
    save_episode(ctx.dir / "episode.json", ep);
    World world(ctx.scene, ep.start_pose);
    const ExploreResult r = explore(world, explore_params(ctx.cfg));
    r.map.save_pgm(ctx.dir / "map.pgm");
    save_frame_log(ctx.dir / "frames.json", frame_log(ctx, r.frames));
    std::cout << "explore: " << r.steps << " steps, " << r.frames.size() << " frames, "
              << (r.frontiers_exhausted ? "frontiers exhausted" : "budget spent") << "\n";
    return 0;
  });
  return 0;
}

int cmd_build_memory(CliState& s) {
  Context ctx = make_context(s);
  stage("build-memory", [&] {
    const auto frames = load_frames(ctx, "frames.json", "explore");
    const ReconstructResult r = reconstruct(frames, reconstruct_params(ctx.cfg),
                                            [&](std::size_t i, std::size_t n, const GaussianMemory& m) {
                                              if (ctx.log && i % 25 == 0) {
                                                ctx.log("build-memory: frame " + std::to_string(i) + "/" +
                                                        std::to_string(n) + ", " +
                                                        std::to_string(m.size()) + " Gaussians");
                                              }
                                            });
    GaussianMemory memory = r.memory;
    memory.scene_ref = ctx.cfg.scene_path;
    save_memory(ctx.dir / "memory.gsnm", memory);
    save_frame_log(ctx.dir / "pool.json", frame_log(ctx, r.pool.frames));
    const double psnr = mean_pool_psnr(r.memory, r.pool, 1);
    nlohmann::ordered_json j;
    j["gaussians"] = memory.size();
    j["pool_frames"] = r.pool.size();
    j["mean_pool_psnr"] = psnr;
    write_json(ctx.dir / "geometry.json", j);
    std::cout << "build-memory: " << memory.size() << " Gaussians, mean pool PSNR " << psnr
              << " dB\n";
    return 0;
  });
  return 0;
}

int cmd_inject_language(CliState& s) {
  Context ctx = make_context(s);
  stage("inject-language", [&] {
    const GaussianMemory geometry = load_memory(need(ctx, "memory.gsnm", "build-memory"));
    const auto pool = load_frames(ctx, "pool.json", "build-memory");
    const PerceptionProviders prov = make_providers(ctx.scene, ctx.cfg);
    LanguageStage lang = run_language(ctx.scene, geometry, pool, prov, ctx.cfg, ctx.log);
    lang.memory.scene_ref = ctx.cfg.scene_path;
    save_memory(ctx.dir / "memory_language.gsnm", lang.memory);
    save_codebook(ctx.dir / "codebook.bin", lang.codebook);
    std::cout << "inject-language: " << lang.codebook.entries.size() << " entries, "
              << lang.codebook.labeled_count() << " associated\n";
    return 0;
  });
  return 0;
}

int cmd_localize(CliState& s) {
  Context ctx = make_context(s);
  const Episode ep = stage("config", [&] { return episode_for(ctx, s); });
  stage("localize", [&] {
    const Codebook cb = load_codebook(need(ctx, "codebook.bin", "inject-language"));
    const PerceptionProviders prov = make_providers(ctx.scene, ctx.cfg);
    const auto goals = s.all_instances ? all_instance_goals(ctx.scene, ctx.cfg.episode_seed) : ep.subtasks;
    const LocalizationReport rep =
        eval_localization(cb, goals, prov, ctx.cfg.localization_radius, ctx.cfg.top_k);
    nlohmann::ordered_json j;
    j["goals"] = rep.overall.total;
    j["accuracy"] = rep.accuracy();
    nlohmann::ordered_json by = nlohmann::ordered_json::object();
    for (const auto& [m, rc] : rep.by_modality) {
      by[std::string(modality_name(m))] = {{"count", rc.total}, {"accuracy", rc.rate()}};
    }
    j["by_modality"] = by;
    write_json(ctx.dir / "localization.json", j);
    std::cout << "localize: top-" << ctx.cfg.top_k << " accuracy " << rep.accuracy() << " over "
              << rep.overall.total << " goals\n";
    return 0;
  });
  return 0;
}

int cmd_navigate(CliState& s) {
  Context ctx = make_context(s);
  const Episode ep = stage("config", [&] { return episode_for(ctx, s); });
  const OccupancyMap map = stage("navigate", [&] { return load_map(ctx); });
  const Codebook cb = stage("navigate", [&] { return load_codebook(need(ctx, "codebook.bin", "inject-language")); });
  const PerceptionProviders prov = make_providers(ctx.scene, ctx.cfg);
  const NavigationStage nav = run_navigation(ctx.scene, map, cb, ep, prov, ctx.cfg, ctx.log);
  stage("navigate", [&] {
    MetricsReport rep;
    rep.scene = ctx.scene.name;
    rep.seed = ctx.cfg.seed;
    rep.perception = ctx.cfg.perception;
    rep.codebook_entries = cb.entries.size();
    rep.labeled_entries = cb.labeled_count();
    if (fs::exists(ctx.dir / "geometry.json")) {
      std::ifstream in(ctx.dir / "geometry.json");
      const auto g = nlohmann::json::parse(in);
      rep.gaussians = g.at("gaussians").get<std::size_t>();
      rep.mean_pool_psnr = g.at("mean_pool_psnr").get<double>();
    }
    fill_navigation(rep, ep, nav.results);
    for (std::size_t i = 0; i < nav.results.size(); ++i) {
      std::ofstream t(ctx.dir / ("trajectory_" + std::to_string(i) + ".jsonl"));
      write_trajectory(t, nav.results[i].trajectory);
    }
    std::ofstream(ctx.dir / "metrics.json") << rep.to_text();
    std::cout << "navigate: SR " << rep.sr << " SPL " << rep.spl << "\n";
    return 0;
  });
  return 0;
}

int cmd_eval(CliState& s) {
  Context ctx = make_context(s);
  if (!s.start.empty() && ctx.cfg.episode_path.empty()) {
    const Episode ep = stage("config", [&] { return episode_for(ctx, s); });
    stage("config", [&] {
      save_episode(ctx.dir / "episode.json", ep);
      return 0;
    });
    ctx.cfg.episode_path = (ctx.dir / "episode.json").string();
  }
  const MetricsReport rep = run_pipeline(ctx.cfg, ctx.log);
  std::cout << rep.to_text();
  return 0;
}

int cmd_ablate(CliState& s) {
  Context ctx = make_context(s);
  struct Variant {
    const char* name;
    bool keyframe_off;
    bool verification_off;
  };
  const Variant variants[] = {{"full", false, false},
                              {"no-keyframe", true, false},
                              {"no-verification", false, true}};
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const Variant& v : variants) {
    RunConfig cfg = ctx.cfg;
    cfg.ablate_keyframe = v.keyframe_off;
    cfg.ablate_verification = v.verification_off;
    cfg.output_dir = (ctx.dir / v.name).string();
    if (ctx.log) ctx.log(std::string("ablate: variant ") + v.name);
    const MetricsReport rep = run_pipeline(cfg, ctx.log);
    nlohmann::ordered_json row;
    row["variant"] = v.name;
    row["sr"] = rep.sr;
    row["spl"] = rep.spl;
    row["mean_pool_psnr"] = rep.mean_pool_psnr;
    row["localization"] = rep.localization ? rep.localization->accuracy() : 0.0;
    table.push_back(row);
  }
  stage("output", [&] {
    write_json(ctx.dir / "ablation.json", table);
    return 0;
  });
  std::cout << table.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-indexed Gaussian memory for multi-goal navigation"};
  app.require_subcommand(1);
  CliState state;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(CliState&);
  };
  const Sub subs[] = {
      {"explore", "Frontier exploration; writes map.pgm, frames.json, episode.json", cmd_explore},
      {"build-memory", "Online reconstruction; writes memory.gsnm, pool.json", cmd_build_memory},
      {"inject-language", "Feature optimization, codebook, association; writes codebook.bin",
       cmd_inject_language},
      {"localize", "Top-k goal localization against codebook.bin", cmd_localize},
      {"navigate", "Runs the episode with map.pgm and codebook.bin", cmd_navigate},
      {"eval", "Full pipeline; writes every artifact and metrics.json", cmd_eval},
      {"ablate", "Full pipeline with and without keyframe replay and verification", cmd_ablate},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> handlers;
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_run_options(*cmd, state);
    if (std::string(sub.name) == "localize") {
      cmd->add_flag("--all-instances", state.all_instances, "Every instance in every modality");
    }
    handlers.emplace_back(cmd, &sub);
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [cmd, sub] : handlers) {
    if (!cmd->parsed()) continue;
    try {
      return sub->run(state);
    } catch (const StageError& e) {
      std::cerr << "gsnav " << sub->name << ": error [" << e.stage() << "] "
                << std::string(e.what()).substr(e.stage().size() + 2) << "\n";
      return e.stage() == "config" ? 2 : 3;
    } catch (const std::exception& e) {
      std::cerr << "gsnav " << sub->name << ": error [" << sub->name << "] " << e.what() << "\n";
      return 3;
    }
  }
  return 1;
}
