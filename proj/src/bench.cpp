#include "gsnav/bench.hpp"

#include "gsnav/episode.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

namespace gsnav {

Pose default_start_pose(const Scene& scene) {
  if (scene.rooms.empty()) throw ValidationError("scene has no rooms");
  const OccupancyMap map = ground_truth_map(scene);
  const TraversalGrid grid = map.traversable();
  const Vec2 c = 0.5 * (scene.rooms[0].min + scene.rooms[0].max);
  double best = std::numeric_limits<double>::infinity();
  Vec2 xy = c;
  for (int i = 0; i < grid.width * grid.height; ++i) {
    if (!grid.passable[i]) continue;
    const double d = (map.center(map.cell(i)) - c).norm();
    if (d < best) {
      best = d;
      xy = map.center(map.cell(i));
    }
  }
  if (!std::isfinite(best)) throw ValidationError("scene has no traversable cell");
  Pose p;
  p.x = xy.x();
  p.y = xy.y();
  return p;
}

namespace {

std::uint64_t image_seed_for(std::uint64_t seed, int id) {
  return mix_seed(seed, static_cast<std::uint64_t>(id)) % 1000000007ull;
}

std::map<std::string, int> category_counts(const Scene& scene) {
  std::map<std::string, int> n;
  for (const auto& o : scene.objects) ++n[o.category];
  return n;
}

}  // namespace

Episode generate_episode(const Scene& scene, std::uint64_t seed, int n_subtasks,
                         std::optional<Pose> start, const CameraIntrinsics& camera) {
  if (n_subtasks < 1) throw ValidationError("episode needs at least one subtask");
  if (static_cast<int>(scene.objects.size()) < n_subtasks) {
    throw ValidationError("scene has " + std::to_string(scene.objects.size()) +
                          " instances, fewer than the " + std::to_string(n_subtasks) +
                          " subtasks requested");
  }
  std::mt19937_64 rng(mix_seed(seed, 0xE915));
  std::vector<int> ids;
  for (const auto& o : scene.objects) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  const auto cat_n = category_counts(scene);

  std::map<int, Goal> image_goals;
  for (int id : ids) {
    try {
      image_goals[id] = make_goal(scene, id, GoalModality::Image, image_seed_for(seed, id), camera);
    } catch (const Error&) {
      // No viewpoint shows this instance well enough for an image goal.
    }
  }

  std::vector<GoalModality> modalities;
  const GoalModality order[] = {GoalModality::Category, GoalModality::Image, GoalModality::Text};
  for (int k = 0; k < 3; ++k) {
    const int count = n_subtasks / 3 + (k < n_subtasks % 3 ? 1 : 0);
    modalities.insert(modalities.end(), count, order[k]);
  }
  std::shuffle(modalities.begin(), modalities.end(), rng);

  Episode ep;
  ep.start_pose = start ? *start : default_start_pose(scene);
  std::map<int, int> used;
  std::map<std::string, int> used_cat;
  int prev_room = scene.room_index(ep.start_pose.xy());
  for (GoalModality m : modalities) {
    std::vector<int> eligible;
    for (int id : ids) {
      const auto& o = scene.object(id);
      if (m == GoalModality::Category && cat_n.at(o.category) != 1) continue;
      if (m == GoalModality::Image && !image_goals.count(id)) continue;
      eligible.push_back(id);
    }
    if (eligible.empty()) {
      throw ValidationError(std::string("no instance can serve a ") +
                            std::string(modality_name(m)) + " goal");
    }
    auto score = [&](int id) {
      const auto& o = scene.object(id);
      const int room = scene.room_index(o.centroid.head<2>());
      return std::tuple(used[id], used_cat[o.category], room == prev_room ? 1 : 0);
    };
    const auto best = score(*std::min_element(eligible.begin(), eligible.end(),
                                              [&](int a, int b) { return score(a) < score(b); }));
    std::vector<int> pool;
    for (int id : eligible) {
      if (score(id) == best) pool.push_back(id);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const int id = pool[pick(rng)];
    const auto& o = scene.object(id);
    ++used[id];
    ++used_cat[o.category];
    prev_room = scene.room_index(o.centroid.head<2>());
    ep.subtasks.push_back(m == GoalModality::Image ? image_goals.at(id)
                                                   : make_goal(scene, id, m, 0, camera));
  }
  return ep;
}

std::vector<Goal> all_instance_goals(const Scene& scene, std::uint64_t seed,
                                     const CameraIntrinsics& camera) {
  const auto cat_n = category_counts(scene);
  std::vector<const ObjectInstance*> objs;
  for (const auto& o : scene.objects) objs.push_back(&o);
  std::sort(objs.begin(), objs.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::vector<Goal> goals;
  for (const auto* o : objs) {
    if (cat_n.at(o->category) == 1) goals.push_back(make_goal(scene, o->id, GoalModality::Category));
    try {
      goals.push_back(make_goal(scene, o->id, GoalModality::Image, image_seed_for(seed, o->id), camera));
    } catch (const Error&) {
    }
    goals.push_back(make_goal(scene, o->id, GoalModality::Text));
  }
  return goals;
}

LocalizationReport eval_localization(const Codebook& codebook, const std::vector<Goal>& goals,
                                     const PerceptionProviders& providers, double radius,
                                     int top_k) {
  LocalizationReport rep;
  for (const Goal& g : goals) {
    const GoalQuery q = encode_goal(g, providers);
    bool hit = false;
    for (const Candidate& c : query_memory(codebook, q, top_k)) {
      const Vec3& p = codebook.entries[c.entry].centroid_3d;
      if ((p.head<2>() - g.gt_position.head<2>()).norm() <= radius) {
        hit = true;
        break;
      }
    }
    ++rep.overall.total;
    rep.overall.hits += hit;
    auto& m = rep.by_modality[g.modality];
    ++m.total;
    m.hits += hit;
  }
  return rep;
}

double compute_spl(const std::vector<SubtaskResult>& results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : results) {
    if (!(r.shortest_path > 0.0)) throw ValidationError("SPL needs a positive shortest path");
    if (r.success) sum += r.shortest_path / std::max(r.path_length, r.shortest_path);
  }
  return sum / static_cast<double>(results.size());
}

double compute_sr(const std::vector<SubtaskResult>& results) {
  if (results.empty()) return 0.0;
  const auto n = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.success; });
  return static_cast<double>(n) / static_cast<double>(results.size());
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  need(!scene_path.empty(), "scene path is required");
  need(n_subtasks >= 1, "n_subtasks must be >= 1");
  need(map_res > 0.0 && map_res <= 1.0, "map resolution must be in (0, 1] m");
  need(explore_budget >= 1, "explore budget must be >= 1");
  need(frame_stride >= 1, "frame stride must be >= 1");
  need(p1 >= 0 && p2 >= 0, "p1 and p2 must be >= 0");
  need(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  need(mu_d >= 0.0, "mu_d must be >= 0");
  need(feature_iters >= 0, "feature iterations must be >= 0");
  need(k1 >= 1 && k2 >= 1, "k1 and k2 must be >= 1");
  need(top_k >= 1, "top_k must be >= 1");
  need(embedding_dim >= 2 && embedding_dim <= 512, "embedding dimension must be in [2, 512]");
  need(localization_radius > 0.0, "localization radius must be positive");
  need(step_limit >= 1, "step limit must be >= 1");
  for (double r : {false_positive_rate, decoy_rate, verify_false_negative, verify_false_positive}) {
    need(r >= 0.0 && r <= 1.0, "noise rates must be in [0, 1]");
  }
  parse_perception_mode(perception);
}

PerceptionNoise RunConfig::noise() const {
  PerceptionNoise n = parse_perception_mode(perception);
  n.false_positive_rate = false_positive_rate;
  n.decoy_rate = decoy_rate;
  n.verify_false_negative = verify_false_negative;
  n.verify_false_positive = verify_false_positive;
  return n;
}

ExploreParams explore_params(const RunConfig& cfg) {
  ExploreParams p;
  p.budget = cfg.explore_budget;
  p.map.resolution = cfg.map_res;
  return p;
}

ReconstructParams reconstruct_params(const RunConfig& cfg) {
  ReconstructParams p;
  p.p1 = cfg.p1;
  p.p2 = cfg.ablate_keyframe ? 0 : cfg.p2;
  p.frame_stride = cfg.frame_stride;
  p.seed = mix_seed(cfg.seed, 1);
  p.optim.loss.lambda = cfg.lambda;
  p.optim.loss.mu_d = cfg.mu_d;
  return p;
}

FeatureOptimParams feature_params(const RunConfig& cfg) {
  FeatureOptimParams p;
  p.iters = cfg.feature_iters;
  p.seed = mix_seed(cfg.seed, 2);
  return p;
}

CodebookParams codebook_params(const RunConfig& cfg, const Scene& scene) {
  CodebookParams p;
  p.k1 = cfg.k1;
  p.k2 = cfg.k2;
  p.w_pos = cfg.w_pos;
  p.scene_diagonal = scene.diagonal();
  p.seed = mix_seed(cfg.seed, 3);
  return p;
}

NavParams nav_params(const RunConfig& cfg) {
  NavParams p;
  p.top_k = cfg.top_k;
  p.step_limit = cfg.step_limit;
  p.stop_at_first = cfg.ablate_verification;
  p.verify.seg_threshold = cfg.tau_seg;
  p.verify.feat_threshold = cfg.tau_feat;
  p.verify.match_threshold = cfg.tau_match;
  p.seed = mix_seed(cfg.seed, 4);
  return p;
}

PerceptionProviders make_providers(const Scene& scene, const RunConfig& cfg) {
  FeatureSpaceParams fs;
  fs.dim = cfg.embedding_dim;
  fs.seed = mix_seed(cfg.seed, 5);
  return PerceptionProviders(scene, fs, cfg.noise(), mix_seed(cfg.seed, 6));
}

namespace {

template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void say(const StageLog& log, const std::string& msg) {
  if (log) log(msg);
}

}  // namespace

GeometryStage run_geometry(const Scene& scene, const Pose& start, const RunConfig& cfg,
                           const StageLog& log) {
  GeometryStage out;
  out.explore = staged("explore", [&] {
    World world(scene, start);
    return explore(world, explore_params(cfg));
  });
  say(log, "explore: " + std::to_string(out.explore.steps) + " steps, " +
               std::to_string(out.explore.frames.size()) + " frames");
  out.recon = staged("build-memory", [&] {
    return reconstruct(out.explore.frames, reconstruct_params(cfg),
                       [&](std::size_t i, std::size_t n, const GaussianMemory& m) {
                         if (i % 25 == 0) {
                           say(log, "build-memory: frame " + std::to_string(i) + "/" +
                                        std::to_string(n) + ", " + std::to_string(m.size()) +
                                        " Gaussians");
                         }
                       });
  });
  out.mean_pool_psnr = staged("build-memory", [&] { return mean_pool_psnr(out.recon.memory, out.recon.pool, 1); });
  say(log, "build-memory: mean pool PSNR " + std::to_string(out.mean_pool_psnr) + " dB");
  return out;
}

LanguageStage run_language(const Scene& scene, const GaussianMemory& geometry,
                           const std::vector<Observation>& frames,
                           const PerceptionProviders& providers, const RunConfig& cfg,
                           const StageLog& log) {
  return staged("inject-language", [&] {
    LanguageStage out;
    out.memory = geometry;
    out.features = optimize_features(out.memory, frames, providers, feature_params(cfg));
    CodebookBuild b = build_codebook(out.memory, codebook_params(cfg, scene));
    out.codebook = std::move(b.codebook);
    for (const auto& w : out.codebook.warnings) say(log, "inject-language: warning: " + w);
    associate_2d3d(out.codebook, out.memory, frames, providers);
    say(log, "inject-language: " + std::to_string(out.codebook.entries.size()) + " entries, " +
                 std::to_string(out.codebook.labeled_count()) + " associated");
    return out;
  });
}

NavigationStage run_navigation(const Scene& scene, const OccupancyMap& map,
                               const Codebook& codebook, const Episode& episode,
                               const PerceptionProviders& providers, const RunConfig& cfg,
                               const StageLog& log) {
  return staged("navigate", [&] {
    NavigationStage out;
    World world(scene, episode.start_pose);
    OccupancyMap live = map;
    const OccupancyMap gt = ground_truth_map(scene, live.params());
    const TraversalGrid gt_grid = gt.traversable();
    NavParams np = nav_params(cfg);
    for (std::size_t i = 0; i < episode.subtasks.size(); ++i) {
      const Goal& goal = episode.subtasks[i];
      const Vec2 start = world.pose().xy();
      np.seed = mix_seed(nav_params(cfg).seed, i);
      SubtaskResult r = navigate_subtask(world, live, codebook, goal, providers, np);
      // A subtask can start inside the success region; the shortest path is
      // floored at one map cell so SPL stays defined.
      r.shortest_path = std::max(shortest_path_to_goal(scene, gt_grid, gt, start, goal), gt.resolution());
      say(log, "navigate: subtask " + std::to_string(i) + " (" +
                   std::string(modality_name(goal.modality)) + " " +
                   std::to_string(goal.gt_instance_id) + ") " + (r.success ? "success" : "failure") +
                   " in " + std::to_string(r.steps) + " steps");
      out.results.push_back(std::move(r));
    }
    return out;
  });
}

void fill_navigation(MetricsReport& report, const Episode& episode,
                     const std::vector<SubtaskResult>& results) {
  report.goals = episode.subtasks;
  report.results = results;
  report.sr = compute_sr(results);
  report.spl = compute_spl(results);
}

std::string MetricsReport::to_text() const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scene"] = scene;
  j["seed"] = seed;
  j["perception"] = perception;
  j["subtasks"] = results.size();
  j["sr"] = sr;
  j["spl"] = spl;
  j["mean_pool_psnr"] = mean_pool_psnr;
  j["gaussians"] = gaussians;
  j["codebook_entries"] = codebook_entries;
  j["labeled_entries"] = labeled_entries;
  ordered_json by_mod = ordered_json::object();
  for (GoalModality m : {GoalModality::Category, GoalModality::Image, GoalModality::Text}) {
    std::vector<SubtaskResult> sub;
    for (std::size_t i = 0; i < results.size() && i < goals.size(); ++i) {
      if (goals[i].modality == m) sub.push_back(results[i]);
    }
    ordered_json e;
    e["count"] = sub.size();
    e["sr"] = compute_sr(sub);
    e["spl"] = compute_spl(sub);
    by_mod[std::string(modality_name(m))] = e;
  }
  j["navigation_by_modality"] = by_mod;
  if (localization) {
    ordered_json l;
    l["accuracy"] = localization->accuracy();
    l["goals"] = localization->overall.total;
    ordered_json lm = ordered_json::object();
    for (const auto& [m, rc] : localization->by_modality) {
      lm[std::string(modality_name(m))] = {{"count", rc.total}, {"accuracy", rc.rate()}};
    }
    l["by_modality"] = lm;
    j["localization"] = l;
  } else {
    j["localization"] = nullptr;
  }
  ordered_json rs = ordered_json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    ordered_json e;
    e["index"] = i;
    if (i < goals.size()) {
      e["modality"] = std::string(modality_name(goals[i].modality));
      e["instance"] = goals[i].gt_instance_id;
    }
    e["success"] = r.success;
    e["steps"] = r.steps;
    e["path_length"] = r.path_length;
    e["shortest_path"] = r.shortest_path;
    e["stop_pose"] = {r.stop_pose.x, r.stop_pose.y, r.stop_pose.yaw, r.stop_pose.pitch};
    e["candidates_tried"] = r.candidates_tried;
    e["invalid_candidates"] = r.invalid_candidates;
    e["used_fallback"] = r.used_fallback;
    rs.push_back(e);
  }
  j["results"] = rs;
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

FrameLogFile frame_log_of(const std::string& scene_path, const std::vector<Observation>& frames) {
  FrameLogFile f;
  f.scene_path = scene_path;
  if (!frames.empty()) f.camera = camera_of(frames.front());
  for (const auto& o : frames) f.poses.push_back(o.pose);
  return f;
}

}  // namespace

MetricsReport run_pipeline(const RunConfig& cfg, const StageLog& log) {
  staged("config", [&] {
    cfg.validate();
    return 0;
  });
  const Scene scene = staged("config", [&] { return load_scene(cfg.scene_path); });
  const Episode episode = staged("config", [&] {
    if (!cfg.episode_path.empty()) return load_episode(cfg.episode_path, scene);
    Episode ep = generate_episode(scene, cfg.episode_seed, cfg.n_subtasks);
    ep.scene_path = cfg.scene_path;
    return ep;
  });
  const std::filesystem::path out_dir = cfg.output_dir;
  if (!out_dir.empty()) {
    staged("output", [&] {
      std::filesystem::create_directories(out_dir);
      save_episode(out_dir / "episode.json", episode);
      return 0;
    });
  }

  const PerceptionProviders providers = make_providers(scene, cfg);
  GeometryStage geo = run_geometry(scene, episode.start_pose, cfg, log);
  const std::vector<Observation>& pool = geo.recon.pool.frames;
  LanguageStage lang = run_language(scene, geo.recon.memory, pool, providers, cfg, log);

  MetricsReport report;
  report.scene = scene.name;
  report.seed = cfg.seed;
  report.perception = cfg.perception;
  report.mean_pool_psnr = geo.mean_pool_psnr;
  report.gaussians = lang.memory.size();
  report.codebook_entries = lang.codebook.entries.size();
  report.labeled_entries = lang.codebook.labeled_count();
  report.localization = staged("localize", [&] {
    return eval_localization(lang.codebook, episode.subtasks, providers, cfg.localization_radius,
                             cfg.top_k);
  });
  say(log, "localize: accuracy " + std::to_string(report.localization->accuracy()));
  const NavigationStage nav = run_navigation(scene, geo.explore.map, lang.codebook, episode, providers, cfg, log);
  fill_navigation(report, episode, nav.results);
  say(log, "navigate: SR " + std::to_string(report.sr) + " SPL " + std::to_string(report.spl));

  if (!out_dir.empty()) {
    staged("output", [&] {
      geo.explore.map.save_pgm(out_dir / "map.pgm");
      save_frame_log(out_dir / "frames.json", frame_log_of(cfg.scene_path, geo.explore.frames));
      save_frame_log(out_dir / "pool.json", frame_log_of(cfg.scene_path, pool));
      lang.memory.scene_ref = cfg.scene_path;
      save_memory(out_dir / "memory.gsnm", lang.memory);
      save_codebook(out_dir / "codebook.bin", lang.codebook);
      for (std::size_t i = 0; i < nav.results.size(); ++i) {
        std::ofstream t(out_dir / ("trajectory_" + std::to_string(i) + ".jsonl"));
        write_trajectory(t, nav.results[i].trajectory);
      }
      write_text(out_dir / "metrics.json", report.to_text());
      return 0;
    });
  }
  return report;
}

}  // namespace gsnav
