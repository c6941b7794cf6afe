#include "quadmimic/cli.hpp"

#include "quadmimic/checkpoint.hpp"
#include "quadmimic/config.hpp"
#include "quadmimic/errors.hpp"
#include "quadmimic/gaitmetrics.hpp"
#include "quadmimic/mocap.hpp"
#include "quadmimic/retarget.hpp"
#include "quadmimic/trainer.hpp"
#include "quadmimic/trajectory.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace quadmimic {

namespace fs = std::filesystem;

namespace {

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

uint64_t parse_seed_text(const std::string& text, const std::string& origin) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(origin + ": not a valid seed: " + text);
  }
}

// Priority: explicit flag, config file, QUADMIMIC_SEED, zero.
uint64_t resolve_seed(bool flag_given, uint64_t flag_value, const ConfigFile* file) {
  if (flag_given) return flag_value;
  if (file) {
    const auto sec = file->sections.find("trainer");
    if (sec != file->sections.end()) {
      const auto key = sec->second.find("seed");
      if (key != sec->second.end()) return parse_seed_text(key->second, "config seed");
    }
  }
  if (const char* env = std::getenv("QUADMIMIC_SEED")) {
    return parse_seed_text(env, "QUADMIMIC_SEED");
  }
  return 0;
}

void write_run_json(const fs::path& out_dir, const std::string& command, uint64_t seed,
                    const RunConfig* cfg, const std::vector<std::string>& args) {
  nlohmann::ordered_json j;
  j["tool"] = "quadmimic";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["seed"] = seed;
  if (cfg) {
    std::ostringstream hash;
    hash << "0x" << std::hex << cfg->hash();
    j["config_hash"] = hash.str();
  }
  j["args"] = args;
  std::ofstream out(out_dir / "run.json");
  out << j.dump(2) << "\n";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<MotionClip> load_clip_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".clip") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<MotionClip> clips;
  for (const fs::path& p : paths) clips.push_back(load_clip(p.string()));
  if (clips.empty()) throw ValidationError("no .clip files under " + dir);
  return clips;
}

struct CommonTrainArgs {
  std::string config_path;
  std::string out = "out";
  int updates = -1;
  int num_envs = -1;
  int horizon = -1;
  uint64_t seed = 0;
  int workers = 1;
};

void add_train_flags(CLI::App* cmd, CommonTrainArgs& a) {
  cmd->add_option("--config", a.config_path, "run config file (ini)");
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
  cmd->add_option("--updates", a.updates, "override [trainer] updates");
  cmd->add_option("--num-envs", a.num_envs, "override [trainer] num_envs");
  cmd->add_option("--horizon", a.horizon, "override [trainer] horizon");
  cmd->add_option("--seed", a.seed, "override the run seed");
  cmd->add_option("--workers", a.workers, "worker cap (rollouts are sequential)")
      ->check(CLI::PositiveNumber);
}

RunConfig build_run_config(const CommonTrainArgs& a, const CLI::App* cmd,
                           std::unique_ptr<ConfigFile>& file_out) {
  RunConfig cfg;
  if (!a.config_path.empty()) {
    file_out = std::make_unique<ConfigFile>(ConfigFile::load(a.config_path));
    cfg.apply(*file_out);
  }
  if (a.updates >= 0) cfg.trainer.updates = a.updates;
  if (a.num_envs >= 0) cfg.trainer.num_envs = a.num_envs;
  if (a.horizon >= 0) cfg.trainer.horizon = a.horizon;
  cfg.trainer.seed =
      resolve_seed(cmd->count("--seed") > 0, a.seed, file_out.get());
  return cfg;
}

void finish_training(const TrainResult& result, const fs::path& out_dir,
                     const std::string& ckpt_name, const std::string& command,
                     const RunConfig& cfg, const std::vector<std::string>& args) {
  const fs::path ckpt = out_dir / ckpt_name;
  save_checkpoint(result.checkpoint, ckpt.string());
  std::ofstream curve(out_dir / "curve.csv");
  write_curve_csv(result.curve, curve);
  write_run_json(out_dir, command, cfg.trainer.seed, &cfg, args);
  std::cout << "checkpoint: " << ckpt.string() << "\n";
  std::cout << "curve: " << (out_dir / "curve.csv").string() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"quadruped motion imitation and terrain adaptation toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "full help for every subcommand");

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a procedural trot clip");
  struct {
    std::string gait = "walk";
    std::string terrain = "plane";
    double speed = 0.5;
    double seconds = 2.0;
    double cycle = 0.64;
    double duty = 0.594;
    double fps = 30.0;
    double base_height = 0.38;
    double swing_height = 0.06;
    std::string name;
    std::string out = "out";
    uint64_t seed = 0;
  } sy;
  synth->add_option("--gait", sy.gait, "walk|run|fastrun")->capture_default_str();
  synth->add_option("--terrain", sy.terrain, "plane|stairup|stairdown|slopeup|slopedown")
      ->capture_default_str();
  synth->add_option("--speed", sy.speed, "forward speed m/s")->capture_default_str();
  synth->add_option("--seconds", sy.seconds, "clip duration s")->capture_default_str();
  synth->add_option("--cycle", sy.cycle, "gait cycle time s")->capture_default_str();
  synth->add_option("--duty", sy.duty, "stance fraction of the cycle")->capture_default_str();
  synth->add_option("--fps", sy.fps, "frames per second")->capture_default_str();
  synth->add_option("--base-height", sy.base_height, "base height m")->capture_default_str();
  synth->add_option("--swing-height", sy.swing_height, "swing clearance m")
      ->capture_default_str();
  synth->add_option("--name", sy.name, "clip name (default <gait>_<terrain>)");
  synth->add_option("--out", sy.out, "output directory")->capture_default_str();
  synth->add_option("--seed", sy.seed, "recorded in run.json; generation is deterministic");
  synth->callback([&]() {
    GaitSpec spec;
    spec.gait = gait_tag_from_string(sy.gait);
    spec.terrain = clip_terrain_tag_from_string(sy.terrain);
    spec.speed = sy.speed;
    spec.duration = sy.seconds;
    spec.cycle_time = sy.cycle;
    spec.duty_factor = sy.duty;
    spec.fps = sy.fps;
    spec.base_height = sy.base_height;
    spec.swing_height = sy.swing_height;
    MotionClip clip = synthesize_gait(spec, RobotMorphology::defaults());
    clip.name = sy.name.empty() ? sy.gait + "_" + sy.terrain : sy.name;
    const fs::path out_dir = ensure_dir(sy.out);
    const fs::path clip_path = out_dir / (clip.name + ".clip");
    save_clip(clip, clip_path.string());
    const DatasetManifest manifest = dataset_manifest(out_dir.string());
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest_to_json(manifest);
    write_run_json(out_dir, "synth", sy.seed, nullptr, args);
    std::cout << "clip: " << clip_path.string() << "\n";
  });

  // retarget ---------------------------------------------------------------
  auto* retarget = app.add_subcommand("retarget", "keypoint trajectory to a joint clip");
  struct {
    std::string keypoints;
    std::string name;
    std::string terrain = "plane";
    std::string gait = "walk";
    double drop = RetargetAdjust{}.base_height_drop;
    double widen = RetargetAdjust{}.leg_widen;
    std::string out = "out";
  } rt;
  retarget->add_option("--keypoints", rt.keypoints, "keypoint file")
      ->required()
      ->check(CLI::ExistingFile);
  retarget->add_option("--name", rt.name, "clip name (default keypoint file stem)");
  retarget->add_option("--terrain", rt.terrain, "terrain tag for the clip")
      ->capture_default_str();
  retarget->add_option("--gait", rt.gait, "gait tag for the clip")->capture_default_str();
  retarget->add_option("--drop", rt.drop, "base height drop m")->capture_default_str();
  retarget->add_option("--widen", rt.widen, "lateral toe widening m")->capture_default_str();
  retarget->add_option("--out", rt.out, "output directory")->capture_default_str();
  retarget->callback([&]() {
    double fps = 0.0;
    const std::vector<KeypointFrame> frames = load_keypoints(rt.keypoints, &fps);
    RetargetAdjust adjust;
    adjust.base_height_drop = rt.drop;
    adjust.leg_widen = rt.widen;
    MotionClip clip = retarget_clip(frames, fps, RobotMorphology::defaults(), adjust,
                                    clip_terrain_tag_from_string(rt.terrain),
                                    gait_tag_from_string(rt.gait));
    clip.name = rt.name.empty() ? fs::path(rt.keypoints).stem().string() : rt.name;
    const fs::path out_dir = ensure_dir(rt.out);
    const fs::path clip_path = out_dir / (clip.name + ".clip");
    save_clip(clip, clip_path.string());
    write_run_json(out_dir, "retarget", 0, nullptr, args);
    std::cout << "clip: " << clip_path.string() << "\n";
  });

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "two-step policy training");
  train->require_subcommand(1);

  auto* imitate = train->add_subcommand("imitate", "step 1: reference motion imitation");
  CommonTrainArgs im;
  std::string im_data = "data";
  add_train_flags(imitate, im);
  imitate->add_option("--data", im_data, "clip directory")->capture_default_str();
  imitate->callback([&]() {
    std::unique_ptr<ConfigFile> file;
    const RunConfig cfg = build_run_config(im, imitate, file);
    const std::vector<MotionClip> clips = load_clip_dir(im_data);
    const fs::path out_dir = ensure_dir(im.out);
    const TrainResult result = train_imitation(clips, cfg.trainer, cfg.policy, cfg.sim,
                                               (out_dir / "dumps").string());
    finish_training(result, out_dir, "imitate.ckpt", "train imitate", cfg, args);
  });

  auto* adapt = train->add_subcommand("adapt", "step 2: terrain adaptation");
  CommonTrainArgs ad;
  std::string ad_from;
  add_train_flags(adapt, ad);
  adapt->add_option("--from", ad_from, "step-1 checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  adapt->callback([&]() {
    std::unique_ptr<ConfigFile> file;
    const RunConfig cfg = build_run_config(ad, adapt, file);
    const Checkpoint stage1 = load_checkpoint(ad_from);
    const fs::path out_dir = ensure_dir(ad.out);
    const TrainResult result =
        train_adaptation(stage1, cfg.trainer, cfg.sim, (out_dir / "dumps").string());
    finish_training(result, out_dir, "adapt.ckpt", "train adapt", cfg, args);
  });

  // eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "return table over terrains");
  struct {
    std::string ckpt;
    std::string terrains = "plane,slopeup,slopedown,stairup,stairdown,blocks,hills";
    int episodes = 10;
    uint64_t seed = 0;
    std::string method = "ours";
    std::string config_path;
    std::string dump;
    std::string out = "out";
    int workers = 1;
  } ev;
  eval->add_option("--ckpt", ev.ckpt, "adaptation checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--terrains", ev.terrains, "comma list of terrain kinds")
      ->capture_default_str();
  eval->add_option("--episodes", ev.episodes, "episodes per terrain")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", ev.seed, "evaluation seed");
  eval->add_option("--method", ev.method, "row label in the csv")->capture_default_str();
  eval->add_option("--config", ev.config_path, "run config file for [sim] overrides");
  eval->add_option("--dump", ev.dump, "write the first episode as a trajectory dump");
  eval->add_option("--out", ev.out, "output directory")->capture_default_str();
  eval->add_option("--workers", ev.workers, "worker cap (episodes run sequentially)")
      ->check(CLI::PositiveNumber);
  eval->callback([&]() {
    RunConfig cfg;
    std::unique_ptr<ConfigFile> file;
    if (!ev.config_path.empty()) {
      file = std::make_unique<ConfigFile>(ConfigFile::load(ev.config_path));
      cfg.apply(*file);
    }
    const uint64_t seed = resolve_seed(eval->count("--seed") > 0, ev.seed, file.get());
    std::vector<TerrainKind> kinds;
    for (const std::string& name : split_csv(ev.terrains)) {
      kinds.push_back(terrain_kind_from_string(name));
    }
    const Checkpoint ck = load_checkpoint(ev.ckpt);
    std::vector<TrajectoryRecord> dump_records;
    const EpisodeRunner runner = make_sim_runner(
        ck, cfg.sim, cfg.trainer, ev.dump.empty() ? nullptr : &dump_records);
    const ReturnTable table = evaluate_return(runner, kinds, ev.episodes, seed);
    const fs::path out_dir = ensure_dir(ev.out);
    std::ofstream csv(out_dir / "return.csv");
    write_return_csv(table, ev.method, csv);
    csv.close();
    if (!ev.dump.empty()) save_trajectory(dump_records, ev.dump);
    write_run_json(out_dir, "eval", seed, &cfg, args);
    std::cout << "return table: " << (out_dir / "return.csv").string() << "\n";
  });

  // gait -------------------------------------------------------------------
  auto* gait = app.add_subcommand("gait", "gait parameters from a dump or clip");
  struct {
    std::string dump;
    std::string clip;
    double contact_tol = 1e-3;
    int min_ticks = 2;
    std::string out;
  } ga;
  auto* dump_opt = gait->add_option("--dump", ga.dump, "trajectory dump (jsonl)")
                       ->check(CLI::ExistingFile);
  auto* clip_opt = gait->add_option("--clip", ga.clip, "motion clip file")
                       ->check(CLI::ExistingFile);
  dump_opt->excludes(clip_opt);
  gait->add_option("--contact-tol", ga.contact_tol, "clip contact height tolerance m")
      ->capture_default_str();
  gait->add_option("--min-ticks", ga.min_ticks, "debounce length in ticks")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gait->add_option("--out", ga.out, "output csv (default stdout)");
  gait->callback([&]() {
    if (ga.dump.empty() == ga.clip.empty()) {
      throw ValidationError("gait: give exactly one of --dump or --clip");
    }
    std::vector<std::array<bool, kNumLegs>> flags;
    std::vector<std::array<Vec3, kNumLegs>> toes;
    double dt = 0.0;
    if (!ga.dump.empty()) {
      const std::vector<TrajectoryRecord> traj = load_trajectory(ga.dump);
      flags = contact_flags_from_trajectory(traj);
      toes = toe_positions_from_trajectory(traj);
      dt = kPolicyDt;
    } else {
      const MotionClip clip = load_clip(ga.clip);
      flags = contact_flags_from_clip(clip, ga.contact_tol);
      toes = toe_positions_from_clip(clip);
      dt = 1.0 / clip.fps;
    }
    const ContactSequence contacts = detect_contacts(flags, dt, ga.min_ticks);
    const GaitMetrics metrics = gait_parameters(contacts, toes);
    if (ga.out.empty()) {
      write_gait_csv(metrics, std::cout);
    } else {
      std::ofstream out(ga.out);
      write_gait_csv(metrics, out);
      std::cout << "gait table: " << ga.out << "\n";
    }
  });

  // manifest ---------------------------------------------------------------
  auto* manifest = app.add_subcommand("manifest", "dataset duration breakdown");
  struct {
    std::string data = "data";
    std::string out;
  } mf;
  manifest->add_option("--data", mf.data, "clip directory")->capture_default_str();
  manifest->add_option("--out", mf.out, "output json (default stdout)");
  manifest->callback([&]() {
    if (!fs::is_directory(mf.data)) throw IoError("not a directory: " + mf.data);
    const DatasetManifest m = dataset_manifest(mf.data);
    const std::string json = manifest_to_json(m);
    if (mf.out.empty()) {
      std::cout << json;
    } else {
      std::ofstream out(mf.out);
      out << json;
      std::cout << "manifest: " << mf.out << "\n";
    }
  });

  app.footer("config file defaults:\n" + RunConfig::describe_defaults());

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    std::cerr << "diagnostic dump: " << e.dump_path << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace quadmimic
