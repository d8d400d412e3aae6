// camo: pipeline driver. Each subcommand reads a JSON run config plus flag
// overrides and writes its artifacts into a fresh run directory.
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "camo/cli/config.hpp"
#include "camo/cli/pipeline.hpp"

namespace fs = std::filesystem;
using namespace camo;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string run_dir;
  std::string mesh, texture, dataset, weights, adv_texture, output_root;
  std::int64_t seed = -1;
};

void error_line(const std::string& code, const std::string& field, const std::string& message) {
  Json j = {{"code", code}, {"field", field}, {"message", message}};
  std::cerr << "error " << j.dump() << "\n";
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& s : o.sets) cfg = apply_override(cfg, s);
  if (!o.mesh.empty()) cfg.paths.mesh = o.mesh;
  if (!o.texture.empty()) cfg.paths.texture = o.texture;
  if (!o.dataset.empty()) cfg.paths.dataset = o.dataset;
  if (!o.weights.empty()) cfg.paths.weights = o.weights;
  if (!o.adv_texture.empty()) cfg.paths.adv_texture = o.adv_texture;
  if (!o.output_root.empty()) cfg.paths.output_root = o.output_root;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  validate(cfg);
  return cfg;
}

/// Input paths each subcommand needs, checked before anything is written.
void check_inputs(const RunConfig& cfg, const std::string& sub) {
  if (cfg.paths.mesh.rfind("builtin:", 0) != 0) require_file(cfg.paths.mesh, "paths.mesh");
  if (!cfg.paths.texture.empty()) require_file(cfg.paths.texture, "paths.texture");
  if (sub == "train-victim" || sub == "optimize") require_dir(cfg.paths.dataset, "paths.dataset");
  if (sub == "optimize" || sub == "evaluate") require_file(cfg.paths.weights, "paths.weights");
  if (sub == "export") require_file(cfg.paths.adv_texture, "paths.adv_texture");
  if (sub == "evaluate" && !cfg.paths.adv_texture.empty()) require_file(cfg.paths.adv_texture, "paths.adv_texture");
}

fs::path make_run_dir(const RunConfig& cfg, const Options& o, const std::string& sub) {
  fs::path dir;
  if (!o.run_dir.empty()) {
    dir = o.run_dir;
  } else {
    fs::path root = cfg.paths.output_root;
    if (root.empty()) {
      const char* env = std::getenv("CAMO_OUTPUT_ROOT");
      root = env && *env ? env : "runs";
    }
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
    dir = root / (sub + "-" + stamp);
    for (int n = 1; fs::exists(dir); ++n) dir = root / (sub + "-" + stamp + "-" + std::to_string(n));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

void run(const std::string& sub, const RunConfig& cfg, const fs::path& dir) {
  write_text(dir / "config.resolved.json", to_json(cfg).dump(2) + "\n");
  write_text(dir / "seed.txt", std::to_string(cfg.seed) + "\n");
  if (sub == "prepare-uv") {
    const UvStageResult r = stage_prepare_uv(cfg, dir);
    std::cout << "distortion energy " << r.energy_before << " -> " << r.energy_after << "\n";
  } else if (sub == "render-dataset") {
    const DatasetCounts n = stage_render_dataset(cfg, dir);
    std::cout << "frames victim " << n.victim << " attack " << n.attack << " test " << n.test << "\n";
  } else if (sub == "train-victim") {
    const VictimStageResult r = stage_train_victim(cfg, dir, [](const EpochLog& e) {
      std::cout << "epoch " << e.epoch << " loss " << e.mean.total() << std::endl;
    });
    std::cout << "held-out p_at_05 " << r.held_out.p_at_05 << "\n";
  } else if (sub == "optimize") {
    const AttackResult r = stage_optimize(cfg, dir);
    const auto means = epoch_means(r.log);
    for (std::size_t e = 0; e < means.size(); ++e) std::cout << "epoch " << e << " mean loss " << means[e] << "\n";
  } else if (sub == "evaluate") {
    for (const auto& e : stage_evaluate(cfg, dir))
      std::cout << report_row(e.report) << "\n";
  } else if (sub == "export") {
    stage_export(cfg, dir);
  }
  std::cout << "run_dir " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camo: adversarial vehicle camouflage pipeline"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> subs{
      {"prepare-uv", "relax the uv layout and export distortion heatmaps"},
      {"render-dataset", "sample poses and scenes and pre-render the reference frames"},
      {"train-victim", "train the grid detector on the rendered dataset"},
      {"optimize", "optimize the adversarial texture"},
      {"evaluate", "report P@0.5, ASR and turntable accuracy"},
      {"export", "write the printable texture map"},
  };
  Options o;
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("-c,--config", o.config, "JSON run config");
    s->add_option("--set", o.sets, "override a config field: key=value (repeatable)");
    s->add_option("--run-dir", o.run_dir, "exact output directory instead of a timestamped one");
    s->add_option("--mesh", o.mesh, "mesh OBJ or builtin:{car,hemisphere,door}");
    s->add_option("--texture", o.texture, "initial texture PNG");
    s->add_option("--dataset", o.dataset, "render-dataset output directory");
    s->add_option("--weights", o.weights, "victim weight file");
    s->add_option("--adv-texture", o.adv_texture, "optimized texture PNG");
    s->add_option("--output-root", o.output_root, "parent of timestamped run directories");
    s->add_option("--seed", o.seed, "global seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    error_line("usage", "", e.what());
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = resolve(o);
    check_inputs(cfg, sub);
    run(sub, cfg, make_run_dir(cfg, o, sub));
  } catch (const ConfigError& e) {
    error_line("validation", e.field(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_line("runtime", "", e.what());
    return 1;
  }
  return 0;
}
