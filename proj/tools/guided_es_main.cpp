#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ges/config.hpp"
#include "ges/errors.hpp"
#include "ges/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "guided-es: black-box gradient estimation experiments and "
      "Monte-Carlo theory checks"};
  std::string experiment;
  std::string config_path;
  std::string seed;
  std::string out;
  std::string threads;
  std::string mnist_images;
  std::string mnist_labels;
  std::vector<std::string> overrides;

  app.add_option("experiment", experiment,
                 "train | gradient-alignment | noise | theory.drift | "
                 "theory.hitting | theory.theorem2 | theory.prop1 | "
                 "theory.prop2")
      ->required();
  app.add_option("--config", config_path, "experiment config file")
      ->required();
  app.add_option("--seed", seed, "base seed (overrides the config)");
  app.add_option("--out", out, "output root directory");
  app.add_option("--threads", threads, "worker threads for evaluations");
  app.add_option("--mnist-images", mnist_images, "IDX image file");
  app.add_option("--mnist-labels", mnist_labels, "IDX label file");
  app.add_option("--override", overrides,
                 "key=value config override, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    ges::ConfigMap map = ges::ConfigMap::from_file(config_path);
    for (const std::string& assignment : overrides) {
      map.apply_override(assignment);
    }
    if (!seed.empty()) map.set("experiment.seed", seed);
    if (!out.empty()) map.set("report.out", out);
    if (!threads.empty()) map.set("experiment.threads", threads);
    if (!mnist_images.empty()) map.set("dataset.images", mnist_images);
    if (!mnist_labels.empty()) map.set("dataset.labels", mnist_labels);
    const ges::ExperimentConfig cfg =
        ges::ExperimentConfig::from_map(experiment, map);
    return ges::run_experiment(cfg);
  } catch (const ges::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ges::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return 3;
  }
}
