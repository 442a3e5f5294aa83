#include "doctest.h"

#include <string>
#include <vector>

#include "ges/config.hpp"
#include "ges/errors.hpp"

using ges::ConfigError;
using ges::ConfigMap;
using ges::ExperimentConfig;

namespace {

const char* kSampleConfig = R"(
# top-level comment
[experiment]
kind = train
seed = 7          # trailing comment
threads = 2

[estimator]
kind = guided
sigma = 0.05
p = 12
k = 2

[optimizer]
kind = sgd
learning_rate = 0.3
normalize = true
lr_grid = [0.1, 0.3, 1.0]

[objective]
hidden = [32, 16]

[dataset]
source = blobs
batch = 16

[run]
updates = 50
threshold_fraction = 0.4

[report]
out = /tmp/ges-test-out
label = "quoted # not a comment"
)";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("sectioned keys flatten to dotted paths") {
  const ConfigMap map = ConfigMap::from_string(kSampleConfig);
  CHECK(map.get_string("experiment.kind", "") == "train");
  CHECK(map.get_long("experiment.seed", 0) == 7);
  CHECK(map.get_double("estimator.sigma", 0.0) == doctest::Approx(0.05));
  CHECK(map.get_bool("optimizer.normalize", false));
  CHECK(map.has("run.updates"));
  CHECK_FALSE(map.has("run.missing"));
}

TEST_CASE("comments stop at quotes") {
  const ConfigMap map = ConfigMap::from_string(kSampleConfig);
  CHECK(map.get_string("report.label", "") == "quoted # not a comment");
  CHECK(map.get_long("experiment.seed", 0) == 7);  // comment stripped
}

TEST_CASE("lists parse into numeric vectors") {
  const ConfigMap map = ConfigMap::from_string(kSampleConfig);
  CHECK(map.get_long_list("objective.hidden", {}) ==
        std::vector<long>{32, 16});
  CHECK(map.get_double_list("optimizer.lr_grid", {}) ==
        std::vector<double>{0.1, 0.3, 1.0});
  CHECK(map.get_long_list("absent.key", {5}) == std::vector<long>{5});
}

TEST_CASE("malformed lines carry their line number") {
  CHECK_THROWS_WITH_AS(ConfigMap::from_string("[unclosed\n"),
                       doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigMap::from_string("\njust words\n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::from_string("= value\n"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::from_string("[]\n"), ConfigError);
}

TEST_CASE("type mismatches are rejected with the key name") {
  const ConfigMap map = ConfigMap::from_string("[a]\nx = fast\ny = 1.5z\n");
  CHECK_THROWS_WITH_AS(map.get_double("a.x", 0.0), doctest::Contains("a.x"),
                       ConfigError);
  CHECK_THROWS_AS(map.get_long("a.y", 0), ConfigError);
  CHECK_THROWS_AS(map.get_bool("a.x", false), ConfigError);
}

TEST_CASE("overrides win over file values") {
  ConfigMap map = ConfigMap::from_string(kSampleConfig);
  map.apply_override("estimator.sigma=0.5");
  map.apply_override("new.key = added");
  CHECK(map.get_double("estimator.sigma", 0.0) == doctest::Approx(0.5));
  CHECK(map.get_string("new.key", "") == "added");
  CHECK_THROWS_AS(map.apply_override("no-equals-sign"), ConfigError);
  CHECK_THROWS_AS(map.apply_override("=value"), ConfigError);
}

TEST_CASE("typed config picks up every section") {
  const ConfigMap map = ConfigMap::from_string(kSampleConfig);
  const ExperimentConfig cfg = ExperimentConfig::from_map("train", map);
  CHECK(cfg.kind == "train");
  CHECK(cfg.seed == 7);
  CHECK(cfg.threads == 2);
  CHECK(cfg.estimator == "guided");
  CHECK(cfg.sigma == doctest::Approx(0.05));
  CHECK(cfg.p_random == 12);
  CHECK(cfg.k_history == 2);
  CHECK(cfg.optimizer == "sgd");
  CHECK(cfg.normalize_update);
  CHECK(cfg.lr_grid.size() == 3);
  CHECK(cfg.hidden == std::vector<int>{32, 16});
  CHECK(cfg.batch == 16);
  CHECK(cfg.updates == 50);
  CHECK(cfg.threshold_fraction == doctest::Approx(0.4));
  CHECK(cfg.out_dir == "/tmp/ges-test-out");
}

TEST_CASE("a declared kind must match the requested one") {
  const ConfigMap map = ConfigMap::from_string(kSampleConfig);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_map("noise", map),
                       doctest::Contains("experiment.kind"), ConfigError);
}

TEST_CASE("numeric ranges are enforced") {
  auto base = [] { return ConfigMap::from_string("[experiment]\nkind = train\n"); };

  auto check_rejects = [&](const std::string& override_kv) {
    ConfigMap map = base();
    map.apply_override(override_kv);
    CHECK_THROWS_AS(ExperimentConfig::from_map("train", map), ConfigError);
  };

  check_rejects("estimator.sigma=0");
  check_rejects("estimator.sigma=-0.1");
  check_rejects("optimizer.learning_rate=0");
  check_rejects("estimator.noise_permute_prob=1.5");
  check_rejects("estimator.noise_permute_prob=-0.1");
  check_rejects("estimator.kind=cma");
  check_rejects("optimizer.kind=rmsprop");
  check_rejects("estimator.history=gradient");
  check_rejects("estimator.k=-1");
  check_rejects("run.updates=0");
  check_rejects("dataset.batch=0");
  check_rejects("run.threshold_fraction=1");
  check_rejects("experiment.threads=0");
  check_rejects("optimizer.lr_grid=[0.1, 0]");
  check_rejects("dataset.source=csv");

  // k = 0 with p = 0 leaves no directions at all.
  ConfigMap map = base();
  map.apply_override("estimator.k=0");
  map.apply_override("estimator.p=0");
  CHECK_THROWS_AS(ExperimentConfig::from_map("train", map), ConfigError);
}

TEST_CASE("unknown experiment kinds are rejected") {
  const ConfigMap empty = ConfigMap::from_string("");
  CHECK_THROWS_AS(ExperimentConfig::from_map("anneal", empty), ConfigError);
  for (const char* kind :
       {"train", "gradient-alignment", "noise", "theory.drift",
        "theory.hitting", "theory.theorem2", "theory.prop1", "theory.prop2"}) {
    CHECK_NOTHROW(ExperimentConfig::from_map(kind, empty));
  }
}

TEST_CASE("idx source demands existing files") {
  ConfigMap map = ConfigMap::from_string("[dataset]\nsource = idx\n");
  CHECK_THROWS_AS(ExperimentConfig::from_map("train", map), ConfigError);
  map.apply_override("dataset.images=/nonexistent/images.idx");
  map.apply_override("dataset.labels=/nonexistent/labels.idx");
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_map("train", map),
                       doctest::Contains("does not exist"), ConfigError);
}

TEST_CASE("defaults survive an empty config") {
  const ExperimentConfig cfg =
      ExperimentConfig::from_map("train", ConfigMap::from_string(""));
  CHECK(cfg.seed == 1);
  CHECK(cfg.estimator == "guided");
  CHECK(cfg.sigma == doctest::Approx(0.02));
  CHECK(cfg.p_random == 15);
  CHECK(cfg.k_history == 1);
  CHECK(cfg.optimizer == "adam");
  CHECK(cfg.hidden == std::vector<int>{64, 64});
  CHECK(cfg.updates == 300);
  CHECK(cfg.batch == 64);
}

TEST_CASE("missing config files fail loudly") {
  CHECK_THROWS_AS(ConfigMap::from_file("/nonexistent/run.toml"), ConfigError);
}

}  // TEST_SUITE
