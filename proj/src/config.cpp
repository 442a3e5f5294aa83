#include "ges/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ges/errors.hpp"

namespace ges {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Removes a trailing comment that is not inside quotes or brackets.
std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quote) {
      if (c == quote) in_quote = false;
    } else if (c == '"' || c == '\'') {
      in_quote = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

ConfigMap ConfigMap::from_string(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    map.set(section.empty() ? key : section + "." + key, value);
  }
  return map;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

void ConfigMap::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool ConfigMap::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : strip_quotes(it->second);
}

std::string ConfigMap::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key " + key);
  return strip_quotes(it->second);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double value = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + it->second);
  }
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long value = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key +
                      " is not an integer: " + it->second);
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw ConfigError("config key " + key + " must be true or false");
}

namespace {

std::vector<std::string> list_tokens(const std::string& key,
                                     const std::string& raw) {
  const std::string body = trim(raw);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw ConfigError("config key " + key + " must be a [list]");
  }
  std::vector<std::string> tokens;
  std::istringstream in(body.substr(1, body.size() - 2));
  std::string token;
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (!token.empty()) tokens.push_back(token);
  }
  return tokens;
}

}  // namespace

std::vector<long> ConfigMap::get_long_list(
    const std::string& key, const std::vector<long>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  for (const std::string& token : list_tokens(key, it->second)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stol(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " has a bad element: " + token);
    }
  }
  return out;
}

std::vector<double> ConfigMap::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& token : list_tokens(key, it->second)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " has a bad element: " + token);
    }
  }
  return out;
}

std::string default_output_root() {
  if (const char* env = std::getenv("GUIDED_ES_OUT")) {
    if (*env != '\0') return env;
  }
  return "runs";
}

ExperimentConfig ExperimentConfig::from_map(const std::string& kind,
                                            const ConfigMap& map) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (map.has("experiment.kind")) {
    const std::string declared = map.get_string("experiment.kind", "");
    if (declared != kind) {
      throw ConfigError("config declares experiment.kind = " + declared +
                        " but " + kind + " was requested");
    }
  }
  cfg.seed =
      static_cast<std::uint64_t>(map.get_long("experiment.seed", 1));
  for (long s : map.get_long_list("experiment.seeds", {})) {
    cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  cfg.threads = static_cast<int>(map.get_long("experiment.threads", 1));
  cfg.out_dir = map.get_string("report.out", default_output_root());
  cfg.emit_svg = map.get_bool("report.loss_svg", false);

  cfg.estimator = map.get_string("estimator.kind", cfg.estimator);
  cfg.sigma = map.get_double("estimator.sigma", cfg.sigma);
  cfg.p_random = static_cast<int>(map.get_long("estimator.p", cfg.p_random));
  cfg.k_history = static_cast<int>(map.get_long("estimator.k", cfg.k_history));
  cfg.history_source =
      map.get_string("estimator.history", cfg.history_source);
  cfg.fitness_shaping =
      map.get_bool("estimator.fitness_shaping", cfg.fitness_shaping);
  cfg.noise_permute_prob =
      map.get_double("estimator.noise_permute_prob", cfg.noise_permute_prob);

  cfg.optimizer = map.get_string("optimizer.kind", cfg.optimizer);
  cfg.learning_rate =
      map.get_double("optimizer.learning_rate", cfg.learning_rate);
  cfg.normalize_update =
      map.get_bool("optimizer.normalize", cfg.normalize_update);
  cfg.lr_grid = map.get_double_list("optimizer.lr_grid", {});

  cfg.hidden.clear();
  for (long h : map.get_long_list("objective.hidden", {64, 64})) {
    cfg.hidden.push_back(static_cast<int>(h));
  }
  cfg.data_source = map.get_string("dataset.source", cfg.data_source);
  cfg.data_samples = map.get_long("dataset.samples", cfg.data_samples);
  cfg.data_dim = static_cast<int>(map.get_long("dataset.dim", cfg.data_dim));
  cfg.data_classes =
      static_cast<int>(map.get_long("dataset.classes", cfg.data_classes));
  cfg.data_spread = map.get_double("dataset.spread", cfg.data_spread);
  cfg.data_noise = map.get_double("dataset.noise", cfg.data_noise);
  cfg.batch = map.get_long("dataset.batch", cfg.batch);
  cfg.idx_images = map.get_string("dataset.images", "");
  cfg.idx_labels = map.get_string("dataset.labels", "");

  cfg.updates = map.get_long("run.updates", cfg.updates);
  cfg.threshold_fraction =
      map.get_double("run.threshold_fraction", cfg.threshold_fraction);
  cfg.proper_updates = map.get_long("run.proper_updates", cfg.proper_updates);

  cfg.theory_n = static_cast<int>(map.get_long("theory.n", cfg.theory_n));
  cfg.theory_p = static_cast<int>(map.get_long("theory.p", cfg.theory_p));
  cfg.theory_delta = map.get_double("theory.delta", cfg.theory_delta);
  cfg.theory_alpha = map.get_double("theory.alpha", cfg.theory_alpha);
  cfg.trials = map.get_long("theory.trials", cfg.trials);
  cfg.steps = map.get_long("theory.steps", cfg.steps);

  // Validation.
  if (cfg.kind != "train" && cfg.kind != "gradient-alignment" &&
      cfg.kind != "noise" && cfg.kind.rfind("theory.", 0) != 0) {
    throw ConfigError("unknown experiment kind " + cfg.kind);
  }
  if (!(cfg.sigma > 0.0)) throw ConfigError("estimator.sigma must be > 0");
  if (!(cfg.learning_rate > 0.0)) {
    throw ConfigError("optimizer.learning_rate must be > 0");
  }
  if (cfg.noise_permute_prob < 0.0 || cfg.noise_permute_prob > 1.0) {
    throw ConfigError("estimator.noise_permute_prob must be in [0, 1]");
  }
  if (cfg.estimator != "es" && cfg.estimator != "guided") {
    throw ConfigError("estimator.kind must be es or guided");
  }
  if (cfg.optimizer != "sgd" && cfg.optimizer != "adam") {
    throw ConfigError("optimizer.kind must be sgd or adam");
  }
  if (cfg.history_source != "estimate" && cfg.history_source != "update") {
    throw ConfigError("estimator.history must be estimate or update");
  }
  if (cfg.p_random < 0 || cfg.k_history < 0 ||
      cfg.p_random + cfg.k_history < 1) {
    throw ConfigError("estimator needs k >= 0, p >= 0, k + p >= 1");
  }
  if (cfg.data_source == "idx") {
    if (cfg.idx_images.empty() || cfg.idx_labels.empty()) {
      throw ConfigError("idx dataset needs dataset.images and dataset.labels");
    }
    for (const std::string& path : {cfg.idx_images, cfg.idx_labels}) {
      std::ifstream probe(path, std::ios::binary);
      if (!probe) throw ConfigError("dataset file does not exist: " + path);
    }
  } else if (cfg.data_source != "blobs") {
    throw ConfigError("dataset.source must be blobs or idx");
  }
  if (cfg.updates < 1) throw ConfigError("run.updates must be >= 1");
  if (cfg.batch < 1) throw ConfigError("dataset.batch must be >= 1");
  if (cfg.proper_updates < 1) {
    throw ConfigError("run.proper_updates must be >= 1");
  }
  for (double lr : cfg.lr_grid) {
    if (!(lr > 0.0)) throw ConfigError("optimizer.lr_grid entries must be > 0");
  }
  if (cfg.threshold_fraction <= 0.0 || cfg.threshold_fraction >= 1.0) {
    throw ConfigError("run.threshold_fraction must be in (0, 1)");
  }
  if (cfg.threads < 1) throw ConfigError("experiment.threads must be >= 1");
  return cfg;
}

}  // namespace ges
