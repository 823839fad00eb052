#include "funcdict/config.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

#include "funcdict/errors.hpp"
#include "funcdict/io.hpp"

namespace funcdict {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& raw, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (...) {
    throw InvalidConfigError("config: bad number for '" + key + "': " + raw);
  }
}

std::size_t parse_size(const std::string& raw, const std::string& key) {
  const double v = parse_number(raw, key);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw InvalidConfigError("config: '" + key + "' must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(const std::string& raw, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (...) {
    throw InvalidConfigError("config: bad integer for '" + key + "': " + raw);
  }
}

bool parse_bool(const std::string& raw, const std::string& key) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw InvalidConfigError("config: '" + key + "' must be true or false");
}

std::string parse_string(const std::string& raw, const std::string& key) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  throw InvalidConfigError("config: '" + key + "' must be a quoted string");
}

std::vector<double> parse_array(const std::string& raw, const std::string& key) {
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
    throw InvalidConfigError("config: '" + key + "' must be an array [a, b, ...]");
  std::vector<double> out;
  std::string inner = raw.substr(1, raw.size() - 2);
  std::istringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(parse_number(t, key));
  }
  return out;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = parse_u64(value, key);
  else if (key == "preset") cfg.preset = parse_string(value, key);
  else if (key == "count") cfg.count = parse_size(value, key);
  else if (key == "n_points") cfg.n_points = parse_size(value, key);
  else if (key == "jitter") cfg.jitter = parse_number(value, key);
  else if (key == "swap_fraction") cfg.swap_fraction = parse_number(value, key);
  else if (key == "dataset") cfg.dataset = parse_string(value, key);
  else if (key == "mode") cfg.mode = parse_string(value, key);
  else if (key == "k") cfg.k = parse_size(value, key);
  else if (key == "gamma") cfg.gamma = parse_number(value, key);
  else if (key == "eta") cfg.eta = parse_number(value, key);
  else if (key == "batch_size") cfg.batch_size = parse_size(value, key);
  else if (key == "epochs") cfg.epochs = parse_size(value, key);
  else if (key == "sigma") cfg.sigma = parse_number(value, key);
  else if (key == "noise_prob") cfg.noise_prob = parse_number(value, key);
  else if (key == "partial_fraction") cfg.partial_fraction = parse_number(value, key);
  else if (key == "siamese") cfg.siamese = parse_bool(value, key);
  else if (key == "train_fraction") cfg.train_fraction = parse_number(value, key);
  else if (key == "out_dir") cfg.out_dir = parse_string(value, key);
  else if (key == "resume") cfg.resume = parse_string(value, key);
  else if (key == "num_bases") cfg.num_bases = parse_size(value, key);
  else if (key == "knn") cfg.knn = parse_size(value, key);
  else if (key == "checkpoint") cfg.checkpoint = parse_string(value, key);
  else if (key == "metrics") cfg.metrics = parse_string(value, key);
  else if (key == "pck_thresholds") cfg.pck_thresholds = parse_array(value, key);
  else if (key == "recall_threshold") cfg.recall_threshold = parse_number(value, key);
  else if (key == "oracle_dictionary") cfg.oracle_dictionary = parse_bool(value, key);
  else throw InvalidConfigError("config: unknown key '" + key + "'");
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(std::numeric_limits<double>::max_digits10);
  ss << v;
  std::string s = ss.str();
  // Keep TOML floats recognizable as floats.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string fmt(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ", ";
    s += fmt(v[i]);
  }
  return s + "]";
}

}  // namespace

RunConfig parse_config(const std::string& toml_text) {
  RunConfig cfg;
  std::istringstream in(toml_text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError("config: line " + std::to_string(lineno) +
                               " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    const std::size_t comment = value.find(" #");
    if (comment != std::string::npos && value[0] != '"')
      value = trim(value.substr(0, comment));
    set_key(cfg, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

void apply_override(RunConfig& cfg, const std::string& key_equals_value) {
  const std::size_t eq = key_equals_value.find('=');
  if (eq == std::string::npos)
    throw InvalidConfigError("--set expects key=value, got '" + key_equals_value + "'");
  const std::string key = trim(key_equals_value.substr(0, eq));
  std::string value = trim(key_equals_value.substr(eq + 1));
  // Convenience: allow bare strings for the string-typed keys.
  const bool is_string_key = key == "preset" || key == "dataset" || key == "mode" ||
                             key == "out_dir" || key == "resume" ||
                             key == "checkpoint" || key == "metrics";
  if (is_string_key && (value.empty() || value.front() != '"'))
    value = '"' + value + '"';
  set_key(cfg, key, value);
}

std::string config_to_toml(const RunConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.seed << "\n";
  out << "preset = \"" << cfg.preset << "\"\n";
  out << "count = " << cfg.count << "\n";
  out << "n_points = " << cfg.n_points << "\n";
  out << "jitter = " << fmt(cfg.jitter) << "\n";
  out << "swap_fraction = " << fmt(cfg.swap_fraction) << "\n";
  out << "dataset = \"" << cfg.dataset << "\"\n";
  out << "mode = \"" << cfg.mode << "\"\n";
  out << "k = " << cfg.k << "\n";
  out << "gamma = " << fmt(cfg.gamma) << "\n";
  out << "eta = " << fmt(cfg.eta) << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "sigma = " << fmt(cfg.sigma) << "\n";
  out << "noise_prob = " << fmt(cfg.noise_prob) << "\n";
  out << "partial_fraction = " << fmt(cfg.partial_fraction) << "\n";
  out << "siamese = " << (cfg.siamese ? "true" : "false") << "\n";
  out << "train_fraction = " << fmt(cfg.train_fraction) << "\n";
  out << "out_dir = \"" << cfg.out_dir << "\"\n";
  out << "resume = \"" << cfg.resume << "\"\n";
  out << "num_bases = " << cfg.num_bases << "\n";
  out << "knn = " << cfg.knn << "\n";
  out << "checkpoint = \"" << cfg.checkpoint << "\"\n";
  out << "metrics = \"" << cfg.metrics << "\"\n";
  out << "pck_thresholds = " << fmt(cfg.pck_thresholds) << "\n";
  out << "recall_threshold = " << fmt(cfg.recall_threshold) << "\n";
  out << "oracle_dictionary = " << (cfg.oracle_dictionary ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace funcdict
