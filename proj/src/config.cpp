// SPDX-License-Identifier: Apache-2.0
#include "ainet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ainet/errors.hpp"
#include "ainet/metrics.hpp"

namespace ainet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

double real(std::string_view key, std::string_view value) { return parse_number<double>(key, value); }
std::size_t count(std::string_view key, std::string_view value) {
  return parse_number<std::size_t>(key, value);
}

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  auto& t = cfg.train;
  auto& s = cfg.synth;
  if (key == "epochs") t.epochs = count(key, value);
  else if (key == "lr") t.optim.lr = real(key, value);
  else if (key == "weight_decay") t.optim.weight_decay = real(key, value);
  else if (key == "beta1") t.optim.beta1 = real(key, value);
  else if (key == "beta2") t.optim.beta2 = real(key, value);
  else if (key == "eps") t.optim.eps = real(key, value);
  else if (key == "regions") t.regions = count(key, value);
  else if (key == "k_percent") t.k_percent = real(key, value);
  else if (key == "mask_ratio") t.mask_ratio = real(key, value);
  else if (key == "alpha") t.alpha = real(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "variant") t.variant = parse_variant(value);
  else if (key == "selector") t.selector = parse_selector(value);
  else if (key == "neighbor") t.neighbor = parse_neighbor_mode(value);
  else if (key == "heads") t.heads = count(key, value);
  else if (key == "hidden") t.hidden = count(key, value);
  else if (key == "classes") t.classes = s.n_classes = parse_number<int>(key, value);
  else if (key == "folds") cfg.folds = count(key, value);
  else if (key == "bags") s.n_bags = count(key, value);
  else if (key == "instances") s.n_instances = count(key, value);
  else if (key == "dim") s.dim = count(key, value);
  else if (key == "tumor_rate") s.tumor_rate = real(key, value);
  else if (key == "morphologies") s.n_morphologies = count(key, value);
  else if (key == "noise") s.noise_sigma = real(key, value);
  else if (key == "data_seed") s.seed = parse_number<std::uint64_t>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(base.train);
  if (base.folds < 2) throw ConfigError("folds must be >= 2");
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string format_config(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& s = cfg.synth;
  std::ostringstream out;
  out << "epochs = " << t.epochs << '\n'
      << "lr = " << format_real(t.optim.lr) << '\n'
      << "weight_decay = " << format_real(t.optim.weight_decay) << '\n'
      << "beta1 = " << format_real(t.optim.beta1) << '\n'
      << "beta2 = " << format_real(t.optim.beta2) << '\n'
      << "eps = " << format_real(t.optim.eps) << '\n'
      << "regions = " << t.regions << '\n'
      << "k_percent = " << format_real(t.k_percent) << '\n'
      << "mask_ratio = " << format_real(t.mask_ratio) << '\n'
      << "alpha = " << format_real(t.alpha) << '\n'
      << "seed = " << t.seed << '\n'
      << "variant = " << variant_name(t.variant) << '\n'
      << "selector = " << selector_name(t.selector) << '\n'
      << "neighbor = " << neighbor_mode_name(t.neighbor) << '\n'
      << "heads = " << t.heads << '\n'
      << "hidden = " << t.hidden << '\n'
      << "classes = " << t.classes << '\n'
      << "folds = " << cfg.folds << '\n'
      << "bags = " << s.n_bags << '\n'
      << "instances = " << s.n_instances << '\n'
      << "dim = " << s.dim << '\n'
      << "tumor_rate = " << format_real(s.tumor_rate) << '\n'
      << "morphologies = " << s.n_morphologies << '\n'
      << "noise = " << format_real(s.noise_sigma) << '\n'
      << "data_seed = " << s.seed << '\n';
  return out.str();
}

}  // namespace ainet
