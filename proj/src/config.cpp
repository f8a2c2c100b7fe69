#include "avgsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "avgsde/io.hpp"

namespace avgsde::cfg {

namespace {

struct Entry {
  std::string value;
  long line = 0;
  bool consumed = false;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const std::string& origin, long line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

SectionMap parse_sections(std::string_view text, const std::string& origin) {
  SectionMap sections;
  std::string section;
  long line_no = 0;
  std::istringstream stream{std::string(text)};
  std::string raw;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(origin, line_no, "empty section name");
      sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(origin, line_no, "expected 'key = value', got '" + line + "'");
    if (section.empty()) fail(origin, line_no, "key outside of any [section]");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    auto [it, inserted] = sections[section].emplace(key, Entry{value, line_no, false});
    if (!inserted)
      fail(origin, line_no, "duplicate key '" + key + "' in section [" + section + "]");
  }
  return sections;
}

class Reader {
 public:
  Reader(SectionMap sections, std::string origin)
      : sections_(std::move(sections)), origin_(std::move(origin)) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    k->second.consumed = true;
    last_line_ = k->second.line;
    return k->second.value;
  }

  std::string require(const std::string& section, const std::string& key,
                      const char* display = nullptr) {
    auto v = get(section, key);
    if (!v)
      throw ConfigError(origin_ + ": missing required key '" + (display ? display : key) +
                        "' in section [" + section + "]");
    return *v;
  }

  double to_double(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v))
      fail(origin_, last_line_, "key '" + key + "': cannot parse number '" + text + "'");
    return v;
  }

  long to_long(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
      fail(origin_, last_line_, "key '" + key + "': cannot parse integer '" + text + "'");
    return v;
  }

  std::uint64_t to_u64(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
      fail(origin_, last_line_, "key '" + key + "': cannot parse seed '" + text + "'");
    return static_cast<std::uint64_t>(v);
  }

  long line() const { return last_line_; }
  const std::string& origin() const { return origin_; }

  void reject_unknown() const {
    for (const auto& [section, entries] : sections_) {
      if (section != "coefficient" && section != "fast" && section != "sim" &&
          section != "outputs")
        throw ConfigError(origin_ + ": unknown section [" + section + "]");
      for (const auto& [key, entry] : entries)
        if (!entry.consumed)
          throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                            key + "' in section [" + section + "]");
    }
  }

 private:
  SectionMap sections_;
  std::string origin_;
  long last_line_ = 0;
};

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(trim(text.substr(start)));
      break;
    }
    parts.push_back(trim(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return parts;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text, const std::string& origin) {
  Reader reader(parse_sections(text, origin), origin);
  ExperimentConfig config;

  config.sigma_text = reader.require("coefficient", "sigma");
  try {
    config.sigma = expr::CoefficientFn::parse(config.sigma_text);
  } catch (const ParseError& e) {
    throw ConfigError(origin + ": [coefficient] sigma: " + e.what());
  }
  const auto periodicity = expr::check_periodicity(config.sigma);
  if (!periodicity.passed)
    throw ConfigError(origin + ": [coefficient] sigma is not 1-periodic in x (deviation " +
                      io::format_double(periodicity.max_deviation) + " at x=" +
                      io::format_double(periodicity.worst_x) + ")");
  config.sigma_constant_in_m = !config.sigma.uses_m();

  if (auto kind = reader.get("fast", "kind")) {
    const std::string k = lower(*kind);
    if (k == "ou") config.fast_kind = fast::Kind::OU;
    else if (k == "langevin") config.fast_kind = fast::Kind::GeneralLangevin;
    else
      throw ConfigError(origin + ": [fast] kind must be 'ou' or 'langevin', got '" + *kind +
                        "'");
  }
  if (auto vp = reader.get("fast", "vprime")) {
    config.vprime_text = *vp;
    try {
      config.vprime = expr::CoefficientFn::parse(*vp);
    } catch (const ParseError& e) {
      throw ConfigError(origin + ": [fast] vprime: " + e.what());
    }
    if (config.vprime->uses_x())
      throw ConfigError(origin + ": [fast] vprime must depend on m only");
  }
  if (config.fast_kind == fast::Kind::GeneralLangevin && !config.vprime)
    throw ConfigError(origin + ": [fast] kind=langevin requires key 'vprime'");
  if (auto m0 = reader.get("fast", "m0")) config.m0 = reader.to_double("m0", *m0);

  const auto eps_single = reader.get("sim", "epsilon");
  const auto eps_list = reader.get("sim", "epsilon_list");
  if (eps_single && eps_list)
    throw ConfigError(origin + ": [sim] give either 'epsilon' or 'epsilon_list', not both");
  if (!eps_single && !eps_list)
    throw ConfigError(origin + ": missing required key 'epsilon' in section [sim]");
  if (eps_single) {
    config.epsilons = {reader.to_double("epsilon", *eps_single)};
  } else {
    for (const auto& part : split_csv(*eps_list))
      config.epsilons.push_back(reader.to_double("epsilon_list", part));
    if (config.epsilons.empty())
      throw ConfigError(origin + ": [sim] epsilon_list is empty");
    for (std::size_t i = 1; i < config.epsilons.size(); ++i)
      if (!(config.epsilons[i] < config.epsilons[i - 1]))
        throw ConfigError(origin + ": [sim] epsilon_list must be strictly decreasing");
  }
  for (double eps : config.epsilons)
    if (!(eps > 0.0 && eps < 1.0))
      throw ConfigError(origin + ": [sim] epsilon must lie in (0,1), got " +
                        io::format_double(eps));

  config.T = reader.to_double("T", reader.require("sim", "t", "T"));
  if (!(config.T > 0.0)) throw ConfigError(origin + ": [sim] T must be positive");
  if (auto x0 = reader.get("sim", "x0")) config.x0 = reader.to_double("x0", *x0);
  if (auto h = reader.get("sim", "h_max")) {
    config.h_max = reader.to_double("h_max", *h);
    if (!(config.h_max > 0.0)) throw ConfigError(origin + ": [sim] h_max must be positive");
  }
  if (auto c = reader.get("sim", "c")) {
    config.c = reader.to_double("c", *c);
    if (!(config.c > 0.0 && config.c <= 1.0))
      throw ConfigError(origin + ": [sim] c must lie in (0,1]");
  }
  config.n_samples = reader.to_long("n_samples", reader.require("sim", "n_samples"));
  if (config.n_samples < 1) throw ConfigError(origin + ": [sim] n_samples must be >= 1");
  config.base_seed = reader.to_u64("base_seed", reader.require("sim", "base_seed"));

  if (auto dir = reader.get("outputs", "directory")) {
    if (dir->empty()) throw ConfigError(origin + ": [outputs] directory must be non-empty");
    config.out_dir = *dir;
  } else if (const char* env = std::getenv("AVGSDE_OUT_DIR"); env && *env) {
    config.out_dir = env;
  }
  if (auto formats = reader.get("outputs", "formats")) {
    config.formats.clear();
    for (const auto& f : split_csv(*formats)) {
      const std::string fl = lower(f);
      if (fl != "csv" && fl != "json")
        throw ConfigError(origin + ": [outputs] unknown format '" + f + "'");
      config.formats.push_back(fl);
    }
    if (config.formats.empty())
      throw ConfigError(origin + ": [outputs] formats must name at least one format");
  }

  reader.reject_unknown();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

std::string ExperimentConfig::canonical() const {
  std::string out = "sigma=" + sigma_text;
  out += ";fast=" + std::string(fast_kind == fast::Kind::OU ? "ou" : "langevin");
  if (vprime_text) out += ";vprime=" + *vprime_text;
  out += ";m0=" + io::format_double(m0);
  out += ";eps=";
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(epsilons[i]);
  }
  out += ";T=" + io::format_double(T);
  out += ";x0=" + io::format_double(x0);
  out += ";h_max=" + io::format_double(h_max);
  out += ";c=" + io::format_double(c);
  out += ";n=" + std::to_string(n_samples);
  out += ";seed=" + std::to_string(base_seed);
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return io::fnv1a64(canonical()); }

sde::SimConfig ExperimentConfig::sim_config(double epsilon, int threads) const {
  sde::SimConfig sim;
  sim.epsilon = epsilon;
  sim.T = T;
  sim.x0 = x0;
  sim.m0 = m0;
  sim.h_max = h_max;
  sim.c = c;
  sim.n_samples = n_samples;
  sim.base_seed = base_seed;
  sim.threads = threads;
  return sim;
}

fast::FastProcessSpec ExperimentConfig::fast_spec(double epsilon) const {
  fast::FastProcessSpec spec;
  spec.kind = fast_kind;
  spec.vprime = vprime;
  spec.m0 = m0;
  spec.epsilon = epsilon;
  return spec;
}

}  // namespace avgsde::cfg
