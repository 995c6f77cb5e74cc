#include "fedcs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fedcs/error.hpp"
#include "fedcs/metrics.hpp"
#include "json.hpp"

namespace fedcs::experiment {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback,
                const std::function<bool(double)>& ok = {}, const char* expect = nullptr) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(key_path(key), "must be finite");
    if (ok && !ok(x)) throw ConfigError(key_path(key), std::string("must be ") + expect);
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min_value) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
    const auto x = v->get<std::int64_t>();
    if (x < min_value) {
      throw ConfigError(key_path(key), "must be >= " + std::to_string(min_value));
    }
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
    return v->get<std::string>();
  }

  template <typename Enum>
  Enum choice(const std::string& key, Enum fallback, const std::map<std::string, Enum>& options) {
    const json* v = find(key);
    if (!v) return fallback;
    return parse_choice(*v, key_path(key), options);
  }

  template <typename Enum>
  static Enum parse_choice(const json& v, const std::string& path,
                           const std::map<std::string, Enum>& options) {
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : ", ") + name;
    if (!v.is_string()) throw ConfigError(path, "expected one of: " + allowed);
    const auto it = options.find(v.get<std::string>());
    if (it == options.end()) {
      throw ConfigError(path, "unknown value '" + v.get<std::string>() + "', expected one of: " +
                                  allowed);
    }
    return it->second;
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!used_.count(key)) throw ConfigError(key_path(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

const std::map<std::string, protocol::Mode> kModes{{"fedcs", protocol::Mode::FedCS},
                                                   {"fedlim", protocol::Mode::FedLim},
                                                   {"vanilla", protocol::Mode::VanillaFL}};
const std::map<std::string, protocol::LatePolicy> kLatePolicies{
    {"extend", protocol::LatePolicy::Extend}, {"discard", protocol::LatePolicy::Discard}};
const std::map<std::string, learning::Weighting> kWeightings{
    {"unweighted", learning::Weighting::Unweighted}, {"data_size", learning::Weighting::DataSize}};
const std::map<std::string, TrainerKind> kTrainerKinds{{"surrogate", TrainerKind::Surrogate},
                                                       {"native", TrainerKind::Native}};
const std::map<std::string, learning::PartitionMode> kPartitionModes{
    {"iid", learning::PartitionMode::Iid}, {"non_iid", learning::PartitionMode::NonIid}};

const auto positive = [](double x) { return x > 0.0; };
const auto non_negative = [](double x) { return x >= 0.0; };

template <typename Fn>
void section_check(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
}

void read_cell(ObjectReader r, channel::CellConfig& c) {
  c.radius_m = r.number("radius_m", c.radius_m, positive, "positive");
  c.carrier_freq_ghz = r.number("carrier_freq_ghz", c.carrier_freq_ghz, positive, "positive");
  c.bs_height_m = r.number("bs_height_m", c.bs_height_m, non_negative, "non-negative");
  c.ue_height_m = r.number("ue_height_m", c.ue_height_m, non_negative, "non-negative");
  c.tx_power_dbm = r.number("tx_power_dbm", c.tx_power_dbm);
  c.antenna_gain_dbi = r.number("antenna_gain_dbi", c.antenna_gain_dbi);
  c.rb_count = static_cast<int>(r.integer("rb_count", c.rb_count, 1));
  c.bandwidth_hz = r.number("bandwidth_hz", c.bandwidth_hz, positive, "positive");
  c.noise_figure_db = r.number("noise_figure_db", c.noise_figure_db);
  c.thermal_noise_dbm_per_hz = r.number("thermal_noise_dbm_per_hz", c.thermal_noise_dbm_per_hz);
  c.delta_loss = r.number("delta_loss", c.delta_loss, [](double x) { return x >= 1.0; }, ">= 1");
  c.rho_max = r.number("rho_max", c.rho_max, positive, "positive");
  c.shadowing_sigma_db =
      r.number("shadowing_sigma_db", c.shadowing_sigma_db, non_negative, "non-negative");
  c.min_distance_m = r.number("min_distance_m", c.min_distance_m, positive, "positive");
  r.finish();
  section_check("cell", [&] { c.validate(); });
}

void read_resources(ObjectReader r, ResourceRanges& c) {
  c.data_min = static_cast<int>(r.integer("data_min", c.data_min, 1));
  c.data_max = static_cast<int>(r.integer("data_max", c.data_max, 1));
  c.capability_min = r.number("capability_min", c.capability_min, positive, "positive");
  c.capability_max = r.number("capability_max", c.capability_max, positive, "positive");
  r.finish();
  section_check("resources", [&] { c.validate(); });
}

void read_protocol(ObjectReader r, protocol::ProtocolConfig& c) {
  c.mode = r.choice("mode", c.mode, kModes);
  c.k_total = static_cast<int>(r.integer("k_total", c.k_total, 1));
  c.fraction = r.number("fraction", c.fraction, [](double x) { return x > 0.0 && x <= 1.0; },
                        "in (0, 1]");
  auto& b = c.budget;
  b.t_round = Seconds(r.number("t_round", b.t_round.value(), positive, "positive"));
  b.t_final = Seconds(r.number("t_final", b.t_final.value(), non_negative, "non-negative"));
  b.t_cs = Seconds(r.number("t_cs", b.t_cs.value(), non_negative, "non-negative"));
  b.t_agg = Seconds(r.number("t_agg", b.t_agg.value(), non_negative, "non-negative"));
  b.model_size =
      Megabits(r.number("model_size_mbit", b.model_size.value(), positive, "positive"));
  b.epochs_per_round = static_cast<int>(r.integer("epochs_per_round", b.epochs_per_round, 1));
  c.fluct.r = r.number("fluctuation_r", c.fluct.r, non_negative, "non-negative");
  c.late_policy = r.choice("late_policy", c.late_policy, kLatePolicies);
  c.weighting = r.choice("weighting", c.weighting, kWeightings);
  r.finish();
  section_check("protocol", [&] { c.validate(); });
}

void read_trainer(ObjectReader r, TrainerConfig& c) {
  c.kind = r.choice("kind", c.kind, kTrainerKinds);
  c.hyper.batch = static_cast<int>(r.integer("batch", c.hyper.batch, 1));
  c.hyper.lr0 = r.number("lr0", c.hyper.lr0, non_negative, "non-negative");
  c.hyper.lr_decay = r.number("lr_decay", c.hyper.lr_decay, positive, "positive");
  if (const json* s = r.find("surrogate")) {
    ObjectReader sr(*s, r.key_path("surrogate"));
    c.surrogate.a_max = sr.number("a_max", c.surrogate.a_max,
                                  [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
    c.surrogate.tau = sr.number("tau", c.surrogate.tau, positive, "positive");
    sr.finish();
  }
  if (const json* n = r.find("native")) {
    ObjectReader nr(*n, r.key_path("native"));
    c.hidden = static_cast<std::size_t>(nr.integer("hidden", static_cast<std::int64_t>(c.hidden), 0));
    if (const json* d = nr.find("dataset")) {
      ObjectReader dr(*d, nr.key_path("dataset"));
      auto& ds = c.dataset;
      ds.path = dr.string("path", ds.path);
      ds.n_train = static_cast<std::size_t>(dr.integer("n_train", static_cast<std::int64_t>(ds.n_train), 1));
      ds.n_test = static_cast<std::size_t>(dr.integer("n_test", static_cast<std::int64_t>(ds.n_test), 1));
      ds.n_features = static_cast<std::size_t>(
          dr.integer("n_features", static_cast<std::int64_t>(ds.n_features), 1));
      ds.n_classes = static_cast<std::size_t>(
          dr.integer("n_classes", static_cast<std::int64_t>(ds.n_classes), 2));
      ds.separation = dr.number("separation", ds.separation, non_negative, "non-negative");
      dr.finish();
    }
    nr.finish();
  }
  r.finish();
}

void read_partition(ObjectReader r, PartitionConfig& c) {
  c.mode = r.choice("mode", c.mode, kPartitionModes);
  c.classes_per_client = static_cast<int>(r.integer("classes_per_client", c.classes_per_client, 1));
  r.finish();
}

void read_stop(ObjectReader r, StopConfig& c) {
  if (const json* t = r.find("target_accuracy")) {
    if (t->is_null()) {
      c.target_accuracy.reset();
    } else if (!t->is_number() || !(t->get<double>() > 0.0 && t->get<double>() <= 1.0)) {
      throw ConfigError(r.key_path("target_accuracy"), "must be null or a number in (0, 1]");
    } else {
      c.target_accuracy = t->get<double>();
    }
  }
  if (const json* t = r.find("thresholds")) {
    if (!t->is_array()) throw ConfigError(r.key_path("thresholds"), "expected an array");
    c.thresholds.clear();
    for (std::size_t i = 0; i < t->size(); ++i) {
      const auto& v = (*t)[i];
      const auto path = r.key_path("thresholds") + "[" + std::to_string(i) + "]";
      if (!v.is_number() || !(v.get<double>() >= 0.0 && v.get<double>() <= 1.0)) {
        throw ConfigError(path, "must be a number in [0, 1]");
      }
      c.thresholds.push_back(v.get<double>());
    }
  }
  r.finish();
}

std::vector<double> read_number_axis(const json& v, const std::string& path,
                                     const std::function<bool(double)>& ok, const char* expect) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto item_path = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_number() || !ok(v[i].get<double>())) {
      throw ConfigError(item_path, std::string("must be ") + expect);
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

template <typename Enum>
std::vector<Enum> read_choice_axis(const json& v, const std::string& path,
                                   const std::map<std::string, Enum>& options) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<Enum> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(ObjectReader::parse_choice(v[i], path + "[" + std::to_string(i) + "]", options));
  }
  return out;
}

void read_sweep(ObjectReader r, SweepConfig& c) {
  if (const json* v = r.find("t_round")) {
    c.t_round = read_number_axis(*v, r.key_path("t_round"), positive, "a positive number");
  }
  if (const json* v = r.find("fluctuation_r")) {
    c.fluctuation_r =
        read_number_axis(*v, r.key_path("fluctuation_r"), non_negative, "a non-negative number");
  }
  if (const json* v = r.find("mode")) c.mode = read_choice_axis(*v, r.key_path("mode"), kModes);
  if (const json* v = r.find("partition")) {
    c.partition = read_choice_axis(*v, r.key_path("partition"), kPartitionModes);
  }
  r.finish();
}

template <typename Enum>
std::string choice_name(Enum value, const std::map<std::string, Enum>& options) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return "unknown";
}

std::string format_number(double x) {
  char buf[64];
  if (x == std::floor(x) && std::abs(x) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", x);
  } else {
    std::snprintf(buf, sizeof buf, "%g", x);
  }
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c = default_config();
  ObjectReader r(root, "");
  if (const json* v = r.find("cell")) read_cell(ObjectReader(*v, "cell"), c.cell);
  if (const json* v = r.find("resources")) read_resources(ObjectReader(*v, "resources"), c.resources);
  if (const json* v = r.find("protocol")) read_protocol(ObjectReader(*v, "protocol"), c.protocol);
  if (const json* v = r.find("trainer")) read_trainer(ObjectReader(*v, "trainer"), c.trainer);
  if (const json* v = r.find("partition")) read_partition(ObjectReader(*v, "partition"), c.partition);
  if (const json* v = r.find("stop")) read_stop(ObjectReader(*v, "stop"), c.stop);
  if (const json* v = r.find("seeds")) {
    if (!v->is_array() || v->empty()) throw ConfigError("seeds", "expected a non-empty array");
    c.seeds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& s = (*v)[i];
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
        throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (const json* v = r.find("sweep")) read_sweep(ObjectReader(*v, "sweep"), c.sweep);
  c.output_dir = r.string("output_dir", c.output_dir);
  r.finish();

  c.trainer.hyper.epochs = c.protocol.budget.epochs_per_round;
  section_check("trainer", [&] {
    c.trainer.hyper.validate();
    c.trainer.surrogate.validate();
  });
  if (c.partition.mode == learning::PartitionMode::NonIid &&
      c.trainer.kind == TrainerKind::Native && c.trainer.dataset.path.empty() &&
      static_cast<std::size_t>(c.partition.classes_per_client) > c.trainer.dataset.n_classes) {
    throw ConfigError("partition.classes_per_client", "exceeds the dataset's class count");
  }
  // Every sweep point must itself be valid.
  for (const double t : c.sweep.t_round) {
    auto b = c.protocol.budget;
    b.t_round = Seconds(t);
    section_check("sweep.t_round", [&] { b.validate(); });
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json j;
  const auto& cell = c.cell;
  j["cell"] = {{"radius_m", cell.radius_m},
               {"carrier_freq_ghz", cell.carrier_freq_ghz},
               {"bs_height_m", cell.bs_height_m},
               {"ue_height_m", cell.ue_height_m},
               {"tx_power_dbm", cell.tx_power_dbm},
               {"antenna_gain_dbi", cell.antenna_gain_dbi},
               {"rb_count", cell.rb_count},
               {"bandwidth_hz", cell.bandwidth_hz},
               {"noise_figure_db", cell.noise_figure_db},
               {"thermal_noise_dbm_per_hz", cell.thermal_noise_dbm_per_hz},
               {"delta_loss", cell.delta_loss},
               {"rho_max", cell.rho_max},
               {"shadowing_sigma_db", cell.shadowing_sigma_db},
               {"min_distance_m", cell.min_distance_m}};
  j["resources"] = {{"data_min", c.resources.data_min},
                    {"data_max", c.resources.data_max},
                    {"capability_min", c.resources.capability_min},
                    {"capability_max", c.resources.capability_max}};
  const auto& p = c.protocol;
  j["protocol"] = {{"mode", choice_name(p.mode, kModes)},
                   {"k_total", p.k_total},
                   {"fraction", p.fraction},
                   {"t_round", p.budget.t_round.value()},
                   {"t_final", p.budget.t_final.value()},
                   {"t_cs", p.budget.t_cs.value()},
                   {"t_agg", p.budget.t_agg.value()},
                   {"model_size_mbit", p.budget.model_size.value()},
                   {"epochs_per_round", p.budget.epochs_per_round},
                   {"fluctuation_r", p.fluct.r},
                   {"late_policy", choice_name(p.late_policy, kLatePolicies)},
                   {"weighting", choice_name(p.weighting, kWeightings)}};
  const auto& t = c.trainer;
  j["trainer"] = {
      {"kind", choice_name(t.kind, kTrainerKinds)},
      {"batch", t.hyper.batch},
      {"lr0", t.hyper.lr0},
      {"lr_decay", t.hyper.lr_decay},
      {"surrogate", {{"a_max", t.surrogate.a_max}, {"tau", t.surrogate.tau}}},
      {"native",
       {{"hidden", t.hidden},
        {"dataset",
         {{"path", t.dataset.path},
          {"n_train", t.dataset.n_train},
          {"n_test", t.dataset.n_test},
          {"n_features", t.dataset.n_features},
          {"n_classes", t.dataset.n_classes},
          {"separation", t.dataset.separation}}}}}};
  j["partition"] = {{"mode", choice_name(c.partition.mode, kPartitionModes)},
                    {"classes_per_client", c.partition.classes_per_client}};
  j["stop"] = {{"target_accuracy", c.stop.target_accuracy ? json(*c.stop.target_accuracy)
                                                           : json(nullptr)},
               {"thresholds", c.stop.thresholds}};
  j["seeds"] = c.seeds;
  json modes = json::array();
  for (const auto m : c.sweep.mode) modes.push_back(choice_name(m, kModes));
  json parts = json::array();
  for (const auto m : c.sweep.partition) parts.push_back(choice_name(m, kPartitionModes));
  j["sweep"] = {{"t_round", c.sweep.t_round},
                {"fluctuation_r", c.sweep.fluctuation_r},
                {"mode", modes},
                {"partition", parts}};
  j["output_dir"] = c.output_dir;
  return j.dump(indent);
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(config_to_json(config, -1)));
  return buf;
}

std::string to_string(learning::PartitionMode mode) { return choice_name(mode, kPartitionModes); }

std::vector<RunDescriptor> expand_runs(const ExperimentConfig& config) {
  auto axis = [](const auto& values, auto base) {
    return values.empty() ? std::vector<decltype(base)>{base}
                          : std::vector<decltype(base)>(values.begin(), values.end());
  };
  const auto modes = axis(config.sweep.mode, config.protocol.mode);
  const auto parts = axis(config.sweep.partition, config.partition.mode);
  const auto rounds = axis(config.sweep.t_round, config.protocol.budget.t_round.value());
  const auto rs = axis(config.sweep.fluctuation_r, config.protocol.fluct.r);

  std::vector<RunDescriptor> runs;
  for (const auto mode : modes) {
    for (const auto part : parts) {
      for (const double t_round : rounds) {
        for (const double r : rs) {
          ExperimentConfig resolved = config;
          resolved.sweep = {};
          resolved.protocol.mode = mode;
          resolved.partition.mode = part;
          resolved.protocol.budget.t_round = Seconds(t_round);
          resolved.protocol.fluct.r = r;
          const std::string group = protocol::to_string(mode) + "_tround" +
                                    format_number(t_round) + "_r" + format_number(r) + "_" +
                                    to_string(part);
          for (const auto seed : config.seeds) {
            RunDescriptor d;
            d.group = group;
            d.seed = seed;
            d.name = group + "_seed" + std::to_string(seed);
            d.config = resolved;
            d.config.seeds = {seed};
            runs.push_back(std::move(d));
          }
        }
      }
    }
  }
  return runs;
}

std::vector<ClientProfile> make_profiles(const ExperimentConfig& config, std::uint64_t seed) {
  RngStream rng(seed, "profiles");
  return resources::generate_profiles(config.protocol.k_total, config.cell, config.resources, rng);
}

std::unique_ptr<learning::Trainer> make_trainer(const ExperimentConfig& config,
                                                std::span<const ClientProfile> profiles,
                                                std::uint64_t seed) {
  const auto& t = config.trainer;
  if (t.kind == TrainerKind::Surrogate) {
    return std::make_unique<learning::SurrogateTrainer>(t.surrogate);
  }
  learning::Dataset train;
  learning::Dataset test;
  if (t.dataset.path.empty()) {
    RngStream rng(seed, "dataset");
    auto split = learning::make_gaussian_blob_split(t.dataset.n_train, t.dataset.n_test,
                                                    t.dataset.n_features, t.dataset.n_classes,
                                                    t.dataset.separation, rng);
    train = std::move(split.train);
    test = std::move(split.test);
  } else {
    train = learning::load_dataset(t.dataset.path);
    test = learning::load_dataset(t.dataset.path + ".test");
  }
  RngStream part_rng(seed, "partition");
  auto partition = learning::partition_dataset(train, profiles, config.partition.mode,
                                               config.partition.classes_per_client, part_rng);
  const learning::ModelShape shape{train.n_features, t.hidden, train.n_classes};
  auto hyper = t.hyper;
  hyper.epochs = config.protocol.budget.epochs_per_round;
  return std::make_unique<learning::NativeTrainer>(std::move(train), std::move(test),
                                                   std::move(partition), shape, hyper);
}

std::vector<protocol::RoundRecord> execute(const RunDescriptor& run) {
  const auto profiles = make_profiles(run.config, run.seed);
  const auto trainer = make_trainer(run.config, profiles, run.seed);
  const protocol::StopCondition stop{run.config.stop.target_accuracy,
                                     run.config.protocol.budget.t_final};
  return protocol::run_experiment(run.config.protocol, stop, *trainer, profiles, run.seed);
}

namespace {

void write_atomically(const std::filesystem::path& target, const std::string& content) {
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string provenance(const std::string& hash, const RunDescriptor& run) {
  return "config_hash=" + hash + " seed=" + std::to_string(run.seed) + " run=" + run.name;
}

}  // namespace

int run_all(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  namespace fs = std::filesystem;
  if (fs::exists(options.out) && !options.force) {
    throw IoError("output directory " + options.out.string() +
                  " already exists (use --force to overwrite)");
  }
  const auto runs = expand_runs(config);
  const std::string hash = config_hash(config);

  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec) throw IoError("cannot create " + options.out.string() + ": " + ec.message());

  for (const auto seed : config.seeds) {
    std::ostringstream csv;
    csv << "# config_hash=" << hash << " seed=" << seed << '\n';
    resources::write_profiles_csv(csv, make_profiles(config, seed));
    write_atomically(options.out / ("profiles-seed" + std::to_string(seed) + ".csv"), csv.str());
  }

  std::vector<std::vector<protocol::RoundRecord>> results(runs.size());
  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const auto& run = runs[i];
      try {
        results[i] = execute(run);
        std::ostringstream jsonl;
        jsonl << json{{"header", true}, {"config_hash", hash}, {"seed", run.seed},
                      {"run", run.name}}
                     .dump()
              << '\n';
        for (const auto& rec : results[i]) jsonl << protocol::to_json_line(rec) << '\n';
        write_atomically(options.out / ("records-" + run.name + ".jsonl"), jsonl.str());

        std::ostringstream curve;
        metrics::write_curve_csv(curve, results[i], provenance(hash, run));
        write_atomically(options.out / ("curve-" + run.name + ".csv"), curve.str());

        std::lock_guard lock(log_mutex);
        log << "run " << run.name << ": " << results[i].size() << " rounds\n";
      } catch (const std::exception& e) {
        errors[i] = e.what();
        std::lock_guard lock(log_mutex);
        log << "run " << run.name << " failed: " << e.what() << '\n';
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.parallelism, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Summaries per group, in descriptor order.
  json summary;
  summary["config_hash"] = hash;
  summary["seeds"] = config.seeds;
  summary["thresholds"] = config.stop.thresholds;
  summary["groups"] = json::array();
  summary["failed"] = json::array();
  bool failed = false;
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t j = i;
    std::vector<std::vector<protocol::RoundRecord>> group_runs;
    json names = json::array();
    while (j < runs.size() && runs[j].group == runs[i].group) {
      if (errors[j].empty()) {
        group_runs.push_back(results[j]);
        names.push_back(runs[j].name);
      } else {
        failed = true;
        summary["failed"].push_back({{"run", runs[j].name}, {"error", errors[j]}});
      }
      ++j;
    }
    const auto& rc = runs[i].config;
    json g{{"group", runs[i].group},
           {"mode", protocol::to_string(rc.protocol.mode)},
           {"t_round", rc.protocol.budget.t_round.value()},
           {"fluctuation_r", rc.protocol.fluct.r},
           {"partition", to_string(rc.partition.mode)},
           {"runs", names}};
    if (!group_runs.empty()) {
      g["summary"] = json::parse(metrics::to_json(metrics::summarize(group_runs, config.stop.thresholds)));
    }
    summary["groups"].push_back(std::move(g));
    i = j;
  }
  write_atomically(options.out / "summary.json", summary.dump(2) + "\n");
  return failed ? 1 : 0;
}

}  // namespace fedcs::experiment
