#include "tdvs/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tdvs/textio.hpp"

namespace tdvs {

namespace {

const char* type_name(KeyType t) {
  switch (t) {
    case KeyType::Int: return "integer";
    case KeyType::U64: return "unsigned 64-bit integer";
    case KeyType::Double: return "real number";
    case KeyType::Bool: return "boolean (true/false/0/1)";
    case KeyType::String: return "string";
  }
  return "?";
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : RunConfig::schema())
    if (k.name == name) return &k;
  return nullptr;
}

void check_value(const KeySpec& spec, const std::string& value) {
  const std::string what =
      "config: key '" + spec.name + "' expects " + type_name(spec.type) + ", got '" + value + "'";
  switch (spec.type) {
    case KeyType::Int: {
      int v = 0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) throw ConfigError(what);
      break;
    }
    case KeyType::U64: {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) throw ConfigError(what);
      break;
    }
    case KeyType::Double: {
      try {
        size_t used = 0;
        (void)std::stod(value, &used);
        if (used != value.size()) throw ConfigError(what);
      } catch (const ConfigError&) {
        throw;
      } catch (...) {
        throw ConfigError(what);
      }
      break;
    }
    case KeyType::Bool:
      if (value != "true" && value != "false" && value != "0" && value != "1")
        throw ConfigError(what);
      break;
    case KeyType::String:
      break;
  }
}

}  // namespace

const std::vector<KeySpec>& RunConfig::schema() {
  static const std::vector<KeySpec> keys = {
      {"seed", KeyType::U64, "1", "master seed; all module streams derive from it"},
      {"threads", KeyType::Int, "0", "worker threads, 0 = hardware concurrency"},

      {"texture_path", KeyType::String, "", "target texture PNG; empty = procedural texture"},
      {"texture_seed", KeyType::U64, "1",
       "procedural texture stream seed; independent of 'seed' so servo/eval sweeps keep the scene"},
      {"texture_size", KeyType::Int, "1024", "procedural texture resolution (texels per side)"},
      {"plane_distance_m", KeyType::Double, "0.5", "target plane z in the robot base frame"},
      {"plane_halfwidth_m", KeyType::Double, "0.25", "texture half-extent on the plane, meters"},
      {"background_rgb", KeyType::String, "0,0,0", "color outside the texture, three values in [0,1]"},

      {"robot_length_m", KeyType::Double, "0.4", "backbone length L"},
      {"robot_tendon_offset_m", KeyType::Double, "0.0018", "tendon offset d from the backbone"},
      {"robot_backbone_radius_m", KeyType::Double, "0.0009", "backbone radius (metadata)"},
      {"robot_youngs_modulus_pa", KeyType::Double, "207e9", "backbone Young's modulus (metadata)"},
      {"robot_density_kg_m3", KeyType::Double, "7800", "backbone density (metadata)"},

      {"camera_width_px", KeyType::Int, "640", "rendered image width"},
      {"camera_height_px", KeyType::Int, "480", "rendered image height"},
      {"camera_hfov_deg", KeyType::Double, "19", "horizontal field of view, degrees"},

      {"spiral_amplitude_mm", KeyType::Double, "7", "spiral maximum tendon displacement A"},
      {"spiral_periods", KeyType::Double, "20", "spiral period count P"},
      {"spiral_samples", KeyType::Int, "5000", "spiral sample count n"},
      {"label_beta_per_mm", KeyType::Double, "1", "tanh label sharpness, 1/mm"},

      {"aug_light_gain_min", KeyType::Double, "0.6", "dataset lighting gain range, low"},
      {"aug_light_gain_max", KeyType::Double, "1.4", "dataset lighting gain range, high"},
      {"aug_light_gradient_min", KeyType::Double, "-0.4", "dataset lighting gradient range, low"},
      {"aug_light_gradient_max", KeyType::Double, "0.4", "dataset lighting gradient range, high"},
      {"aug_occlusion_count_min", KeyType::Int, "0", "dataset occlusion rectangles, min count"},
      {"aug_occlusion_count_max", KeyType::Int, "2", "dataset occlusion rectangles, max count"},
      {"aug_occlusion_frac_min", KeyType::Double, "0", "dataset occlusion area fraction, low"},
      {"aug_occlusion_frac_max", KeyType::Double, "0.35", "dataset occlusion area fraction, high"},

      {"net_input_size", KeyType::Int, "64", "network input width = height, pixels"},
      {"net_layers", KeyType::String,
       "conv8,relu,pool,conv16,relu,pool,conv32,relu,pool,conv32,relu,pool,flatten,dense64,relu,"
       "linear2",
       "layer stack; conv<N>, relu, pool, flatten, dense<N>, linear2"},
      {"net_freeze_prefix", KeyType::Int, "0", "mark the first N layers non-trainable"},

      {"dataset_dir", KeyType::String, "", "dataset directory (train input)"},
      {"train_epochs", KeyType::Int, "50", "training epochs"},
      {"train_batch_size", KeyType::Int, "32", "mini-batch size"},
      {"train_learning_rate", KeyType::Double, "1e-3", "Adam learning rate (1e-5 at paper scale)"},
      {"train_beta1", KeyType::Double, "0.9", "Adam beta1"},
      {"train_beta2", KeyType::Double, "0.999", "Adam beta2"},
      {"train_epsilon", KeyType::Double, "1e-8", "Adam epsilon"},

      {"checkpoint", KeyType::String, "", "parameter checkpoint file (servo/eval input)"},
      {"servo_start_q1_mm", KeyType::Double, "6", "servo start displacement q1"},
      {"servo_start_q2_mm", KeyType::Double, "-4", "servo start displacement q2"},
      {"servo_lambda_mm", KeyType::Double, "0.4", "control gain, mm per unit output per second"},
      {"servo_dt_s", KeyType::Double, "1", "control step interval, seconds"},
      {"servo_max_iterations", KeyType::Int, "300", "iteration budget per run"},
      {"servo_epsilon", KeyType::Double, "0.05", "convergence threshold on ||raw output||_inf"},
      {"servo_hold_count", KeyType::Int, "10", "consecutive below-threshold iterations to converge"},
      {"actuation_limit_mm", KeyType::Double, "10", "tendon travel clamp, +/- mm"},
      {"servo_zero_at_target", KeyType::Bool, "true",
       "subtract the network output on the target image, v = -lambda (f(I) - f(I0))"},
      {"servo_save_images", KeyType::Bool, "false", "write per-iteration view/difference PNGs"},

      {"perturb_joint_noise", KeyType::Bool, "false", "enable Gaussian joint noise"},
      {"perturb_joint_noise_std_mm", KeyType::Double, "0.01", "joint noise standard deviation"},
      {"perturb_gain_scale", KeyType::Bool, "false", "enable random output gain scaling"},
      {"perturb_gain_scale_min", KeyType::Double, "0.25", "output gain scale range, low"},
      {"perturb_gain_scale_max", KeyType::Double, "4", "output gain scale range, high"},
      {"perturb_scene", KeyType::Bool, "false", "enable random lighting/occlusion on served views"},
      {"perturb_light_gain_min", KeyType::Double, "0.6", "servo lighting gain range, low"},
      {"perturb_light_gain_max", KeyType::Double, "1.4", "servo lighting gain range, high"},
      {"perturb_light_gradient_min", KeyType::Double, "-0.4", "servo lighting gradient range, low"},
      {"perturb_light_gradient_max", KeyType::Double, "0.4", "servo lighting gradient range, high"},
      {"perturb_occlusion_count_min", KeyType::Int, "1", "servo occlusion rectangles, min count"},
      {"perturb_occlusion_count_max", KeyType::Int, "1", "servo occlusion rectangles, max count"},
      {"perturb_occlusion_frac_min", KeyType::Double, "0", "servo occlusion area fraction, low"},
      {"perturb_occlusion_frac_max", KeyType::Double, "0.8", "servo occlusion area fraction, high"},
      {"perturb_refresh_period", KeyType::Int, "20", "iterations between perturbation refreshes"},

      {"eval_starts", KeyType::String, "5,5; -5,5; -5,-5; 5,-5",
       "start displacements, 'q1,q2' pairs separated by ';'"},
      {"eval_seeds", KeyType::String, "1", "comma-separated seed list for the sweep"},
  };
  return keys;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not 'key = value': '" + std::string(body) + "'");
    const std::string key{trim(body.substr(0, eq))};
    const std::string value{trim(body.substr(eq + 1))};
    if (key.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key");
    const KeySpec* spec = find_key(key);
    if (!spec)
      throw ConfigError("config: unknown key '" + key + "' (line " + std::to_string(line_no) + ")");
    if (cfg.values_.count(key))
      throw ConfigError("config: duplicate key '" + key + "' (line " + std::to_string(line_no) + ")");
    check_value(*spec, value);
    cfg.values_.emplace(key, value);
  }
  return cfg;
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("config: unknown key '" + key + "'");
  return spec->default_value;
}

int RunConfig::get_int(const std::string& key) const { return std::stoi(raw(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return std::stoull(raw(key)); }

double RunConfig::get_double(const std::string& key) const { return std::stod(raw(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  return v == "true" || v == "1";
}

const std::string& RunConfig::get_string(const std::string& key) const { return raw(key); }

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("config: unknown key '" + key + "'");
  check_value(*spec, value);
  values_[key] = value;
}

std::vector<std::pair<std::string, std::string>> RunConfig::effective() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(schema().size());
  for (const auto& k : schema()) out.emplace_back(k.name, raw(k.name));
  return out;
}

void RunConfig::write_effective(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("config: cannot write '" + path.string() + "'");
  out << "# effective configuration (all keys resolved)\n";
  for (const auto& [k, v] : effective()) out << k << " = " << v << "\n";
}

}  // namespace tdvs
