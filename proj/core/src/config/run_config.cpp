#include "rbi/config/run_config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"

namespace rbi::config {

namespace {

using V = ValueType;

const std::string kRgbShift = fmt::format("[{}, {}]", -20.0 / 255, 20.0 / 255);

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double parse_double(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not a number", key, text));
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not an integer", key, text));
  }
  return v;
}

std::vector<std::string> split_items(std::string text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// Canonical text for a raw value of the given type.
std::string normalize(const ConfigEntry& e, const std::vector<std::string>& items) {
  auto one = [&]() -> std::string {
    if (items.size() != 1) throw ConfigError(fmt::format("config key '{}' expects a single value", e.key));
    return items.front();
  };
  switch (e.type) {
    case V::kInt: return fmt::format("{}", parse_int(e.key, one()));
    case V::kFloat: return fmt::format("{}", parse_double(e.key, one()));
    case V::kBool: {
      auto t = one();
      std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
      if (t == "true" || t == "yes" || t == "on" || t == "1") return "true";
      if (t == "false" || t == "no" || t == "off" || t == "0") return "false";
      throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", e.key, t));
    }
    case V::kString: return items.empty() ? std::string() : one();
    case V::kRange: {
      if (items.size() != 2) throw ConfigError(fmt::format("config key '{}' expects [lo, hi]", e.key));
      const double lo = parse_double(e.key, items[0]), hi = parse_double(e.key, items[1]);
      Range{lo, hi}.validate(e.key);
      return fmt::format("[{}, {}]", lo, hi);
    }
    case V::kList: return fmt::format("[{}]", fmt::join(items, ", "));
  }
  return one();
}

const ConfigEntry& lookup(const std::string& key) {
  for (const auto& e : registry()) {
    if (e.key == key) return e;
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::string> yaml_items(const YAML::Node& node) {
  std::vector<std::string> out;
  if (node.IsSequence()) {
    for (const auto& n : node) out.push_back(n.as<std::string>());
  } else if (node.IsScalar()) {
    out.push_back(node.as<std::string>());
  } else if (!node.IsNull()) {
    throw ConfigError("config values must be scalars or lists");
  }
  return out;
}

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, YAML::Node>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto k = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else {
    out.emplace_back(prefix, node);
  }
}

}  // namespace

const std::vector<ConfigEntry>& registry() {
  static const std::vector<ConfigEntry> entries = {
      {"seed", V::kInt, "0", "root seed; every random stream is split from it by label"},
      {"workers", V::kInt, "1", "parallel synthesis workers"},

      {"model.variant", V::kString, "miniature",
       "reference = EfficientNet-B4 stages at 380x380 (reported backbone); miniature = channels (4,4,8,8,16) at 64x64"},
      {"model.sobel_norm", V::kString, "batch", "normalisation inside the Sobel block: batch (reported) | instance | none"},
      {"model.bam_reduction", V::kInt, "0",
       "0 = variant default: 16 for reference (attention module default), 4 for miniature"},
      {"model.bam_dilation", V::kInt, "4", "spatial dilation of the attention branch (attention module default)"},
      {"model.attention", V::kBool, "true", "false bypasses attention in every fusion block (ablation)"},
      {"model.pretrained_backbone", V::kString, "",
       "backbone weight archive; reported runs start from pretrained weights, desk runs from scratch"},

      {"synth.adapter", V::kString, "toy-autoencoder", "reconstructor: identity | toy-autoencoder | scripted"},
      {"synth.adapter_weights", V::kString, "", "weights for toy-autoencoder, TorchScript file for scripted"},
      {"synth.noise.probability", V::kFloat, "0.5", "chance of perturbing the background latent (chosen)"},
      {"synth.noise.sigma", V::kRange, "[0.1, 0.3]", "std of the background latent noise (chosen)"},
      {"synth.ssta.enabled", V::kBool, "true", "source/target statistical transforms"},
      {"synth.ssta.augment_probability", V::kFloat, "0.5", "chance that the source (else the target) is transformed"},
      {"synth.ssta.randomize_roles", V::kBool, "false", "swap source/target roles with probability 0.5"},
      {"synth.ssta.rgb_shift", V::kRange, kRgbShift, "per-channel shift, +-20/255 (chosen)"},
      {"synth.ssta.hue_deg", V::kRange, "[-10, 10]", "hue shift in degrees (chosen)"},
      {"synth.ssta.saturation", V::kRange, "[-0.1, 0.1]", "saturation shift (chosen)"},
      {"synth.ssta.value", V::kRange, "[-0.1, 0.1]", "value shift (chosen)"},
      {"synth.ssta.brightness", V::kRange, "[-0.1, 0.1]", "brightness offset (chosen)"},
      {"synth.ssta.contrast", V::kRange, "[-0.1, 0.1]", "contrast gain offset (chosen)"},
      {"synth.ssta.blur_probability", V::kFloat, "0.5", "blur, otherwise sharpen (chosen)"},
      {"synth.ssta.blur_sigma", V::kRange, "[0.5, 1.5]", "Gaussian blur sigma in pixels (chosen)"},
      {"synth.ssta.sharpen_amount", V::kRange, "[0.2, 0.6]", "unsharp-mask amount (chosen)"},
      {"synth.hull.variants", V::kList, "[full, lower-face, components, dilated]", "hull variants drawn uniformly"},
      {"synth.hull.dilation", V::kRange, "[0.02, 0.06]", "dilation radius as a fraction of the landmark extent"},
      {"synth.deform.probability", V::kFloat, "0.5", "chance of deforming mask and source (chosen)"},
      {"synth.deform.translate_x", V::kRange, "[-0.03, 0.03]", "fraction of width"},
      {"synth.deform.translate_y", V::kRange, "[-0.03, 0.03]", "fraction of height"},
      {"synth.deform.rotation_deg", V::kRange, "[-5, 5]", "degrees"},
      {"synth.deform.scale", V::kRange, "[0.97, 1.03]", "isotropic scale"},
      {"synth.deform.elastic_alpha", V::kRange, "[0, 0.02]", "peak elastic displacement, fraction of the longer side"},
      {"synth.deform.elastic_sigma", V::kFloat, "0.08", "smoothing of the elastic field, fraction of the longer side"},
      {"synth.blur.sigma", V::kRange, "[1, 4]", "mask blur sigma in pixels (chosen)"},
      {"synth.alpha", V::kRange, "[0.5, 1]", "blend ratio (reported range)"},

      {"train.lr", V::kFloat, "0.001", "learning rate (reported)"},
      {"train.batch_size", V::kInt, "32", "samples per batch, half genuine and half RBI (reported size)"},
      {"train.epochs", V::kInt, "80", "epochs (reported)"},
      {"train.rho", V::kFloat, "0.05", "sharpness-aware neighbourhood (optimizer's standard value)"},
      {"train.momentum", V::kFloat, "0.9", "momentum of the base update rule (chosen)"},
      {"train.lambda_1", V::kFloat, "50", "map-loss weight (reported best of the loss-weight study)"},
      {"train.lambda_2", V::kFloat, "100", "edge-loss weight (reported best of the loss-weight study)"},
      {"train.max_steps", V::kInt, "-1", "stop after this many steps; -1 = full schedule"},
      {"train.prefetch", V::kInt, "2", "batches prepared ahead of the optimizer"},
      {"train.epoch_checkpoints", V::kBool, "true", "write a checkpoint after every epoch"},
      {"train.validate", V::kBool, "false", "per-epoch AUC on held-out val faces (extrapolated protocol)"},
      {"train.augment.enabled", V::kBool, "true", "common training augmentations"},
      {"train.augment.jpeg_probability", V::kFloat, "0.3", "chosen"},
      {"train.augment.jpeg_quality", V::kRange, "[60, 100]", "chosen"},
      {"train.augment.brightness_contrast_probability", V::kFloat, "0.3", "chosen"},
      {"train.augment.brightness", V::kRange, "[-0.1, 0.1]", "chosen"},
      {"train.augment.contrast", V::kRange, "[-0.1, 0.1]", "chosen"},
      {"train.augment.color_jitter_probability", V::kFloat, "0.3", "chosen"},
      {"train.augment.hue_deg", V::kRange, "[-5, 5]", "chosen"},
      {"train.augment.saturation", V::kRange, "[-0.1, 0.1]", "chosen"},
      {"train.augment.value", V::kRange, "[-0.05, 0.05]", "chosen"},

      {"data.frames_per_video", V::kInt, "20", "evenly spaced training frames per video (reported)"},
      {"data.crop_margin", V::kFloat, "0.125", "crop margin per side, fraction of the box (chosen)"},
      {"data.crop_size", V::kInt, "0", "0 = model input size (380 for the reference variant, reported)"},
      {"data.splits", V::kString, "8/1/1", "train/val/test ratios or a video_id,split file"},

      {"eval.protocol", V::kString, "frame", "frame | video"},
      {"eval.frame_frames", V::kInt, "5", "faces per video at frame level (reported)"},
      {"eval.video_frames", V::kInt, "32", "faces per video at video level (reported)"},
      {"eval.pooled", V::kBool, "true", "also report one AUC over all manipulations"},
      {"eval.batch_size", V::kInt, "32", "inference batch size"},

      {"desk.faces", V::kInt, "240", "procedural faces for desk-scale runs"},
      {"desk.test_faces", V::kInt, "60", "held-out procedural faces"},
      {"desk.frame_size", V::kInt, "96", "rendered frame side in pixels"},
      {"desk.noise_sigma", V::kFloat, "0.02", "sensor noise of rendered frames"},
      {"desk.autoencoder_steps", V::kInt, "400", "toy reconstructor fitting steps"},
  };
  return entries;
}

const std::map<std::string, std::map<std::string, std::string>>& presets() {
  static const std::map<std::string, std::map<std::string, std::string>> p = {
      {"loss-best", {{"train.lambda_1", "50"}, {"train.lambda_2", "100"}}},
      {"loss-main-text", {{"train.lambda_1", "100"}, {"train.lambda_2", "50"}}},
      {"reference", {{"model.variant", "reference"}}},
      {"desk",
       {{"model.variant", "miniature"}, {"train.epochs", "8"}, {"train.batch_size", "32"}, {"train.max_steps", "-1"}}},
  };
  return p;
}

RunConfig::RunConfig() {
  for (const auto& e : registry()) values_[e.key] = e.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& e = lookup(key);
  std::vector<std::string> items;
  try {
    const auto node = YAML::Load(value);
    items = node.IsSequence() || e.type == V::kString ? yaml_items(node) : split_items(value);
    if (e.type == V::kString && node.IsNull()) items.clear();
  } catch (const YAML::Exception&) {
    items = split_items(value);
  }
  if (e.type == V::kString && !items.empty()) items = {trim(value)};
  values_[key] = normalize(e, items);
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::merge_yaml(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config is not valid YAML: {}", e.what()));
  }
  if (root.IsNull()) return;
  if (!root.IsMap()) throw ConfigError("config root must be a mapping");
  std::vector<std::pair<std::string, YAML::Node>> flat;
  flatten(root, "", flat);
  for (const auto& [key, node] : flat) {
    const auto& e = lookup(key);
    try {
      values_[key] = normalize(e, yaml_items(node));
    } catch (const YAML::Exception& ex) {
      throw ConfigError(fmt::format("config key '{}': {}", key, ex.what()));
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  merge_yaml(ss.str());
}

void RunConfig::apply_preset(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError(fmt::format("unknown preset '{}'", name));
  for (const auto& [k, v] : it->second) set(k, v);
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const { return parse_int(key, get(key)); }
double RunConfig::get_float(const std::string& key) const { return parse_double(key, get(key)); }
bool RunConfig::get_bool(const std::string& key) const { return get(key) == "true"; }

Range RunConfig::get_range(const std::string& key) const {
  const auto items = split_items(get(key));
  if (items.size() != 2) throw ConfigError(fmt::format("config key '{}' is not a range", key));
  return {parse_double(key, items[0]), parse_double(key, items[1])};
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const { return split_items(get(key)); }

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::fingerprint() const { return sha256_hex(canonical()); }

std::string RunConfig::to_yaml(bool with_comments) const {
  std::string out;
  std::vector<std::string> open;  // current nesting
  for (const auto& e : registry()) {
    std::vector<std::string> parts;
    std::stringstream ss(e.key);
    std::string p;
    while (std::getline(ss, p, '.')) parts.push_back(p);
    std::size_t common = 0;
    while (common < open.size() && common + 1 < parts.size() && open[common] == parts[common]) ++common;
    open.resize(common);
    for (std::size_t d = common; d + 1 < parts.size(); ++d) {
      out += std::string(2 * d, ' ') + parts[d] + ":\n";
      open.push_back(parts[d]);
    }
    const auto indent = std::string(2 * (parts.size() - 1), ' ');
    if (with_comments) out += indent + "# " + e.comment + "\n";
    auto value = values_.at(e.key);
    if (e.type == V::kString) value = value.empty() ? "\"\"" : "\"" + value + "\"";
    out += indent + parts.back() + ": " + value + "\n";
  }
  return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "# fingerprint: " << fingerprint() << "\n" << to_yaml(false);
}

model::ModelConfig model_config(const RunConfig& cfg) {
  auto m = model::ModelConfig::by_name(cfg.get("model.variant"));
  m.sobel_norm = model::parse_norm_policy(cfg.get("model.sobel_norm"));
  if (const auto r = cfg.get_int("model.bam_reduction"); r != 0) m.bam_reduction = static_cast<int>(r);
  m.bam_dilation = static_cast<int>(cfg.get_int("model.bam_dilation"));
  m.attention = cfg.get_bool("model.attention");
  m.validate();
  return m;
}

synth::SynthConfig synth_config(const RunConfig& cfg) {
  synth::SynthConfig s;
  s.noise.probability = cfg.get_float("synth.noise.probability");
  s.noise.sigma = cfg.get_range("synth.noise.sigma");
  s.assign.ssta_enabled = cfg.get_bool("synth.ssta.enabled");
  s.assign.augment_source_probability = cfg.get_float("synth.ssta.augment_probability");
  s.assign.randomize_roles = cfg.get_bool("synth.ssta.randomize_roles");
  const auto shift = cfg.get_range("synth.ssta.rgb_shift");
  s.assign.ssta.rgb_shift = {shift, shift, shift};
  s.assign.ssta.hue_shift_deg = cfg.get_range("synth.ssta.hue_deg");
  s.assign.ssta.saturation_shift = cfg.get_range("synth.ssta.saturation");
  s.assign.ssta.value_shift = cfg.get_range("synth.ssta.value");
  s.assign.ssta.brightness = cfg.get_range("synth.ssta.brightness");
  s.assign.ssta.contrast = cfg.get_range("synth.ssta.contrast");
  s.assign.ssta.blur_probability = cfg.get_float("synth.ssta.blur_probability");
  s.assign.ssta.blur_sigma = cfg.get_range("synth.ssta.blur_sigma");
  s.assign.ssta.sharpen_amount = cfg.get_range("synth.ssta.sharpen_amount");
  s.hull.variants.clear();
  for (const auto& v : cfg.get_list("synth.hull.variants")) s.hull.variants.push_back(synth::parse_hull_variant(v));
  if (s.hull.variants.empty()) throw ConfigError("synth.hull.variants must not be empty");
  s.hull.dilation_frac = cfg.get_range("synth.hull.dilation");
  s.deform.probability = cfg.get_float("synth.deform.probability");
  s.deform.translate_x = cfg.get_range("synth.deform.translate_x");
  s.deform.translate_y = cfg.get_range("synth.deform.translate_y");
  s.deform.rotation_deg = cfg.get_range("synth.deform.rotation_deg");
  s.deform.scale = cfg.get_range("synth.deform.scale");
  s.deform.elastic_alpha = cfg.get_range("synth.deform.elastic_alpha");
  s.deform.elastic_sigma_frac = cfg.get_float("synth.deform.elastic_sigma");
  s.blur.sigma = cfg.get_range("synth.blur.sigma");
  s.alpha = cfg.get_range("synth.alpha");
  if (s.alpha.lo < 0.5 || s.alpha.hi > 1.0) throw ConfigError("synth.alpha must lie within [0.5, 1]");
  return s;
}

synth::AdapterKind adapter_kind(const RunConfig& cfg) {
  try {
    return synth::parse_adapter_kind(cfg.get("synth.adapter"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

train::TrainConfig train_config(const RunConfig& cfg) {
  train::TrainConfig t;
  t.lr = cfg.get_float("train.lr");
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  t.epochs = static_cast<int>(cfg.get_int("train.epochs"));
  t.rho = cfg.get_float("train.rho");
  t.momentum = cfg.get_float("train.momentum");
  t.weights = {cfg.get_float("train.lambda_1"), cfg.get_float("train.lambda_2")};
  t.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  t.samples.synth = synth_config(cfg);
  t.samples.augment_enabled = cfg.get_bool("train.augment.enabled");
  auto& a = t.samples.augment;
  a.jpeg_probability = cfg.get_float("train.augment.jpeg_probability");
  a.jpeg_quality = cfg.get_range("train.augment.jpeg_quality");
  a.brightness_contrast_probability = cfg.get_float("train.augment.brightness_contrast_probability");
  a.brightness = cfg.get_range("train.augment.brightness");
  a.contrast = cfg.get_range("train.augment.contrast");
  a.color_jitter_probability = cfg.get_float("train.augment.color_jitter_probability");
  a.hue_shift_deg = cfg.get_range("train.augment.hue_deg");
  a.saturation_shift = cfg.get_range("train.augment.saturation");
  a.value_shift = cfg.get_range("train.augment.value");
  t.model = model_config(cfg);
  t.pretrained_backbone = cfg.get("model.pretrained_backbone");
  t.workers = static_cast<int>(cfg.get_int("workers"));
  t.prefetch = static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("train.prefetch")));
  t.max_steps = cfg.get_int("train.max_steps");
  t.epoch_checkpoints = cfg.get_bool("train.epoch_checkpoints");
  t.fingerprint = cfg.fingerprint();
  t.validate();
  return t;
}

data::CropOptions crop_options(const RunConfig& cfg) {
  data::CropOptions o;
  o.margin = cfg.get_float("data.crop_margin");
  const auto size = cfg.get_int("data.crop_size");
  o.size = size > 0 ? static_cast<int>(size) : model_config(cfg).input_size;
  o.validate();
  return o;
}

}  // namespace rbi::config
