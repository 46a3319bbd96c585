#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rbi/core/range.hpp"
#include "rbi/data/crop.hpp"
#include "rbi/eval/scores.hpp"
#include "rbi/model/model_config.hpp"
#include "rbi/synth/rbi_generator.hpp"
#include "rbi/synth/reconstructor.hpp"
#include "rbi/train/trainer.hpp"

namespace rbi::config {

enum class ValueType { kInt, kFloat, kBool, kString, kRange, kList };

struct ConfigEntry {
  std::string key;
  ValueType type;
  std::string default_value;  // canonical text
  std::string comment;        // where the default comes from
};

// Every tunable key with its default.
const std::vector<ConfigEntry>& registry();

// Named bundles of overrides, e.g. the two published loss-weight settings.
const std::map<std::string, std::map<std::string, std::string>>& presets();

// Layered configuration: defaults <- files <- presets/overrides. Values are
// kept in canonical text so equal settings always hash equally.
class RunConfig {
 public:
  RunConfig();

  // Nested YAML maps are flattened to dotted keys. Unknown keys throw ConfigError.
  void merge_file(const std::filesystem::path& path);
  void merge_yaml(std::string_view text);
  // `key=value`, value in YAML or comma-separated form.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);
  void apply_preset(const std::string& name);

  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_float(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  Range get_range(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Sorted `key=value` lines.
  std::string canonical() const;
  std::string fingerprint() const;
  // Nested YAML; with_comments adds the provenance of each default.
  std::string to_yaml(bool with_comments) const;
  void write(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Bindings from keys to module parameters.
model::ModelConfig model_config(const RunConfig& cfg);
synth::SynthConfig synth_config(const RunConfig& cfg);
synth::AdapterKind adapter_kind(const RunConfig& cfg);
train::TrainConfig train_config(const RunConfig& cfg);
data::CropOptions crop_options(const RunConfig& cfg);

}  // namespace rbi::config
