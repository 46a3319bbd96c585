#include "rbi/model/checkpoint.hpp"

#include <fmt/format.h>

#include "rbi/core/error.hpp"

namespace rbi::model {

namespace {

void write_string(torch::serialize::OutputArchive& a, const std::string& key, const std::string& value) {
  a.write(key, c10::IValue(value));
}

void write_int(torch::serialize::OutputArchive& a, const std::string& key, std::int64_t value) {
  a.write(key, c10::IValue(value));
}

std::string read_string(torch::serialize::InputArchive& a, const std::string& key) {
  c10::IValue v;
  if (!a.try_read(key, v) || !v.isString()) throw DataError(fmt::format("checkpoint missing '{}'", key));
  return v.toStringRef();
}

std::int64_t read_int(torch::serialize::InputArchive& a, const std::string& key) {
  c10::IValue v;
  if (!a.try_read(key, v) || !v.isInt()) throw DataError(fmt::format("checkpoint missing '{}'", key));
  return v.toInt();
}

torch::serialize::InputArchive open(const std::filesystem::path& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw DataError(fmt::format("cannot read checkpoint '{}': {}", path.string(), e.what_without_backtrace()));
  }
  return archive;
}

CheckpointMeta read_meta(torch::serialize::InputArchive& a) {
  CheckpointMeta meta;
  meta.version = read_int(a, "meta.version");
  if (meta.version != kCheckpointVersion) {
    throw DataError(fmt::format("unsupported checkpoint version {}", meta.version));
  }
  meta.fingerprint = read_string(a, "meta.fingerprint");
  meta.variant = read_string(a, "meta.variant");
  meta.epoch = read_int(a, "meta.epoch");
  meta.step = read_int(a, "meta.step");
  meta.rng_state = read_string(a, "meta.rng_state");
  meta.extra = read_string(a, "meta.extra");
  return meta;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Mfrn& model, const CheckpointMeta& meta,
                     const torch::optim::Optimizer* optimizer) {
  torch::serialize::OutputArchive archive;
  write_int(archive, "meta.version", kCheckpointVersion);
  write_string(archive, "meta.fingerprint", meta.fingerprint);
  write_string(archive, "meta.variant", model->config().variant);
  write_int(archive, "meta.epoch", meta.epoch);
  write_int(archive, "meta.step", meta.step);
  write_string(archive, "meta.rng_state", meta.rng_state);
  write_string(archive, "meta.extra", meta.extra);
  write_int(archive, "constraint.projections", model->noise_extractor()->projections());
  write_int(archive, "constraint.resets", model->noise_extractor()->resets());

  torch::serialize::OutputArchive params;
  for (const auto& item : model->named_parameters()) params.write(item.key(), item.value());
  for (const auto& item : model->named_buffers()) params.write(item.key(), item.value(), true);
  archive.write("model", params);
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive opt;
    optimizer->save(opt);
    archive.write("optimizer", opt);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  archive.save_to(tmp);
  std::filesystem::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  auto archive = open(path);
  return read_meta(archive);
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, Mfrn& model, const std::string& expected_fingerprint,
                               bool force, torch::optim::Optimizer* optimizer) {
  auto archive = open(path);
  auto meta = read_meta(archive);
  if (meta.fingerprint != expected_fingerprint && !force) {
    throw ConfigError(fmt::format("checkpoint fingerprint {} does not match config fingerprint {}", meta.fingerprint,
                                  expected_fingerprint));
  }
  if (meta.variant != model->config().variant) {
    throw DataError(fmt::format("checkpoint holds a '{}' model, expected '{}'", meta.variant, model->config().variant));
  }
  torch::serialize::InputArchive params;
  if (!archive.try_read("model", params)) throw DataError("checkpoint has no model parameters");
  torch::NoGradGuard guard;
  auto restore = [&](const std::string& key, torch::Tensor& dst, bool buffer) {
    torch::Tensor src;
    if (!params.try_read(key, src, buffer)) throw DataError(fmt::format("checkpoint missing tensor '{}'", key));
    if (src.sizes() != dst.sizes()) throw DataError(fmt::format("checkpoint tensor '{}' has the wrong shape", key));
    dst.copy_(src);
  };
  for (auto& item : model->named_parameters()) restore(item.key(), item.value(), false);
  for (auto& item : model->named_buffers()) restore(item.key(), item.value(), true);
  model->noise_extractor()->set_counters(read_int(archive, "constraint.projections"),
                                         read_int(archive, "constraint.resets"));
  if (optimizer != nullptr) {
    torch::serialize::InputArchive opt;
    if (!archive.try_read("optimizer", opt)) throw DataError("checkpoint has no optimizer state");
    optimizer->load(opt);
  }
  return meta;
}

}  // namespace rbi::model
