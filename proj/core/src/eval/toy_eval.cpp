#include "rbi/eval/toy_eval.hpp"

#include "rbi/core/error.hpp"
#include "rbi/core/tensor_bridge.hpp"
#include "rbi/eval/auc.hpp"

namespace rbi::eval {

FacePoolScores score_face_pool(model::Mfrn& model, const std::vector<FaceRecord>& faces,
                               const synth::ReconstructorAdapter& adapter, std::uint64_t seed,
                               const synth::SynthConfig& synth, int batch_size) {
  if (faces.empty()) throw DataError("no faces to score");
  if (batch_size < 2) throw ConfigError("scoring batch size must be at least 2");
  model->eval();
  torch::NoGradGuard guard;
  FacePoolScores out;
  const Rng root(seed);
  double map_g = 0.0, map_f = 0.0;
  const auto per_batch = static_cast<std::size_t>(batch_size / 2);
  for (std::size_t i = 0; i < faces.size(); i += per_batch) {
    std::vector<torch::Tensor> xs;
    const auto end = std::min(faces.size(), i + per_batch);
    for (std::size_t k = i; k < end; ++k) {
      Rng rng = root.split(k);
      const auto fake = synth::generate_rbi(faces[k], adapter, rng, synth);
      xs.push_back(to_tensor(faces[k].image));
      xs.push_back(to_tensor(fake.image));
    }
    const auto o = model->forward(torch::stack(xs));
    const auto p = o.p_fake.to(torch::kDouble);
    const auto m = o.map.to(torch::kDouble).flatten(1).mean(1);
    for (std::int64_t k = 0; k < p.size(0); ++k) {
      out.scores.push_back(p[k].item<double>());
      out.labels.push_back(static_cast<int>(k % 2));
      (k % 2 == 0 ? map_g : map_f) += m[k].item<double>();
    }
  }
  out.mean_map_genuine = map_g / static_cast<double>(faces.size());
  out.mean_map_fake = map_f / static_cast<double>(faces.size());
  out.auc = auc(out.scores, out.labels);
  return out;
}

}  // namespace rbi::eval
