#pragma once

#include <cstdint>
#include <vector>

#include "rbi/model/mfrn.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/rbi_generator.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::eval {

struct FacePoolScores {
  std::vector<double> scores;  // genuine then RBI for each face
  std::vector<int> labels;
  double auc = 0.5;
  double mean_map_genuine = 0.0;  // mean M_p over genuine inputs
  double mean_map_fake = 0.0;
};

// Scores every face and one RBI per face (stream `seed` split by face index).
FacePoolScores score_face_pool(model::Mfrn& model, const std::vector<FaceRecord>& faces,
                               const synth::ReconstructorAdapter& adapter, std::uint64_t seed,
                               const synth::SynthConfig& synth = {}, int batch_size = 32);

}  // namespace rbi::eval
