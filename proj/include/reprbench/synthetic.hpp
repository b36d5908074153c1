#pragma once

#include <cstdint>
#include <string>

#include "reprbench/data_model.hpp"

namespace reprbench {

struct SyntheticTask {
    EmbeddingSet embeddings;
    LabelTable labels;
};

/// Isotropic Gaussian classes with unit noise. Class c is centred at
/// (separation / sqrt(2)) * e_c, so every pair of class means is
/// `separation` standard deviations apart. Sample ids and labels depend
/// only on (classes, per_class), so tasks generated with different seeds
/// or separations share one label table.
SyntheticTask make_gaussian_task(std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
                                 std::uint64_t seed, std::string source_tag);

}  // namespace reprbench
