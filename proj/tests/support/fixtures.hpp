#pragma once
// Small dataset builders shared by the unit tests.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "reprbench/data_model.hpp"
#include "reprbench/rng.hpp"

namespace fixture {

inline std::string id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "x%04zu", i);
    return buf;
}

// Dataset whose rows carry the given labels, optional patients and tags.
// Vectors are zeros unless supplied (row-major, `dim` columns).
inline reprbench::TaskDataset dataset(const std::vector<std::string>& labels,
                                      const std::vector<std::optional<std::string>>& patients = {},
                                      const std::vector<std::optional<reprbench::SplitTag>>& tags = {},
                                      std::vector<float> vectors = {}, std::size_t dim = 1) {
    const std::size_t n = labels.size();
    std::vector<std::string> ids;
    std::vector<reprbench::LabelEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(id(i));
        entries.push_back({labels[i], patients.empty() ? std::nullopt : patients[i],
                           tags.empty() ? std::nullopt : tags[i]});
    }
    if (vectors.empty()) vectors.assign(n * dim, 0.f);
    reprbench::EmbeddingSet set(std::move(ids), reprbench::FloatMatrix(n, dim, std::move(vectors)), "fixture");
    return reprbench::TaskDataset("fixture", std::move(set), std::move(entries));
}

// Isotropic Gaussian classes centred at `separation * e_c` (dim >= classes).
inline reprbench::TaskDataset gaussian(std::size_t classes, std::size_t per_class, std::size_t dim,
                                       double separation, std::uint64_t seed) {
    reprbench::Rng rng(seed, 99);
    std::vector<std::string> labels;
    std::vector<float> v;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            labels.push_back("c" + std::to_string(c));
            for (std::size_t j = 0; j < dim; ++j)
                v.push_back(static_cast<float>(rng.normal() + (j == c ? separation : 0.0)));
        }
    }
    return dataset(labels, {}, {}, std::move(v), dim);
}

}  // namespace fixture
