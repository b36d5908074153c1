#include "reprbench/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "reprbench/errors.hpp"
#include "reprbench/rng.hpp"

namespace reprbench {

SyntheticTask make_gaussian_task(std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
                                 std::uint64_t seed, std::string source_tag) {
    if (classes < 2 || per_class < 1) throw ValidationError("synthetic task needs >= 2 classes and >= 1 sample each");
    if (dim < classes) throw ValidationError("synthetic task needs dim >= classes");

    const double offset = separation / std::sqrt(2.0);
    Rng rng(seed);
    std::vector<std::string> ids;
    std::vector<float> values;
    std::map<std::string, LabelEntry> entries;
    char buf[32];
    for (std::size_t i = 0; i < classes * per_class; ++i) {
        const std::size_t c = i % classes;
        std::snprintf(buf, sizeof buf, "s%05zu", i);
        ids.emplace_back(buf);
        for (std::size_t j = 0; j < dim; ++j)
            values.push_back(static_cast<float>(rng.normal() + (j == c ? offset : 0.0)));
        std::snprintf(buf, sizeof buf, "c%zu", c);
        entries.emplace(ids.back(), LabelEntry{buf, std::nullopt, std::nullopt});
    }
    return {EmbeddingSet(std::move(ids), FloatMatrix(classes * per_class, dim, std::move(values)), std::move(source_tag)),
            LabelTable(std::move(entries))};
}

}  // namespace reprbench
