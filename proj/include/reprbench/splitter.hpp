#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "reprbench/data_model.hpp"

namespace reprbench {

// floor(x + 1/2), tolerant to representation error just below a half.
std::size_t round_half_up(double x);

/// Per-sample train/val/test assignment. No patient spans two splits.
struct SplitAssignment {
    std::map<std::string, SplitTag> assignment;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
    double val_fraction = 0.0;
    std::vector<std::string> warnings;

    // Dataset rows carrying the given tag, in row order. Throws when the
    // assignment does not cover the dataset.
    std::vector<std::size_t> rows(const TaskDataset& dataset, SplitTag tag) const;
    std::vector<SplitTag> tags_for(const TaskDataset& dataset) const;

    bool operator==(const SplitAssignment& other) const { return assignment == other.assignment; }
};

SplitAssignment make_splits(const TaskDataset& dataset, double test_fraction, double val_fraction,
                            std::uint64_t seed);

struct SplitReport {
    std::array<std::size_t, 3> sizes{};                     // indexed by SplitTag
    std::array<std::vector<std::size_t>, 3> class_counts;   // [split][class]
    std::vector<std::string> leaked_patients;
    std::vector<std::string> missing_train_classes;
    std::vector<std::string> unassigned_ids;
    std::array<bool, 3> empty{};

    std::size_t leaked_patient_count() const noexcept { return leaked_patients.size(); }
    bool has_empty_split() const noexcept { return empty[0] || empty[1] || empty[2]; }
};

SplitReport audit_split(const TaskDataset& dataset, const SplitAssignment& split);

// CSV `sample_id,split`.
void write_split_csv(const SplitAssignment& split, std::ostream& out);
void save_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split_csv(std::istream& in);
SplitAssignment load_split(const std::filesystem::path& path);

}  // namespace reprbench
