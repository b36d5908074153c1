#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reprbench/matrix.hpp"

namespace reprbench {

// First eight bytes of every embedding container.
inline constexpr char kContainerMagic[8] = {'R', 'E', 'P', 'R', 'B', '1', '\0', '\0'};

/// N x D block of frozen features, one row per sample id.
///
/// Construction validates: N >= 1, D >= 1, ids unique and non-empty,
/// every value finite. Instances are immutable afterwards.
class EmbeddingSet {
public:
    EmbeddingSet(std::vector<std::string> sample_ids, FloatMatrix vectors, std::string source_tag);

    std::size_t size() const noexcept { return sample_ids_.size(); }
    std::size_t dim() const noexcept { return vectors_.cols(); }
    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
    const FloatMatrix& vectors() const noexcept { return vectors_; }
    const std::string& source_tag() const noexcept { return source_tag_; }

    std::optional<std::size_t> index_of(std::string_view id) const;

    bool operator==(const EmbeddingSet& other) const;

private:
    std::vector<std::string> sample_ids_;
    FloatMatrix vectors_;
    std::string source_tag_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

EmbeddingSet load_embeddings(const std::filesystem::path& path);
EmbeddingSet read_embeddings(std::istream& in);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& set, std::ostream& out);

enum class SplitTag { train, val, test };

std::string_view to_string(SplitTag tag);
std::optional<SplitTag> parse_split_tag(std::string_view text);

struct LabelEntry {
    std::string label;
    std::optional<std::string> patient_id;
    std::optional<SplitTag> split_tag;

    bool operator==(const LabelEntry&) const = default;
};

/// sample_id -> (class label, optional patient, optional predefined split).
class LabelTable {
public:
    explicit LabelTable(std::map<std::string, LabelEntry> entries);

    const std::map<std::string, LabelEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const LabelEntry* find(std::string_view id) const;

    bool operator==(const LabelTable&) const = default;

private:
    std::map<std::string, LabelEntry> entries_;
};

// CSV with header sample_id,label,patient_id,split_tag.
LabelTable load_labels(const std::filesystem::path& path);
LabelTable read_labels(std::istream& in);
void save_labels(const LabelTable& table, const std::filesystem::path& path);
void write_labels(const LabelTable& table, std::ostream& out);

struct JoinReport {
    std::vector<std::string> dropped_embedding_ids;  // no label entry
    std::vector<std::string> dropped_label_ids;      // no embedding row
};

/// Embeddings joined with labels. Rows keep the embedding file's order;
/// class indices are lexicographic ranks into class_list.
class TaskDataset {
public:
    TaskDataset(std::string name, EmbeddingSet embeddings, std::vector<LabelEntry> labels);

    const std::string& name() const noexcept { return name_; }
    const EmbeddingSet& embeddings() const noexcept { return embeddings_; }
    std::size_t size() const noexcept { return embeddings_.size(); }
    std::size_t dim() const noexcept { return embeddings_.dim(); }
    std::size_t num_classes() const noexcept { return class_list_.size(); }
    const std::vector<std::string>& class_list() const noexcept { return class_list_; }
    const std::vector<LabelEntry>& labels() const noexcept { return labels_; }
    const std::vector<int>& class_index() const noexcept { return class_index_; }
    const std::string& sample_id(std::size_t row) const { return embeddings_.sample_ids()[row]; }

    LabelTable label_table() const;

    bool operator==(const TaskDataset& other) const;

private:
    std::string name_;
    EmbeddingSet embeddings_;
    std::vector<LabelEntry> labels_;
    std::vector<std::string> class_list_;
    std::vector<int> class_index_;
};

struct JoinResult {
    TaskDataset dataset;
    JoinReport report;
};

JoinResult join(const EmbeddingSet& embeddings, const LabelTable& labels, std::string name);

}  // namespace reprbench
