#include "reprbench/data_model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "reprbench/csv.hpp"
#include "reprbench/errors.hpp"

namespace reprbench {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }
    return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const std::uint32_t le = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<std::string> sample_ids, FloatMatrix vectors,
                           std::string source_tag)
    : sample_ids_(std::move(sample_ids)),
      vectors_(std::move(vectors)),
      source_tag_(std::move(source_tag)) {
    if (sample_ids_.empty()) throw ValidationError("embedding set must contain at least one sample");
    if (vectors_.cols() == 0) throw ValidationError("embedding dimension must be positive");
    if (vectors_.rows() != sample_ids_.size()) {
        throw ValidationError("embedding set has " + std::to_string(sample_ids_.size()) +
                              " ids but " + std::to_string(vectors_.rows()) + " rows");
    }
    for (std::size_t i = 0; i < sample_ids_.size(); ++i) {
        const auto& id = sample_ids_[i];
        if (id.empty()) throw ValidationError("empty sample id at row " + std::to_string(i));
        if (!index_.emplace(id, i).second) throw ValidationError("duplicate sample id '" + id + "'");
    }
    for (std::size_t r = 0; r < vectors_.rows(); ++r) {
        for (float v : vectors_.row(r)) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite value in row " + std::to_string(r) + " (sample '" +
                                      sample_ids_[r] + "')");
            }
        }
    }
}

std::optional<std::size_t> EmbeddingSet::index_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const {
    if (sample_ids_ != other.sample_ids_ || source_tag_ != other.source_tag_) return false;
    if (vectors_.rows() != other.vectors_.rows() || vectors_.cols() != other.vectors_.cols())
        return false;
    // Bitwise: -0.0f and 0.0f must not compare equal here.
    const auto a = vectors_.flat();
    const auto b = other.vectors_.flat();
    return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

EmbeddingSet read_embeddings(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) ||
        !std::equal(magic.begin(), magic.end(), std::begin(kContainerMagic))) {
        throw FormatError("not an embedding container (bad magic)");
    }
    std::uint32_t header_len = 0;
    if (!in.read(reinterpret_cast<char*>(&header_len), sizeof header_len))
        throw TruncationError("container truncated in header length");
    header_len = to_little_endian(header_len);

    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), header_len))
        throw TruncationError("container truncated in JSON header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("container header is not valid JSON: ") + e.what());
    }

    std::vector<std::string> ids;
    std::string source_tag;
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    try {
        source_tag = header.at("source_tag").get<std::string>();
        n = header.at("n").get<std::uint64_t>();
        d = header.at("d").get<std::uint64_t>();
        ids = header.at("sample_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("container header: ") + e.what());
    }
    if (ids.size() != n) {
        throw FormatError("container header lists " + std::to_string(ids.size()) +
                          " sample ids but n = " + std::to_string(n));
    }
    if (n == 0 || d == 0) throw ValidationError("container requires n >= 1 and d >= 1");

    std::vector<float> values(n * d);
    const auto payload_bytes = static_cast<std::streamsize>(values.size() * sizeof(float));
    in.read(reinterpret_cast<char*>(values.data()), payload_bytes);
    if (in.gcount() != payload_bytes) {
        throw TruncationError("container payload has " + std::to_string(in.gcount()) +
                              " bytes, expected n*d*4 = " + std::to_string(payload_bytes));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw TruncationError("container has trailing bytes after n*d payload");

    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : values) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = to_little_endian(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
    return EmbeddingSet(std::move(ids), FloatMatrix(n, d, std::move(values)), std::move(source_tag));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file " + path.string());
    return read_embeddings(in);
}

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
    nlohmann::ordered_json header;
    header["source_tag"] = set.source_tag();
    header["n"] = set.size();
    header["d"] = set.dim();
    header["sample_ids"] = set.sample_ids();
    const std::string text = header.dump();

    out.write(kContainerMagic, sizeof kContainerMagic);
    write_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (float v : set.vectors().flat()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32(out, bits);
    }
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_embeddings(set, out);
    if (!out) throw IoError("write failed for " + path.string());
}

std::string_view to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::val: return "val";
        case SplitTag::test: return "test";
    }
    return "?";
}

std::optional<SplitTag> parse_split_tag(std::string_view text) {
    if (text == "train") return SplitTag::train;
    if (text == "val") return SplitTag::val;
    if (text == "test") return SplitTag::test;
    return std::nullopt;
}

LabelTable::LabelTable(std::map<std::string, LabelEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string_view> classes;
    for (const auto& [id, entry] : entries_) {
        if (id.empty()) throw ValidationError("label table contains an empty sample id");
        if (entry.label.empty()) throw ValidationError("empty class label for sample '" + id + "'");
        classes.insert(entry.label);
    }
    if (classes.size() < 2) throw ValidationError("label table has fewer than 2 classes");
}

const LabelEntry* LabelTable::find(std::string_view id) const {
    auto it = entries_.find(std::string(id));
    return it == entries_.end() ? nullptr : &it->second;
}

LabelTable read_labels(std::istream& in) {
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields)) throw FormatError("label CSV is empty");
    const std::vector<std::string> expected{"sample_id", "label", "patient_id", "split_tag"};
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
    if (fields != expected)
        throw FormatError("label CSV header must be sample_id,label,patient_id,split_tag");

    std::map<std::string, LabelEntry> entries;
    std::size_t line = 1;
    while (csv::read_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 4) {
            throw FormatError("label CSV line " + std::to_string(line) + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        }
        LabelEntry entry;
        entry.label = fields[1];
        if (!fields[2].empty()) entry.patient_id = fields[2];
        if (!fields[3].empty()) {
            entry.split_tag = parse_split_tag(fields[3]);
            if (!entry.split_tag) {
                throw FormatError("label CSV line " + std::to_string(line) + ": unknown split_tag '" +
                                  fields[3] + "'");
            }
        }
        if (!entries.emplace(fields[0], std::move(entry)).second)
            throw ValidationError("duplicate sample id '" + fields[0] + "' in label CSV");
    }
    return LabelTable(std::move(entries));
}

LabelTable load_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open label file " + path.string());
    return read_labels(in);
}

void write_labels(const LabelTable& table, std::ostream& out) {
    csv::write_record(out, {"sample_id", "label", "patient_id", "split_tag"});
    for (const auto& [id, e] : table.entries()) {
        csv::write_record(out, {id, e.label, e.patient_id.value_or(""),
                                e.split_tag ? std::string(to_string(*e.split_tag)) : ""});
    }
}

void save_labels(const LabelTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_labels(table, out);
}

TaskDataset::TaskDataset(std::string name, EmbeddingSet embeddings, std::vector<LabelEntry> labels)
    : name_(std::move(name)), embeddings_(std::move(embeddings)), labels_(std::move(labels)) {
    if (labels_.size() != embeddings_.size())
        throw ValidationError("task dataset needs exactly one label per embedding row");
    std::set<std::string> classes;
    for (const auto& entry : labels_) {
        if (entry.label.empty()) throw ValidationError("empty class label");
        classes.insert(entry.label);
    }
    if (classes.size() < 2) throw ValidationError("fewer than 2 classes after join");
    class_list_.assign(classes.begin(), classes.end());
    class_index_.reserve(labels_.size());
    for (const auto& entry : labels_) {
        auto it = std::lower_bound(class_list_.begin(), class_list_.end(), entry.label);
        class_index_.push_back(static_cast<int>(it - class_list_.begin()));
    }
}

LabelTable TaskDataset::label_table() const {
    std::map<std::string, LabelEntry> entries;
    for (std::size_t i = 0; i < labels_.size(); ++i) entries.emplace(sample_id(i), labels_[i]);
    return LabelTable(std::move(entries));
}

bool TaskDataset::operator==(const TaskDataset& other) const {
    return name_ == other.name_ && embeddings_ == other.embeddings_ && labels_ == other.labels_;
}

JoinResult join(const EmbeddingSet& embeddings, const LabelTable& labels, std::string name) {
    JoinReport report;
    std::vector<std::size_t> keep;
    std::vector<LabelEntry> joined;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const auto& id = embeddings.sample_ids()[i];
        if (const LabelEntry* entry = labels.find(id)) {
            keep.push_back(i);
            joined.push_back(*entry);
        } else {
            report.dropped_embedding_ids.push_back(id);
        }
    }
    for (const auto& [id, entry] : labels.entries()) {
        if (!embeddings.index_of(id)) report.dropped_label_ids.push_back(id);
    }
    if (keep.empty()) throw ValidationError("embeddings and labels share no sample ids");

    std::set<std::string_view> classes;
    for (const auto& e : joined) classes.insert(e.label);
    if (classes.size() < 2) throw ValidationError("fewer than 2 classes after join");

    std::vector<std::string> ids;
    ids.reserve(keep.size());
    std::vector<float> values;
    values.reserve(keep.size() * embeddings.dim());
    for (std::size_t row : keep) {
        ids.push_back(embeddings.sample_ids()[row]);
        auto src = embeddings.vectors().row(row);
        values.insert(values.end(), src.begin(), src.end());
    }
    EmbeddingSet subset(std::move(ids), FloatMatrix(keep.size(), embeddings.dim(), std::move(values)),
                        embeddings.source_tag());
    return {TaskDataset(std::move(name), std::move(subset), std::move(joined)), std::move(report)};
}

}  // namespace reprbench
