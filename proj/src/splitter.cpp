#include "reprbench/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "reprbench/csv.hpp"
#include "reprbench/errors.hpp"
#include "reprbench/rng.hpp"

namespace reprbench {

std::size_t round_half_up(double x) {
    if (!(x >= 0.0)) return 0;
    return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

namespace {

struct Group {
    std::string key;
    std::vector<std::size_t> rows;
    int majority_class = 0;
};

std::vector<Group> build_groups(const TaskDataset& dataset, std::span<const std::size_t> rows) {
    std::map<std::string, std::vector<std::size_t>> by_key;
    for (std::size_t row : rows) {
        const auto& entry = dataset.labels()[row];
        // Prefixes keep patient keys and singleton keys from colliding.
        std::string key = entry.patient_id ? "p:" + *entry.patient_id : "s:" + dataset.sample_id(row);
        by_key[key].push_back(row);
    }
    std::vector<Group> groups;
    groups.reserve(by_key.size());
    for (auto& [key, members] : by_key) {
        std::vector<std::size_t> counts(dataset.num_classes(), 0);
        for (std::size_t row : members) ++counts[dataset.class_index()[row]];
        // max_element returns the first maximum: ties go to the smallest class index.
        const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
        groups.push_back({key, std::move(members), static_cast<int>(best)});
    }
    return groups;
}

// Hamilton apportionment of `total` over classes proportional to `weights`;
// remainder ties go to the lower class index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
    const double sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
    std::vector<std::size_t> quota(weights.size(), 0);
    if (sum == 0.0) return quota;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        const double exact = static_cast<double>(total) * static_cast<double>(weights[c]) / sum;
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[c];
        remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned)
        ++quota[remainders[i].second];
    return quota;
}

// Greedy, class-stratified packing of groups into `target` samples.
// `order` holds group indices, already shuffled and grouped by class in
// canonical class order. Taken groups are flagged in `taken`.
std::vector<std::size_t> pack(const std::vector<Group>& groups, const std::vector<std::size_t>& order,
                              std::vector<bool>& taken, std::size_t target, std::size_t num_classes) {
    std::vector<std::size_t> class_weight(num_classes, 0);
    for (std::size_t g : order)
        if (!taken[g]) class_weight[groups[g].majority_class] += groups[g].rows.size();
    const auto quota = apportion(target, class_weight);

    std::vector<std::size_t> chosen;
    std::size_t total = 0;
    std::size_t cumulative_target = 0;
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        cumulative_target += quota[c];
        for (; cursor < order.size() && groups[order[cursor]].majority_class == static_cast<int>(c);
             ++cursor) {
            const std::size_t g = order[cursor];
            if (taken[g] || total >= cumulative_target) continue;
            taken[g] = true;
            chosen.push_back(g);
            total += groups[g].rows.size();
        }
    }
    // Classes that ran short leave a deficit; fill it in processing order.
    for (std::size_t g : order) {
        if (total >= target) break;
        if (taken[g]) continue;
        taken[g] = true;
        chosen.push_back(g);
        total += groups[g].rows.size();
    }
    return chosen;
}

std::vector<std::size_t> shuffled_class_order(const std::vector<Group>& groups, std::uint64_t seed) {
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return groups[a].majority_class < groups[b].majority_class;
    });
    return order;
}

}  // namespace

std::vector<std::size_t> SplitAssignment::rows(const TaskDataset& dataset, SplitTag tag) const {
    std::vector<std::size_t> out;
    const auto tags = tags_for(dataset);
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == tag) out.push_back(i);
    return out;
}

std::vector<SplitTag> SplitAssignment::tags_for(const TaskDataset& dataset) const {
    std::vector<SplitTag> tags(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto it = assignment.find(dataset.sample_id(i));
        if (it == assignment.end())
            throw ValidationError("split does not assign sample '" + dataset.sample_id(i) + "'");
        tags[i] = it->second;
    }
    return tags;
}

SplitAssignment make_splits(const TaskDataset& dataset, double test_fraction, double val_fraction,
                            std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(val_fraction > 0.0 && val_fraction < 1.0))
        throw ValidationError("split fractions must lie strictly between 0 and 1");

    const std::size_t n = dataset.size();
    const std::size_t num_classes = dataset.num_classes();
    std::vector<SplitTag> tags(n, SplitTag::train);
    std::vector<bool> assigned(n, false);

    // Predefined test designations are authoritative; the rest of each such
    // patient's samples follow them so that no patient straddles splits.
    std::set<std::string> test_patients;
    bool predefined_test = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = dataset.labels()[i];
        if (e.split_tag == SplitTag::test) {
            predefined_test = true;
            if (e.patient_id) test_patients.insert(*e.patient_id);
        }
    }
    if (predefined_test) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = dataset.labels()[i];
            if (e.split_tag == SplitTag::test || (e.patient_id && test_patients.contains(*e.patient_id))) {
                tags[i] = SplitTag::test;
                assigned[i] = true;
            }
        }
    }

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i)
        if (!assigned[i]) pool.push_back(i);
    if (pool.empty()) throw ValidationError("no training data: every sample is in the predefined test set");

    const auto groups = build_groups(dataset, pool);
    const auto order = shuffled_class_order(groups, seed);
    std::size_t largest = 0;
    for (const auto& g : groups) largest = std::max(largest, g.rows.size());

    // Share of the drawable pool that ends up in train.
    const double train_share =
        predefined_test ? 1.0 - val_fraction : 1.0 - test_fraction - val_fraction * (1.0 - test_fraction);
    if (static_cast<double>(largest) > train_share * static_cast<double>(pool.size())) {
        throw ValidationError("unsplittable: one patient group holds " + std::to_string(largest) + " of " +
                              std::to_string(pool.size()) + " samples");
    }

    std::vector<bool> taken(groups.size(), false);
    std::size_t test_size = n - pool.size();
    if (!predefined_test) {
        const std::size_t test_count = round_half_up(test_fraction * static_cast<double>(n));
        for (std::size_t g : pack(groups, order, taken, test_count, num_classes)) {
            for (std::size_t row : groups[g].rows) tags[row] = SplitTag::test;
            test_size += groups[g].rows.size();
        }
    }
    const std::size_t val_count = round_half_up(val_fraction * static_cast<double>(n - test_size));
    for (std::size_t g : pack(groups, order, taken, val_count, num_classes))
        for (std::size_t row : groups[g].rows) tags[row] = SplitTag::val;

    SplitAssignment split;
    split.seed = seed;
    split.test_fraction = test_fraction;
    split.val_fraction = val_fraction;
    for (std::size_t i = 0; i < n; ++i) split.assignment.emplace(dataset.sample_id(i), tags[i]);
    for (const auto& cls : audit_split(dataset, split).missing_train_classes)
        split.warnings.push_back("class '" + cls + "' has no training samples");
    return split;
}

SplitReport audit_split(const TaskDataset& dataset, const SplitAssignment& split) {
    SplitReport report;
    for (auto& counts : report.class_counts) counts.assign(dataset.num_classes(), 0);
    std::map<std::string, std::set<SplitTag>> patient_splits;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto it = split.assignment.find(dataset.sample_id(i));
        if (it == split.assignment.end()) {
            report.unassigned_ids.push_back(dataset.sample_id(i));
            continue;
        }
        const auto s = static_cast<std::size_t>(it->second);
        ++report.sizes[s];
        ++report.class_counts[s][dataset.class_index()[i]];
        if (const auto& pid = dataset.labels()[i].patient_id) patient_splits[*pid].insert(it->second);
    }
    for (const auto& [pid, splits] : patient_splits)
        if (splits.size() > 1) report.leaked_patients.push_back(pid);
    for (std::size_t s = 0; s < 3; ++s) report.empty[s] = report.sizes[s] == 0;
    const auto& train_counts = report.class_counts[static_cast<std::size_t>(SplitTag::train)];
    for (std::size_t c = 0; c < dataset.num_classes(); ++c)
        if (train_counts[c] == 0) report.missing_train_classes.push_back(dataset.class_list()[c]);
    return report;
}

void write_split_csv(const SplitAssignment& split, std::ostream& out) {
    csv::write_record(out, {"sample_id", "split"});
    for (const auto& [id, tag] : split.assignment) csv::write_record(out, {id, std::string(to_string(tag))});
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_split_csv(split, out);
}

SplitAssignment read_split_csv(std::istream& in) {
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields) || fields != std::vector<std::string>{"sample_id", "split"})
        throw FormatError("split CSV header must be sample_id,split");
    SplitAssignment split;
    std::size_t line = 1;
    while (csv::read_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 2)
            throw FormatError("split CSV line " + std::to_string(line) + ": expected 2 fields");
        const auto tag = parse_split_tag(fields[1]);
        if (!tag) throw FormatError("split CSV line " + std::to_string(line) + ": unknown split '" + fields[1] + "'");
        if (!split.assignment.emplace(fields[0], *tag).second)
            throw ValidationError("split CSV assigns '" + fields[0] + "' twice");
    }
    return split;
}

SplitAssignment load_split(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open split file " + path.string());
    return read_split_csv(in);
}

}  // namespace reprbench
