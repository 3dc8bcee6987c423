#include "autopersuade/corpus.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"

namespace autopersuade {

namespace {

void check_id(const std::string& id, const std::string& context) {
    if (id.empty()) {
        throw ValidationError(context + ": empty id");
    }
    for (char c : id) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') {
            throw ValidationError(context + ": id '" + id +
                                  "' contains a character not representable in the CSV outputs");
        }
    }
}

}  // namespace

std::string to_string(Split s) {
    return s == Split::train ? "train" : "estimation";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "estimation") return Split::estimation;
    throw ValidationError("unknown split label '" + s + "' (expected train or estimation)");
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        auto [it, inserted] = index_.emplace(documents_[i].id, i);
        if (!inserted) {
            throw ValidationError("duplicate document id '" + documents_[i].id + "'");
        }
    }
}

const Document& Corpus::at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw ValidationError("unknown document id '" + id + "'");
    }
    return documents_[it->second];
}

Split Corpus::split_of(const std::string& id) const {
    auto it = split_.find(id);
    if (it == split_.end()) {
        throw ValidationError("document '" + id + "' has no split assignment");
    }
    return it->second;
}

void Corpus::set_split(std::map<std::string, Split> assignment) {
    for (const auto& [id, s] : assignment) {
        (void)s;
        if (!contains(id)) {
            throw ValidationError("split assignment references unknown document '" + id + "'");
        }
    }
    for (const auto& doc : documents_) {
        if (!assignment.count(doc.id)) {
            throw ValidationError("split assignment is not a partition: document '" + doc.id +
                                  "' is unassigned");
        }
    }
    split_ = std::move(assignment);
}

const std::map<std::string, Split>& Corpus::split_assignment() const {
    if (split_.empty()) {
        throw ValidationError("corpus has no split assignment");
    }
    return split_;
}

std::vector<std::string> Corpus::ids_in_split(Split s) const {
    std::vector<std::string> ids;
    for (const auto& doc : documents_) {
        if (split_of(doc.id) == s) ids.push_back(doc.id);
    }
    return ids;
}

Corpus load_corpus(const std::filesystem::path& path) {
    const std::string content = io::read_file(path);
    const std::vector<std::string> lines = io::split_lines(content);

    std::vector<Document> docs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const std::string context = path.string() + ":" + std::to_string(i + 1);

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(context + ": malformed JSON record: " + e.what());
        }
        if (!record.is_object()) {
            throw ValidationError(context + ": record is not a JSON object");
        }
        if (!record.contains("id") || !record["id"].is_string()) {
            throw ValidationError(context + ": missing string field 'id'");
        }
        if (!record.contains("text") || !record["text"].is_string()) {
            throw ValidationError(context + ": missing string field 'text'");
        }

        Document doc;
        doc.id = record["id"].get<std::string>();
        check_id(doc.id, context);
        doc.text = record["text"].get<std::string>();
        if (record.contains("root_id") && !record["root_id"].is_null()) {
            if (!record["root_id"].is_string()) {
                throw ValidationError(context + ": 'root_id' must be a string");
            }
            doc.root_id = record["root_id"].get<std::string>();
        }
        doc.length_chars = io::utf8_length(doc.text);
        docs.push_back(std::move(doc));
    }

    if (docs.empty()) {
        throw ValidationError(path.string() + ": corpus file contains no documents");
    }
    try {
        return Corpus(std::move(docs));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

Corpus stratified_split(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie in (0, 1), got " +
                              io::format_double(train_fraction));
    }
    if (corpus.size() < 2) {
        throw ValidationError("cannot split a corpus with fewer than 2 documents");
    }

    // Group documents by root; documents without a root form singleton groups.
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& doc : corpus.documents()) {
        const std::string key = doc.root_id ? ("root:" + *doc.root_id) : ("doc:" + doc.id);
        groups[key].push_back(doc.id);
    }

    const auto n = static_cast<double>(corpus.size());
    const auto global_target =
        static_cast<std::size_t>(std::llround(train_fraction * n));

    // Largest-remainder allocation: every group gets floor or ceil of its
    // share, and the total matches the rounded global target.
    struct GroupAlloc {
        const std::string* key;
        const std::vector<std::string>* ids;
        std::size_t base;
        double remainder;
    };
    std::vector<GroupAlloc> allocs;
    std::size_t base_total = 0;
    for (const auto& [key, ids] : groups) {
        const double share = train_fraction * static_cast<double>(ids.size());
        const auto base = static_cast<std::size_t>(std::floor(share));
        allocs.push_back({&key, &ids, base, share - std::floor(share)});
        base_total += base;
    }
    std::size_t leftover = global_target > base_total ? global_target - base_total : 0;
    // Ties (common when many groups share a size) break by a seeded hash so
    // the leftover seats do not systematically favor low ids.
    std::stable_sort(allocs.begin(), allocs.end(), [&](const GroupAlloc& a, const GroupAlloc& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return derive_seed(seed, "split-tie:" + *a.key) < derive_seed(seed, "split-tie:" + *b.key);
    });
    for (auto& alloc : allocs) {
        if (leftover == 0) break;
        if (alloc.base < alloc.ids->size()) {
            ++alloc.base;
            --leftover;
        }
    }

    // Seeded choice of which documents within each group go to train.
    // Iterate groups in key order so the assignment is order-independent.
    std::sort(allocs.begin(), allocs.end(),
              [](const GroupAlloc& a, const GroupAlloc& b) { return *a.key < *b.key; });
    std::map<std::string, Split> assignment;
    for (const auto& alloc : allocs) {
        std::vector<std::string> ids = *alloc.ids;
        std::sort(ids.begin(), ids.end());
        Rng rng(derive_seed(seed, "split:" + *alloc.key));
        rng.shuffle(ids);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            assignment[ids[i]] = i < alloc.base ? Split::train : Split::estimation;
        }
    }

    Corpus result = corpus;
    result.set_split(std::move(assignment));
    return result;
}

std::string split_to_csv(const Corpus& corpus) {
    std::string out = "id,split\n";
    for (const auto& doc : corpus.documents()) {
        out += doc.id;
        out += ',';
        out += to_string(corpus.split_of(doc.id));
        out += '\n';
    }
    return out;
}

std::map<std::string, Split> load_split_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = io::split_lines(io::read_file(path));
    if (lines.empty() || lines[0] != "id,split") {
        throw ValidationError(path.string() + ": expected header 'id,split'");
    }
    std::map<std::string, Split> assignment;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = io::split_csv_line(lines[i]);
        if (fields.size() != 2) {
            throw ValidationError(path.string() + ":" + std::to_string(i + 1) +
                                  ": expected 2 fields");
        }
        if (!assignment.emplace(fields[0], split_from_string(fields[1])).second) {
            throw ValidationError(path.string() + ": duplicate id '" + fields[0] + "'");
        }
    }
    if (assignment.empty()) {
        throw ValidationError(path.string() + ": empty split file");
    }
    return assignment;
}

}  // namespace autopersuade
