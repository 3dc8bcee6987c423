#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace autopersuade {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> root_id;
    std::int64_t length_chars = 0;  // Unicode scalar values in text
};

enum class Split { train, estimation };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// An ordered collection of documents, optionally partitioned into a
/// training and an estimation set.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> documents);

    const std::vector<Document>& documents() const { return documents_; }
    std::size_t size() const { return documents_.size(); }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const Document& at(const std::string& id) const;

    bool has_split() const { return !split_.empty(); }
    Split split_of(const std::string& id) const;
    void set_split(std::map<std::string, Split> assignment);
    const std::map<std::string, Split>& split_assignment() const;

    /// Ids of documents in the given split, in corpus order.
    std::vector<std::string> ids_in_split(Split s) const;

private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::string, Split> split_;
};

/// Loads a JSON-Lines corpus: one {"id": ..., "text": ..., "root_id": ...?}
/// record per line. Rejects duplicate ids and malformed lines (with the line
/// number), and ids that cannot survive the CSV-based downstream formats.
Corpus load_corpus(const std::filesystem::path& path);

/// Assigns each document to the train or estimation set, keeping documents
/// that share a root_id split as close to train_fraction as integer rounding
/// allows (largest-remainder allocation over root groups). Documents without
/// a root_id form singleton groups. Deterministic given seed.
Corpus stratified_split(const Corpus& corpus, double train_fraction, std::uint64_t seed);

/// Split file: CSV `id,split` with split in {train, estimation}.
std::string split_to_csv(const Corpus& corpus);
std::map<std::string, Split> load_split_csv(const std::filesystem::path& path);

}  // namespace autopersuade
