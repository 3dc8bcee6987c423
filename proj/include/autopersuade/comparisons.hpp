#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace autopersuade {

class Corpus;

enum class Winner { left, right };

/// One forced-choice outcome: the respondent in session_id picked `winner`
/// between left_id and right_id. Ties are not representable.
struct ComparisonRecord {
    std::string session_id;
    std::string left_id;
    std::string right_id;
    Winner winner;

    const std::string& winner_id() const { return winner == Winner::left ? left_id : right_id; }
    const std::string& loser_id() const { return winner == Winner::left ? right_id : left_id; }
};

struct ComparisonSet {
    std::vector<ComparisonRecord> records;

    std::size_t size() const { return records.size(); }

    /// Distinct ids appearing in any record, sorted.
    std::vector<std::string> ids() const;

    /// Records whose ids both satisfy `keep`.
    template <typename Pred>
    ComparisonSet filter(Pred keep) const {
        ComparisonSet out;
        for (const auto& r : records) {
            if (keep(r)) out.records.push_back(r);
        }
        return out;
    }
};

/// Loads CSV `session_id,left_id,right_id,winner` with winner in {left,right}.
ComparisonSet load_comparisons(const std::filesystem::path& path);

/// Checks that every id in the set resolves against the corpus.
void validate_against(const ComparisonSet& comparisons, const Corpus& corpus);

std::string comparisons_to_csv(const ComparisonSet& comparisons);

}  // namespace autopersuade
