#include "autopersuade/comparisons.hpp"

#include <set>
#include <sstream>

#include "autopersuade/corpus.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"

namespace autopersuade {

std::vector<std::string> ComparisonSet::ids() const {
    std::set<std::string> seen;
    for (const auto& r : records) {
        seen.insert(r.left_id);
        seen.insert(r.right_id);
    }
    return {seen.begin(), seen.end()};
}

ComparisonSet load_comparisons(const std::filesystem::path& path) {
    const std::string content = io::read_file(path);
    const auto lines = io::split_lines(content);
    if (lines.empty()) {
        throw ValidationError("comparisons file is empty: " + path.string());
    }
    if (lines[0] != "session_id,left_id,right_id,winner") {
        throw ValidationError("comparisons header must be 'session_id,left_id,right_id,winner', got '" +
                              lines[0] + "' in " + path.string());
    }

    ComparisonSet out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = io::split_csv_line(lines[i]);
        const std::string where = path.string() + " line " + std::to_string(i + 1);
        if (fields.size() != 4) {
            throw ValidationError("expected 4 fields, got " + std::to_string(fields.size()) + " at " + where);
        }
        ComparisonRecord rec;
        rec.session_id = fields[0];
        rec.left_id = fields[1];
        rec.right_id = fields[2];
        if (rec.left_id.empty() || rec.right_id.empty()) {
            throw ValidationError("empty document id at " + where);
        }
        if (rec.left_id == rec.right_id) {
            throw ValidationError("comparison of a document with itself ('" + rec.left_id + "') at " + where);
        }
        if (fields[3] == "left") {
            rec.winner = Winner::left;
        } else if (fields[3] == "right") {
            rec.winner = Winner::right;
        } else if (fields[3] == "tie") {
            throw ValidationError("ties are not supported (winner='tie' at " + where + ")");
        } else {
            throw ValidationError("winner must be 'left' or 'right', got '" + fields[3] + "' at " + where);
        }
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) {
        throw ValidationError("comparisons file has a header but no records: " + path.string());
    }
    return out;
}

void validate_against(const ComparisonSet& comparisons, const Corpus& corpus) {
    for (const auto& id : comparisons.ids()) {
        if (!corpus.contains(id)) {
            throw ValidationError("comparison references unknown document id '" + id + "'");
        }
    }
}

std::string comparisons_to_csv(const ComparisonSet& comparisons) {
    std::ostringstream out;
    out << "session_id,left_id,right_id,winner\n";
    for (const auto& r : comparisons.records) {
        out << r.session_id << ',' << r.left_id << ',' << r.right_id << ','
            << (r.winner == Winner::left ? "left" : "right") << '\n';
    }
    return out.str();
}

}  // namespace autopersuade
