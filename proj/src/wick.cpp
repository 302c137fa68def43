#include "qfock/wick.hpp"

#include <algorithm>
#include <cmath>

#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"

namespace qfock {

WickTable::WickTable(int alphabet, double q, int row_top, int col_top, int max_length,
                     const SizeCaps& caps)
    : alphabet_(alphabet),
      q_(q),
      max_length_(max_length),
      rows_(alphabet, row_top),
      cols_(alphabet, col_top),
      words_(alphabet, max_length) {
    if (max_length < 0) throw RangeError("Wick table length must be >= 0");
    const std::int64_t entries = words_.dimension() * rows_.dimension() * cols_.dimension();
    const std::int64_t budget = caps.max_doubled_dimension * 256;
    if (entries > budget) throw CapacityError("Wick table entries", entries, budget);

    // Rows kept for a length-m word: enough for every longer word built on it
    // to stay exact, and never more than the word can reach from the columns.
    auto cap = [&](int m) { return std::min(row_top + (max_length - m), col_top + m); };

    // Previous two lengths of working matrices; index = local index within the level.
    std::vector<Eigen::MatrixXd> prev2, prev1, cur;
    std::vector<WordIndexer> space;
    for (int m = 0; m <= max_length; ++m) space.emplace_back(alphabet, std::max(0, cap(m)));

    table_.resize(static_cast<std::size_t>(words_.dimension()));
    for (int m = 0; m <= max_length; ++m) {
        const WordIndexer& here = space[static_cast<std::size_t>(m)];
        const auto count = words_.level_size(m);
        cur.assign(static_cast<std::size_t>(count), Eigen::MatrixXd());
        for (std::int64_t local = 0; local < count; ++local) {
            Eigen::MatrixXd value;
            if (m == 0) {
                value = ops::regrade(cols_, here, Eigen::MatrixXd::Identity(cols_.dimension(),
                                                                            cols_.dimension()));
            } else {
                const Word w = words_.word_at_local(m, local);
                const Word tail(w.begin() + 1, w.end());
                const WordIndexer& below = space[static_cast<std::size_t>(m - 1)];
                value = ops::left_gaussian(below, here,
                                           prev1[static_cast<std::size_t>(words_.local_index(tail))],
                                           w[0], q);
                for (std::size_t j = 1; j < w.size(); ++j) {
                    if (w[j] != w[0]) continue;
                    const Word reduced = erase_at(tail, j - 1);
                    const WordIndexer& two_below = space[static_cast<std::size_t>(m - 2)];
                    value -= std::pow(q, static_cast<double>(j - 1)) *
                             ops::regrade(two_below, here,
                                          prev2[static_cast<std::size_t>(words_.local_index(reduced))]);
                }
            }
            table_[static_cast<std::size_t>(words_.offset(m) + local)] =
                ops::regrade(here, rows_, value);
            cur[static_cast<std::size_t>(local)] = std::move(value);
        }
        prev2 = std::move(prev1);
        prev1 = std::move(cur);
    }
}

const Eigen::MatrixXd& WickTable::operator[](const Word& u) const {
    if (static_cast<int>(u.size()) > max_length_) {
        throw RangeError("Wick word " + to_string(u) + " longer than the table");
    }
    return table_[static_cast<std::size_t>(words_.global_index(u))];
}

const Eigen::MatrixXd& WickTable::at(std::int64_t word_index) const {
    if (word_index < 0 || word_index >= words_.dimension()) throw RangeError("Wick index out of range");
    return table_[static_cast<std::size_t>(word_index)];
}

}  // namespace qfock
