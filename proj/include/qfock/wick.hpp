#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qfock/caps.hpp"
#include "qfock/word.hpp"

namespace qfock {

/// Exact compressions P_rows psi_u P_cols of the Wick words psi_u.
///
/// psi_u is built by the three-term recursion
///   psi_{i1..in} = X_{i1} psi_{i2..in} - sum_{j>=2} q^{j-2} [i1 = ij] psi_{i2..^ij..in},
/// evaluated on the column basis with enough extra levels that truncation
/// never touches the retained rows.
class WickTable {
public:
    WickTable(int alphabet, double q, int row_top, int col_top, int max_length,
              const SizeCaps& caps = {});

    int alphabet() const noexcept { return alphabet_; }
    double q() const noexcept { return q_; }
    int row_top() const noexcept { return rows_.top_level(); }
    int col_top() const noexcept { return cols_.top_level(); }
    int max_length() const noexcept { return max_length_; }
    const WordIndexer& rows() const noexcept { return rows_; }
    const WordIndexer& cols() const noexcept { return cols_; }

    /// Matrix of psi_u with rows over the row basis and columns over the column basis.
    const Eigen::MatrixXd& operator[](const Word& u) const;
    /// Same, by global index of u among words of length <= max_length.
    const Eigen::MatrixXd& at(std::int64_t word_index) const;

private:
    int alphabet_;
    double q_;
    int max_length_;
    WordIndexer rows_;
    WordIndexer cols_;
    WordIndexer words_;
    std::vector<Eigen::MatrixXd> table_;
};

}  // namespace qfock
