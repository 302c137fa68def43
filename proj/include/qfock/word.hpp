#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qfock {

/// A word over the alphabet {1..N}. Letter k stands for the basis vector h_k,
/// so the word (i1,...,in) indexes h_{i1} (x) ... (x) h_{in}.
using Word = std::vector<int>;

/// Integer powers of the alphabet size, with overflow detection.
std::int64_t ipow(std::int64_t base, int exp);

/// Number of basis words of length <= level, i.e. 1 + N + ... + N^level.
std::int64_t graded_dimension(int alphabet, int level);

/// Maps words to dense indices.
///
/// Within level n a word is read as a base-N number with the first letter as
/// the most significant digit, so local indices follow lexicographic order.
/// Global indices concatenate the levels 0, 1, ..., top.
class WordIndexer {
public:
    WordIndexer(int alphabet, int top_level);

    int alphabet() const noexcept { return alphabet_; }
    int top_level() const noexcept { return top_; }

    std::int64_t level_size(int n) const { return sizes_.at(static_cast<std::size_t>(n)); }
    std::int64_t offset(int n) const { return offsets_.at(static_cast<std::size_t>(n)); }
    std::int64_t dimension() const noexcept { return offsets_.back(); }

    std::int64_t local_index(const Word& w) const;
    std::int64_t global_index(const Word& w) const;
    Word word_at_local(int n, std::int64_t local) const;
    Word word_at_global(std::int64_t global) const;
    int level_of_global(std::int64_t global) const;

private:
    int alphabet_;
    int top_;
    std::vector<std::int64_t> sizes_;
    std::vector<std::int64_t> offsets_;  // top_ + 2 entries; last is the total dimension
};

/// All words of length n in lexicographic order.
std::vector<Word> words_of_length(int alphabet, int n);

Word reversed(const Word& w);
Word erase_at(const Word& w, std::size_t pos);

/// "(1,2,1)" style rendering; the empty word renders as "()".
std::string to_string(const Word& w);

}  // namespace qfock
