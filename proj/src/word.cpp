#include "qfock/word.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "qfock/errors.hpp"

namespace qfock {

std::int64_t ipow(std::int64_t base, int exp) {
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (base != 0 && r > std::numeric_limits<std::int64_t>::max() / base) {
            throw CapacityError("integer power overflow", std::numeric_limits<std::int64_t>::max(),
                                std::numeric_limits<std::int64_t>::max());
        }
        r *= base;
    }
    return r;
}

std::int64_t graded_dimension(int alphabet, int level) {
    std::int64_t total = 0;
    for (int n = 0; n <= level; ++n) total += ipow(alphabet, n);
    return total;
}

WordIndexer::WordIndexer(int alphabet, int top_level) : alphabet_(alphabet), top_(top_level) {
    if (alphabet < 1) throw RangeError("alphabet size must be >= 1");
    if (top_level < 0) throw RangeError("top level must be >= 0");
    offsets_.push_back(0);
    for (int n = 0; n <= top_level; ++n) {
        sizes_.push_back(ipow(alphabet, n));
        offsets_.push_back(offsets_.back() + sizes_.back());
    }
}

std::int64_t WordIndexer::local_index(const Word& w) const {
    std::int64_t idx = 0;
    for (int letter : w) {
        if (letter < 1 || letter > alphabet_) {
            throw RangeError("letter " + std::to_string(letter) + " outside 1.." +
                             std::to_string(alphabet_));
        }
        idx = idx * alphabet_ + (letter - 1);
    }
    return idx;
}

std::int64_t WordIndexer::global_index(const Word& w) const {
    const int n = static_cast<int>(w.size());
    if (n > top_) throw RangeError("word " + to_string(w) + " longer than top level");
    return offset(n) + local_index(w);
}

Word WordIndexer::word_at_local(int n, std::int64_t local) const {
    Word w(static_cast<std::size_t>(n));
    for (int k = n - 1; k >= 0; --k) {
        w[static_cast<std::size_t>(k)] = static_cast<int>(local % alphabet_) + 1;
        local /= alphabet_;
    }
    return w;
}

int WordIndexer::level_of_global(std::int64_t global) const {
    if (global < 0 || global >= dimension()) throw RangeError("global index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
    return static_cast<int>(it - offsets_.begin()) - 1;
}

Word WordIndexer::word_at_global(std::int64_t global) const {
    const int n = level_of_global(global);
    return word_at_local(n, global - offset(n));
}

std::vector<Word> words_of_length(int alphabet, int n) {
    WordIndexer idx(alphabet, n);
    std::vector<Word> out;
    out.reserve(static_cast<std::size_t>(idx.level_size(n)));
    for (std::int64_t i = 0; i < idx.level_size(n); ++i) out.push_back(idx.word_at_local(n, i));
    return out;
}

Word reversed(const Word& w) { return Word(w.rbegin(), w.rend()); }

Word erase_at(const Word& w, std::size_t pos) {
    Word out = w;
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(pos));
    return out;
}

std::string to_string(const Word& w) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) os << ',';
        os << w[i];
    }
    os << ')';
    return os.str();
}

}  // namespace qfock
