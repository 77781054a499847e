#include "dail/tokencount.hpp"

#include <cctype>
#include <fstream>
#include <limits>

#include "dail/error.hpp"

namespace dail::promptgen {

int ApproxTokenCounter::count(std::string_view text) const {
    int tokens = 0;
    std::size_t word_len = 0;
    auto flush = [&] {
        if (word_len > 0) {
            tokens += static_cast<int>((word_len + 3) / 4);
            word_len = 0;
        }
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            ++word_len;
        } else {
            flush();
            if (!std::isspace(static_cast<unsigned char>(c))) {
                ++tokens;
            }
        }
    }
    flush();
    return tokens;
}

BpeTokenCounter::BpeTokenCounter(const std::filesystem::path& merges_file) {
    std::ifstream in(merges_file);
    if (!in) {
        throw ConfigError("cannot open BPE merges file " + merges_file.string());
    }
    name_ = "bpe:" + merges_file.filename().string();
    std::string line;
    int rank = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto space = line.find(' ');
        if (space == std::string::npos) continue;
        ranks_[{line.substr(0, space), line.substr(space + 1)}] = rank++;
    }
}

std::vector<std::string> BpeTokenCounter::encode_word(const std::string& word) const {
    if (word.empty()) return {};
    std::vector<std::string> symbols;
    for (std::size_t i = 0; i < word.size(); ++i) {
        symbols.emplace_back(1, word[i]);
    }
    symbols.back() += "</w>";

    while (symbols.size() > 1) {
        int best_rank = std::numeric_limits<int>::max();
        std::size_t best_pos = 0;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = ranks_.find({symbols[i], symbols[i + 1]});
            if (it != ranks_.end() && it->second < best_rank) {
                best_rank = it->second;
                best_pos = i;
            }
        }
        if (best_rank == std::numeric_limits<int>::max()) break;
        symbols[best_pos] += symbols[best_pos + 1];
        symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
    }
    return symbols;
}

int BpeTokenCounter::count(std::string_view text) const {
    int total = 0;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            total += static_cast<int>(encode_word(word).size());
            word.clear();
        }
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            word += c;
        } else {
            flush();
            if (!std::isspace(static_cast<unsigned char>(c))) {
                total += static_cast<int>(encode_word(std::string(1, c)).size());
            }
        }
    }
    flush();
    return total;
}

} // namespace dail::promptgen
