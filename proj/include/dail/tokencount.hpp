#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dail::promptgen {

class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual int count(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

// Offline approximation: each run of alphanumeric/underscore characters costs
// ceil(len / 4) sub-word pieces; every other non-space character costs one.
class ApproxTokenCounter final : public TokenCounter {
public:
    int count(std::string_view text) const override;
    std::string name() const override { return "approx"; }
};

// Exact BPE over a supplied merges file ("a b" per line, rank = line order,
// optional "#version" header). Words carry an end-of-word marker "</w>" on
// their final symbol; punctuation splits into standalone words.
class BpeTokenCounter final : public TokenCounter {
public:
    explicit BpeTokenCounter(const std::filesystem::path& merges_file);
    int count(std::string_view text) const override;
    std::string name() const override { return name_; }

    std::vector<std::string> encode_word(const std::string& word) const;  // for tests

private:
    std::map<std::pair<std::string, std::string>, int> ranks_;
    std::string name_;
};

} // namespace dail::promptgen
