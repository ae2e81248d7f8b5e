#pragma once

// Shared helpers for the unit and acceptance tests: scratch directories and
// seeded corpus generators.

#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "refinery/document.hpp"

namespace refinery::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("refinery-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

/// Pseudo-words over a small alphabet; vocabulary index -> word is stable.
inline std::string vocab_word(std::size_t index) {
    static const char* syllables[] = {"ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "ve", "da", "zu", "be"};
    std::string w;
    std::size_t x = index + 1;
    while (x > 0) {
        w += syllables[x % 12];
        x /= 12;
    }
    return w;
}

inline std::string random_words(std::mt19937_64& rng, std::size_t count, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += vocab_word(pick(rng));
    }
    return out;
}

/// Multi-line text: `lines` segments of 1..max_tokens words.
inline std::string random_lines(std::mt19937_64& rng, std::size_t lines, std::size_t max_tokens, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> len(1, max_tokens);
    std::string out;
    for (std::size_t i = 0; i < lines; ++i) {
        if (i) out += '\n';
        out += random_words(rng, len(rng), vocab);
    }
    return out;
}

/// A random UTF-8 string mixing ASCII, Latin-1, Greek, Cyrillic, CJK,
/// combining marks, digits from several scripts, symbols and whitespace.
inline std::string random_unicode(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::pair<char32_t, char32_t>> ranges = {
        {0x20, 0x7E},     {0x09, 0x0D},     {0xA0, 0xFF},     {0x100, 0x17F},   {0x370, 0x3FF},
        {0x400, 0x4FF},   {0x300, 0x36F},   {0x660, 0x669},   {0x966, 0x96F},   {0x2000, 0x206F},
        {0x2100, 0x214F}, {0x3000, 0x3040}, {0x4E00, 0x4E80}, {0x1F600, 0x1F64F}, {0x10400, 0x1044F},
        {0x13A0, 0x13F5}, {0xFF10, 0xFF5A}, {0x1D400, 0x1D4FF}, {0x0590, 0x05FF}, {0x1E00, 0x1EFF},
    };
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> which(0, ranges.size() - 1);
    std::string out;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = ranges[which(rng)];
        char32_t cp = std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
        if (cp >= 0xD800 && cp <= 0xDFFF) cp = 'x';
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

inline Document make_doc(std::string id, std::string text, std::string lang = "eus_Latn",
                         std::string collection = "c0") {
    Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    d.lang = std::move(lang);
    d.collection = std::move(collection);
    return d;
}

/// Scored documents with unique ids, urls, segment labels and optional extras.
inline std::vector<Document> random_scored_corpus(std::mt19937_64& rng, std::size_t n, std::size_t max_lines = 6) {
    std::vector<Document> docs;
    std::uniform_real_distribution<double> score(0.0, 10.0);
    std::uniform_int_distribution<std::size_t> lines(1, max_lines);
    std::uniform_int_distribution<int> coin(0, 3);
    for (std::size_t i = 0; i < n; ++i) {
        Document d = make_doc("doc-" + std::to_string(i), random_lines(rng, lines(rng), 12, 400), "eus_Latn",
                              "crawl" + std::to_string(coin(rng)));
        // a few exact score ties exercise the (collection, id) tie-break
        d.wds = coin(rng) == 0 ? 7.5 : std::round(score(rng) * 1000.0) / 1000.0;
        if (coin(rng) != 0) d.url = "https://site" + std::to_string(i % 17) + ".example.eus/p/" + std::to_string(i);
        if (coin(rng) == 1) d.register_label = "IN";
        if (coin(rng) == 2) d.extras["source_file"] = "part-" + std::to_string(i % 3);
        docs.push_back(std::move(d));
    }
    return docs;
}

/// Seed text for the n-gram classifier, keyed by language.
inline constexpr const char* kLidSeeds = R"({"eus_Latn": ["kaixo mundua etxea mendia itsasoa gaur goizean etxera joan naiz zer moduz zaude"],
                         "spa_Latn": ["hola mundo la casa el monte el mar hoy por la mañana fui a casa que tal estas"]})";

/// Mostly Basque-looking lines over a closed vocabulary, with a few Spanish
/// documents, urls on some and exact copies in a second crawl.
inline std::vector<Document> pipeline_corpus(std::size_t n, std::uint64_t seed) {
    static const std::vector<std::string> words = {"kaixo", "mundua", "etxea", "mendia", "itsasoa", "gaur",
                                                   "goizean", "etxera", "joan", "naiz", "zer", "moduz", "zaude"};
    std::mt19937_64 rng(seed);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const std::size_t lines = 2 + rng() % 8;
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t len = 3 + rng() % 20;
            for (std::size_t t = 0; t < len; ++t) text += words[rng() % words.size()] + (t + 1 < len ? " " : "");
            text += (l % 3 == 2) ? " " + std::to_string(rng() % 1000) + "\n" : "\n";
        }
        if (i % 10 == 3) text = "hola mundo la casa\nel monte el mar";
        docs.push_back(make_doc("doc" + std::to_string(i), text, "und", "crawl" + std::to_string(i % 2)));
        if (i % 4 == 0) docs.back().url = "https://eu.wikipedia.org/wiki/" + std::to_string(i);
        if (i % 7 == 0 && i > 0) {
            const std::string copy = docs.back().text;
            docs.push_back(make_doc("copy" + std::to_string(i), copy, "und", "crawl1"));
        }
    }
    return docs;
}

/// Every regular file under root except timing.json, keyed by relative path.
inline std::map<std::string, std::string> tree_bytes(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
        out[std::filesystem::relative(e.path(), root).string()] = read_bytes(e.path());
    }
    return out;
}

}  // namespace refinery::testing
