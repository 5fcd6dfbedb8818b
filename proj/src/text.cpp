#include "raglex/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "raglex/errors.hpp"

namespace raglex {

namespace {

// Decodes one UTF-8 codepoint at s[i]. Returns the codepoint and advances i,
// or returns -1 (and advances by one byte) on a malformed sequence.
std::int64_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        i += 1;
        return -1;
    }
    if (i + len > s.size()) {
        i += 1;
        return -1;
    }
    for (int k = 1; k < len; ++k) {
        const auto bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0) != 0x80) {
            i += 1;
            return -1;
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85:   // NEL
        case 0xA0:   // NBSP
        case 0x1680: // ogham space mark
        case 0x2028: // line separator
        case 0x2029: // paragraph separator
        case 0x202F: // narrow NBSP
        case 0x205F: // medium mathematical space
        case 0x3000: // ideographic space
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Format and invisible characters that carry no text content.
bool is_stripped(std::uint32_t cp) {
    if (cp < 0x20 || cp == 0x7F) return true;          // C0 + DEL (spaces handled first)
    if (cp >= 0x80 && cp <= 0x9F) return true;         // C1
    switch (cp) {
        case 0xAD:   // soft hyphen
        case 0x200B: // zero-width space
        case 0x200C: // zero-width non-joiner
        case 0x200D: // zero-width joiner
        case 0x200E: // LRM
        case 0x200F: // RLM
        case 0x202A: case 0x202B: case 0x202C: case 0x202D: case 0x202E:
        case 0x2060: // word joiner
        case 0xFEFF: // BOM / ZWNBSP
            return true;
        default:
            return false;
    }
}

} // namespace

std::string normalize_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < raw.size()) {
        const std::int64_t cp64 = decode_utf8(raw, i);
        if (cp64 < 0) continue; // drop malformed bytes
        const auto cp = static_cast<std::uint32_t>(cp64);
        if (is_unicode_space(cp)) {
            pending_space = true;
            continue;
        }
        if (is_stripped(cp)) continue;
        if (pending_space) {
            if (!out.empty()) out.push_back(' ');
            pending_space = false;
        }
        encode_utf8(cp, out);
    }
    return out;
}

std::vector<std::string> WhitespaceSegmenter::segment(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("stopword list not found: " + path);
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        const std::string word = normalize_text(line);
        if (word.empty() || word[0] == '#') continue;
        set.insert(word);
    }
    return set;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stoplist) {
    std::vector<std::string> kept;
    kept.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (!stoplist.contains(tok)) kept.push_back(tok);
    }
    return kept;
}

std::string fold_token(std::string_view token) {
    const auto is_edge_punct = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    };
    std::size_t begin = 0;
    std::size_t end = token.size();
    while (begin < end && is_edge_punct(token[begin])) ++begin;
    while (end > begin && is_edge_punct(token[end - 1])) --end;
    std::string out(token.substr(begin, end - begin));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::vector<std::string> analyze(std::string_view text, const Segmenter& segmenter,
                                 const StopwordSet& stoplist) {
    std::vector<std::string> out;
    for (const auto& raw : segmenter.segment(text)) {
        std::string tok = fold_token(raw);
        if (tok.empty() || stoplist.contains(tok)) continue;
        out.push_back(std::move(tok));
    }
    return out;
}

std::string truncate_query(const std::string& question, const Segmenter& segmenter,
                           std::size_t max_query_tokens) {
    const auto tokens = segmenter.segment(question);
    if (tokens.size() <= max_query_tokens) return question;
    std::ostringstream joined;
    for (std::size_t i = tokens.size() - max_query_tokens; i < tokens.size(); ++i) {
        if (i != tokens.size() - max_query_tokens) joined << ' ';
        joined << tokens[i];
    }
    return joined.str();
}

std::vector<std::string> decompose_query(const std::string& question,
                                         const Segmenter& segmenter,
                                         std::size_t max_query_tokens) {
    const auto tokens = segmenter.segment(question);
    if (tokens.empty()) return {};
    if (tokens.size() <= max_query_tokens) return {question};
    std::vector<std::string> windows;
    for (std::size_t start = 0; start < tokens.size(); start += max_query_tokens) {
        const std::size_t end = std::min(start + max_query_tokens, tokens.size());
        std::ostringstream joined;
        for (std::size_t i = start; i < end; ++i) {
            if (i != start) joined << ' ';
            joined << tokens[i];
        }
        windows.push_back(joined.str());
    }
    return windows;
}

} // namespace raglex
