#include "cascade/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "cascade/errors.hpp"

namespace cascade {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  std::vector<std::string> reserved;
  for (auto r : {kPad, kUnk, kCls, kSep}) {
    if (std::find(tokens.begin(), tokens.end(), r) == tokens.end()) reserved.emplace_back(r);
  }
  tokens_ = std::move(reserved);
  for (auto& t : tokens) {
    if (t.empty()) throw TokenizationError("vocabulary entries must be non-empty");
    tokens_.push_back(std::move(t));
  }
  reindex();
}

void Vocabulary::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    // first occurrence wins for duplicated lines
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
  unk_ = index_.at(std::string(kUnk));
  cls_ = index_.at(std::string(kCls));
  sep_ = index_.at(std::string(kSep));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

Vocabulary build_word_vocabulary(const std::vector<Sentence>& corpus) {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, bool> seen;
  for (const auto& s : corpus) {
    for (const auto& w : s.words) {
      if (seen.emplace(w, true).second) tokens.push_back(w);
    }
  }
  return Vocabulary(std::move(tokens));
}

namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

bool is_control(unsigned char c) { return c < 0x20 || c == 0x7f; }

bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += !is_utf8_continuation(c);
  return n;
}

std::vector<std::string> basic_pieces(const std::string& word, const TokenizerOptions& options) {
  std::string cleaned;
  for (unsigned char c : word) {
    if (is_control(c)) continue;
    cleaned.push_back(options.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c))
                                                    : static_cast<char>(c));
  }
  std::vector<std::string> pieces;
  if (!options.split_punctuation) {
    if (!cleaned.empty()) pieces.push_back(std::move(cleaned));
    return pieces;
  }
  std::string cur;
  for (unsigned char c : cleaned) {
    if (is_ascii_punct(c)) {
      if (!cur.empty()) pieces.push_back(std::move(cur));
      cur.clear();
      pieces.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  if (!cur.empty()) pieces.push_back(std::move(cur));
  return pieces;
}

}  // namespace

std::vector<std::string> wordpiece(std::string_view piece, const Vocabulary& vocab,
                                   const TokenizerOptions& options) {
  const std::string unk(Vocabulary::kUnk);
  if (static_cast<int>(utf8_length(piece)) > options.max_chars_per_word) return {unk};
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < piece.size()) {
    std::size_t end = piece.size();
    std::string match;
    while (end > start) {
      std::string candidate(piece.substr(start, end - start));
      if (start > 0) candidate = "##" + candidate;
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
      while (end > start && end < piece.size() &&
             is_utf8_continuation(static_cast<unsigned char>(piece[end])))
        --end;
    }
    if (match.empty()) return {unk};
    out.push_back(std::move(match));
    start = end;
  }
  return out;
}

TokenizedText tokenize_and_align(const Sentence& sentence, const Vocabulary& vocab,
                                 const TokenizerOptions& options) {
  if (sentence.words.empty()) throw TokenizationError("sentence has no words: '" + sentence.text + "'");
  TokenizedText tok;
  tok.words = sentence.words;
  tok.subtokens.emplace_back(Vocabulary::kCls);
  tok.ids.push_back(vocab.cls_id());
  for (std::size_t w = 0; w < sentence.words.size(); ++w) {
    const int first = static_cast<int>(tok.subtokens.size());
    for (const auto& piece : basic_pieces(sentence.words[w], options)) {
      for (auto& sub : wordpiece(piece, vocab, options)) {
        tok.ids.push_back(vocab.id(sub));
        tok.subtokens.push_back(std::move(sub));
        tok.interior_word.push_back(static_cast<int>(w));
      }
    }
    const int last = static_cast<int>(tok.subtokens.size()) - 1;
    if (last < first)
      throw TokenizationError("word " + std::to_string(w) + " ('" + sentence.words[w] +
                              "') produced no subtokens");
    tok.word_ranges.push_back({first, last});
  }
  tok.subtokens.emplace_back(Vocabulary::kSep);
  tok.ids.push_back(vocab.sep_id());
  if (options.max_length > 0 && tok.length() > options.max_length)
    throw TokenizationError("sequence of " + std::to_string(tok.length()) +
                            " subtokens exceeds the encoder limit of " +
                            std::to_string(options.max_length));
  return tok;
}

}  // namespace cascade
