#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cascade/corpus.hpp"

namespace cascade {

/// Closed subtoken vocabulary. Ids of the four reserved tokens are looked up
/// by name, so BERT-style vocab.txt files load unchanged.
class Vocabulary {
 public:
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kPad = "[PAD]";

  Vocabulary() = default;
  /// Reserved tokens missing from `tokens` are prepended.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// One subtoken per line.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }
  /// Unknown subtokens map to the reserved unknown id.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void reindex();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int unk_ = -1, cls_ = -1, sep_ = -1;
};

/// Whole-word vocabulary over every word of `corpus`, in first-seen order.
Vocabulary build_word_vocabulary(const std::vector<Sentence>& corpus);

struct TokenizerOptions {
  /// BERT basic tokenization: ASCII punctuation becomes its own piece.
  bool split_punctuation = false;
  bool lowercase = false;
  /// Longer words map to the unknown token.
  int max_chars_per_word = 100;
  /// Maximum sequence length including the two markers; 0 = unbounded.
  int max_length = 0;
};

/// Inclusive range of subtoken positions (positions count the leading
/// classification marker, so interior positions are 1..m).
struct SubtokenRange {
  int first = 0;
  int last = 0;
  bool operator==(const SubtokenRange&) const = default;
};

struct TokenizedText {
  std::vector<std::string> subtokens;   ///< [CLS], interior..., [SEP]
  std::vector<int> ids;                 ///< vocabulary ids, same length
  std::vector<SubtokenRange> word_ranges;
  std::vector<std::string> words;
  /// word index for each interior position 1..m (index 0 holds position 1)
  std::vector<int> interior_word;

  /// Number of interior subtokens.
  int m() const { return static_cast<int>(subtokens.size()) - 2; }
  int length() const { return static_cast<int>(subtokens.size()); }
};

/// Greedy longest-match-first WordPiece split of a single piece of text.
/// Returns {unknown token} when no segmentation exists.
std::vector<std::string> wordpiece(std::string_view piece, const Vocabulary& vocab,
                                   const TokenizerOptions& options = {});

TokenizedText tokenize_and_align(const Sentence& sentence, const Vocabulary& vocab,
                                 const TokenizerOptions& options = {});

}  // namespace cascade
