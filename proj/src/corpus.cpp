#include "cascade/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade {

using nlohmann::json;

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > b) words.emplace_back(text.substr(b, i - b));
  }
  return words;
}

Sentence make_sentence(std::string text, std::vector<Triple> triples) {
  Sentence s;
  s.words = split_words(text);
  s.text = std::move(text);
  s.triples = std::move(triples);
  return s;
}

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::optional<WordSpan> read_span(const json& rec, const char* key, const std::string& at) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
      !(*it)[1].is_number_integer())
    throw ParseError(at + "'" + key + "' must be a [start, end] integer pair");
  return WordSpan{(*it)[0].get<int>(), (*it)[1].get<int>()};
}

std::string read_string(const json& j, const std::string& what, const std::string& at) {
  if (!j.is_string()) throw ParseError(at + what + " must be a string");
  auto s = j.get<std::string>();
  if (s.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ParseError(at + what + " must be non-empty");
  return s;
}

Sentence parse_record(const json& rec, RelationSchema& schema, const ParseOptions& options,
                      const std::string& at) {
  if (!rec.is_object()) throw ParseError(at + "record must be a JSON object");
  auto text_it = rec.find("text");
  if (text_it == rec.end() || !text_it->is_string()) throw ParseError(at + "missing string field 'text'");
  Sentence s = make_sentence(text_it->get<std::string>());

  const bool has_canonical = rec.contains("triples");
  const bool has_legacy = rec.contains("triple_list");
  CorpusFormat format = options.format;
  if (format == CorpusFormat::automatic) {
    format = has_legacy && !has_canonical ? CorpusFormat::legacy_list : CorpusFormat::canonical;
  }

  auto register_relation = [&](const std::string& label) {
    if (options.strict) {
      if (!schema.find(label)) throw SchemaError(at + "relation '" + label + "' is not in the schema");
    } else {
      schema.add(label);
    }
  };

  if (format == CorpusFormat::canonical) {
    auto it = rec.find("triples");
    if (it == rec.end()) throw ParseError(at + "missing field 'triples'");
    if (!it->is_array()) throw ParseError(at + "'triples' must be an array");
    for (const auto& t : *it) {
      if (!t.is_object() || !t.contains("head") || !t.contains("relation") || !t.contains("tail"))
        throw ParseError(at + "triple must be an object with head, relation and tail");
      Triple triple;
      triple.head.text = read_string(t["head"], "head", at);
      triple.relation = read_string(t["relation"], "relation", at);
      triple.tail.text = read_string(t["tail"], "tail", at);
      triple.head.span = read_span(t, "head_span", at);
      triple.tail.span = read_span(t, "tail_span", at);
      if (auto sc = t.find("score"); sc != t.end() && !sc->is_null()) {
        if (!sc->is_number()) throw ParseError(at + "'score' must be a number");
        triple.score = sc->get<double>();
      }
      s.triples.push_back(std::move(triple));
    }
  } else {
    auto it = rec.find("triple_list");
    if (it == rec.end()) throw ParseError(at + "missing field 'triple_list'");
    if (!it->is_array()) throw ParseError(at + "'triple_list' must be an array");
    for (const auto& t : *it) {
      if (!t.is_array() || t.size() != 3) throw ParseError(at + "triple_list entries must be [h, r, t]");
      Triple triple;
      triple.head.text = read_string(t[0], "head", at);
      triple.relation = read_string(t[1], "relation", at);
      triple.tail.text = read_string(t[2], "tail", at);
      s.triples.push_back(std::move(triple));
    }
  }

  const int n = static_cast<int>(s.words.size());
  for (const auto& t : s.triples) {
    for (const auto* e : {&t.head, &t.tail}) {
      if (e->span && (e->span->start < 0 || e->span->start > e->span->end || e->span->end >= n))
        throw ParseError(at + "entity span out of range for '" + e->text + "'");
    }
    register_relation(t.relation);
  }
  return s;
}

}  // namespace

std::vector<Sentence> parse_corpus(std::istream& in, RelationSchema& schema,
                                   const ParseOptions& options, const std::string& source_name) {
  std::vector<Sentence> corpus;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return corpus;

  if (content[first] == '[') {
    json arr;
    try {
      arr = json::parse(content);
    } catch (const json::exception& e) {
      throw ParseError(source_name + ": malformed JSON array: " + e.what());
    }
    std::size_t idx = 0;
    for (const auto& rec : arr) {
      corpus.push_back(parse_record(rec, schema, options,
                                    source_name + ": record " + std::to_string(idx++) + ": "));
    }
    return corpus;
  }

  std::istringstream lines(std::move(content));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where(source_name, lineno) + "malformed record: " + e.what());
    }
    corpus.push_back(parse_record(rec, schema, options, where(source_name, lineno)));
  }
  return corpus;
}

std::vector<Sentence> parse_corpus(const std::filesystem::path& path, RelationSchema& schema,
                                   const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return parse_corpus(in, schema, options, path.string());
}

std::string serialize_sentence(const Sentence& sentence) {
  json rec;
  rec["text"] = sentence.text;
  rec["triples"] = json::array();
  for (const auto& t : sentence.triples) {
    json jt;
    jt["head"] = t.head.text;
    jt["relation"] = t.relation;
    jt["tail"] = t.tail.text;
    if (t.head.span) jt["head_span"] = {t.head.span->start, t.head.span->end};
    if (t.tail.span) jt["tail_span"] = {t.tail.span->start, t.tail.span->end};
    if (t.score) jt["score"] = *t.score;
    rec["triples"].push_back(std::move(jt));
  }
  return rec.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_corpus(std::ostream& out, const std::vector<Sentence>& corpus) {
  for (const auto& s : corpus) out << serialize_sentence(s) << '\n';
}

void write_corpus(const std::filesystem::path& path, const std::vector<Sentence>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cascade
