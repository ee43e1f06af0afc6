#include "tact/kg.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tact/error.hpp"

namespace tact {

Vocab::Vocab(std::vector<std::string> names) {
  for (auto& n : names) {
    if (contains(n)) {
      throw VocabError("duplicate vocabulary entry '" + n + "'");
    }
    intern(n);
  }
}

std::uint32_t Vocab::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) {
    return it->second;
  }
  const auto id = size();
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::uint32_t Vocab::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  return it == ids_.end() ? size() : it->second;
}

const std::string& Vocab::name(std::uint32_t id) const {
  if (id >= size()) {
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range (size " +
                     std::to_string(size()) + ")");
  }
  return names_[id];
}

std::vector<RawTriple> parse_triples(std::string_view text, std::string_view source) {
  std::vector<RawTriple> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    std::string_view fields[3];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      auto field = line.substr(start, tab == std::string_view::npos ? line.size() - start : tab - start);
      if (count < 3) {
        fields[count] = field;
      }
      ++count;
      if (tab == std::string_view::npos) {
        break;
      }
      start = tab + 1;
    }
    if (count != 3) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(count));
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  }
  return out;
}

std::vector<RawTriple> load_triples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open triple file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("error reading " + path.string());
  }
  return parse_triples(buf.str(), path.string());
}

void write_triples(const std::filesystem::path& path, std::span<const RawTriple> triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  for (const auto& t : triples) {
    out << t.head << '\t' << t.rel << '\t' << t.tail << '\n';
  }
  if (!out) {
    throw IoError("error writing " + path.string());
  }
}

KnowledgeGraph KnowledgeGraph::build(std::span<const RawTriple> raw, const Vocab* frozen_relations,
                                     std::span<const std::string> extra_entities) {
  KnowledgeGraph kg;
  if (frozen_relations != nullptr) {
    kg.relations_ = *frozen_relations;
  }
  kg.triples_.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    RelationId rel;
    if (frozen_relations != nullptr) {
      rel = kg.relations_.find(r.rel);
      if (rel == kg.relations_.size()) {
        throw VocabError("triple " + std::to_string(i + 1) + ": relation '" + r.rel +
                         "' is not in the frozen relation vocabulary");
      }
    } else {
      rel = kg.relations_.intern(r.rel);
    }
    const auto head = kg.entities_.intern(r.head);
    const auto tail = kg.entities_.intern(r.tail);
    kg.triples_.push_back({head, rel, tail});
  }
  for (const auto& e : extra_entities) {
    kg.entities_.intern(e);
  }

  kg.by_head_.resize(kg.entities_.size());
  kg.by_tail_.resize(kg.entities_.size());
  kg.by_rel_.resize(kg.relations_.size());
  for (EdgeId id = 0; id < kg.triples_.size(); ++id) {
    const auto& t = kg.triples_[id];
    kg.by_head_[t.head].push_back(id);
    kg.by_tail_[t.tail].push_back(id);
    kg.by_rel_[t.rel].push_back(id);
    if (t.reflexive()) {
      ++kg.reflexive_count_;
    }
  }
  return kg;
}

void KnowledgeGraph::check_node(EntityId node) const {
  if (node >= num_entities()) {
    throw IndexError("entity id " + std::to_string(node) + " out of range (|E| = " +
                     std::to_string(num_entities()) + ")");
  }
}

std::span<const EdgeId> KnowledgeGraph::edges_with_head(EntityId node) const {
  check_node(node);
  return by_head_[node];
}

std::span<const EdgeId> KnowledgeGraph::edges_with_tail(EntityId node) const {
  check_node(node);
  return by_tail_[node];
}

std::span<const EdgeId> KnowledgeGraph::edges_with_relation(RelationId rel) const {
  if (rel >= num_relations()) {
    throw IndexError("relation id " + std::to_string(rel) + " out of range (|R| = " +
                     std::to_string(num_relations()) + ")");
  }
  return by_rel_[rel];
}

std::vector<EdgeId> KnowledgeGraph::incident_edges(EntityId node) const {
  check_node(node);
  const auto& h = by_head_[node];
  const auto& t = by_tail_[node];
  // Both buckets are already sorted since edges are appended in id order.
  std::vector<EdgeId> out;
  out.reserve(h.size() + t.size());
  std::set_union(h.begin(), h.end(), t.begin(), t.end(), std::back_inserter(out));
  return out;
}

std::vector<EdgeId> KnowledgeGraph::find_edges(const Triple& t) const {
  std::vector<EdgeId> out;
  if (t.head >= num_entities()) {
    return out;
  }
  for (auto id : by_head_[t.head]) {
    if (triples_[id] == t) {
      out.push_back(id);
    }
  }
  return out;
}

bool KnowledgeGraph::contains(const Triple& t) const {
  if (t.head >= num_entities()) {
    return false;
  }
  return std::any_of(by_head_[t.head].begin(), by_head_[t.head].end(),
                     [&](EdgeId id) { return triples_[id] == t; });
}

Triple KnowledgeGraph::resolve(const RawTriple& raw) const {
  const auto h = entities_.find(raw.head);
  const auto r = relations_.find(raw.rel);
  const auto t = entities_.find(raw.tail);
  if (h == entities_.size()) {
    throw VocabError("unknown entity '" + raw.head + "'");
  }
  if (t == entities_.size()) {
    throw VocabError("unknown entity '" + raw.tail + "'");
  }
  if (r == relations_.size()) {
    throw VocabError("unknown relation '" + raw.rel + "'");
  }
  return {h, r, t};
}

RawTriple KnowledgeGraph::to_raw(const Triple& t) const {
  return {entities_.name(t.head), relations_.name(t.rel), entities_.name(t.tail)};
}

std::vector<RawTriple> KnowledgeGraph::dump() const {
  std::vector<RawTriple> out;
  out.reserve(triples_.size());
  for (const auto& t : triples_) {
    out.push_back(to_raw(t));
  }
  return out;
}

DatasetFiles load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("dataset directory " + dir.string() + " does not exist");
  }
  DatasetFiles files;
  files.train = load_triples(dir / "train.txt");
  if (std::filesystem::exists(dir / "valid.txt")) {
    files.valid = load_triples(dir / "valid.txt");
  }
  files.test = load_triples(dir / "test.txt");
  return files;
}

}  // namespace tact
