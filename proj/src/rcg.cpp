#include "tact/rcg.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "tact/error.hpp"

namespace tact {

namespace {

constexpr std::array<std::string_view, kPatternCount> kNames = {"H-T", "T-T", "H-H", "T-H", "PARA", "LOOP", "NC"};

std::size_t index_of(Pattern p) {
  if (p == Pattern::NC) {
    throw ContractError("NC is not a stored pattern");
  }
  return static_cast<std::size_t>(p);
}

enum class Role : std::uint8_t { Head, Tail };

// Single shared endpoint: the pattern follows from the role each edge plays there.
Pattern pattern_for_roles(Role neighbor, Role target) {
  if (neighbor == Role::Head) {
    return target == Role::Head ? Pattern::HH : Pattern::HT;
  }
  return target == Role::Head ? Pattern::TH : Pattern::TT;
}

}  // namespace

std::string_view pattern_name(Pattern p) { return kNames[static_cast<std::size_t>(p)]; }

std::optional<Pattern> parse_pattern(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) {
      return static_cast<Pattern>(i);
    }
  }
  return std::nullopt;
}

Pattern classify_pattern(EdgeEnds n, EdgeEnds t) {
  if (n.head == n.tail || t.head == t.tail) {
    throw ContractError("classify_pattern: reflexive edge");
  }
  if (n.head == t.head && n.tail == t.tail) {
    return Pattern::Para;
  }
  if (n.head == t.tail && n.tail == t.head) {
    return Pattern::Loop;
  }
  if (n.head == t.head) {
    return Pattern::HH;
  }
  if (n.head == t.tail) {
    return Pattern::HT;
  }
  if (n.tail == t.head) {
    return Pattern::TH;
  }
  if (n.tail == t.tail) {
    return Pattern::TT;
  }
  return Pattern::NC;
}

Pattern classify_pattern(const KnowledgeGraph& kg, EdgeId neighbor, EdgeId target) {
  if (neighbor == target) {
    throw ContractError("classify_pattern: an edge cannot be paired with itself");
  }
  const auto& n = kg.edge(neighbor);
  const auto& t = kg.edge(target);
  return classify_pattern({n.head, n.tail}, {t.head, t.tail});
}

const std::vector<RelationId>& RelationalCorrelationGraph::neighbors(RelationId target, Pattern p) const {
  if (target >= sets_.size()) {
    throw IndexError("relation id " + std::to_string(target) + " out of range");
  }
  return sets_[target][index_of(p)];
}

bool RelationalCorrelationGraph::has(RelationId target, Pattern p, RelationId neighbor) const {
  const auto& s = neighbors(target, p);
  return std::binary_search(s.begin(), s.end(), neighbor);
}

std::vector<RelationId> RelationalCorrelationGraph::all_neighbors(RelationId target) const {
  std::vector<RelationId> out;
  for (auto p : kConnected) {
    const auto& s = neighbors(target, p);
    out.insert(out.end(), s.begin(), s.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t RelationalCorrelationGraph::size() const {
  std::size_t n = 0;
  for (const auto& sets : sets_) {
    for (const auto& s : sets) {
      n += s.size();
    }
  }
  return n;
}

std::array<std::size_t, kConnectedPatterns> RelationalCorrelationGraph::histogram() const {
  std::array<std::size_t, kConnectedPatterns> h{};
  for (const auto& sets : sets_) {
    for (std::size_t p = 0; p < kConnectedPatterns; ++p) {
      h[p] += sets[p].size();
    }
  }
  return h;
}

bool RelationalCorrelationGraph::insert(RelationId target, Pattern p, RelationId neighbor) {
  if (target >= sets_.size() || neighbor >= sets_.size()) {
    throw IndexError("relation id out of range in RCG insert");
  }
  auto& s = sets_[target][index_of(p)];
  auto it = std::lower_bound(s.begin(), s.end(), neighbor);
  if (it != s.end() && *it == neighbor) {
    return false;
  }
  s.insert(it, neighbor);
  return true;
}

RelationalCorrelationGraph build_rcg(const KnowledgeGraph& kg) {
  const std::size_t nr = kg.num_relations();
  // Dense flag cube [target][pattern][neighbor], converted to sorted sets at the end.
  std::vector<std::uint8_t> flags(nr * kConnectedPatterns * nr, 0);
  auto mark = [&](RelationId target, Pattern p, RelationId neighbor) {
    flags[(target * kConnectedPatterns + static_cast<std::size_t>(p)) * nr + neighbor] = 1;
  };

  // One shared endpoint. At entity x, group incident edges by (role at x,
  // relation) and remember the distinct far endpoints of each group. Two
  // groups are connected through x unless every usable pair of edges has the
  // same far endpoint, in which case the pair shares both ends (PARA/LOOP).
  struct Group {
    Role role;
    RelationId rel;
    EntityId far_first;
    bool many_far;  // at least two distinct far endpoints
  };
  std::vector<Group> groups;
  for (EntityId x = 0; x < kg.num_entities(); ++x) {
    groups.clear();
    auto add = [&](Role role, RelationId rel, EntityId far) {
      for (auto& g : groups) {
        if (g.role == role && g.rel == rel) {
          if (g.far_first != far) {
            g.many_far = true;
          }
          return;
        }
      }
      groups.push_back({role, rel, far, false});
    };
    for (auto id : kg.edges_with_head(x)) {
      const auto& t = kg.edge(id);
      if (!t.reflexive()) {
        add(Role::Head, t.rel, t.tail);
      }
    }
    for (auto id : kg.edges_with_tail(x)) {
      const auto& t = kg.edge(id);
      if (!t.reflexive()) {
        add(Role::Tail, t.rel, t.head);
      }
    }
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = 0; b < groups.size(); ++b) {
        const auto& n = groups[a];
        const auto& t = groups[b];
        bool connected;
        if (a == b) {
          connected = n.many_far;
        } else {
          connected = n.many_far || t.many_far || n.far_first != t.far_first;
        }
        if (connected) {
          mark(t.rel, pattern_for_roles(n.role, t.role), n.rel);
        }
      }
    }
  }

  // Two shared endpoints. Bucket edges by their unordered endpoint pair.
  struct Keyed {
    EntityId lo, hi;
    bool forward;  // head == lo
    RelationId rel;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(kg.num_edges());
  std::size_t reflexive = 0;
  for (const auto& t : kg.triples()) {
    if (t.reflexive()) {
      ++reflexive;
      continue;
    }
    const bool forward = t.head < t.tail;
    keyed.push_back({forward ? t.head : t.tail, forward ? t.tail : t.head, forward, t.rel});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.lo, a.hi, a.forward, a.rel) < std::tie(b.lo, b.hi, b.forward, b.rel);
  });
  for (std::size_t begin = 0; begin < keyed.size();) {
    std::size_t end = begin;
    while (end < keyed.size() && keyed[end].lo == keyed[begin].lo && keyed[end].hi == keyed[begin].hi) {
      ++end;
    }
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = begin; j < end; ++j) {
        if (i == j) {
          continue;
        }
        mark(keyed[j].rel, keyed[i].forward == keyed[j].forward ? Pattern::Para : Pattern::Loop, keyed[i].rel);
      }
    }
    begin = end;
  }

  RelationalCorrelationGraph rcg(nr);
  for (RelationId t = 0; t < nr; ++t) {
    for (auto p : kConnected) {
      for (RelationId n = 0; n < nr; ++n) {
        if (flags[(t * kConnectedPatterns + static_cast<std::size_t>(p)) * nr + n]) {
          rcg.insert(t, p, n);
        }
      }
    }
  }
  rcg.set_skipped_reflexive(reflexive);
  return rcg;
}

void export_rcg(const RelationalCorrelationGraph& rcg, const std::filesystem::path& path, const Vocab* relations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  auto label = [&](RelationId r) { return relations != nullptr ? relations->name(r) : std::to_string(r); };
  for (RelationId t = 0; t < rcg.relation_count(); ++t) {
    for (auto p : kConnected) {
      for (auto n : rcg.neighbors(t, p)) {
        out << label(t) << '\t' << pattern_name(p) << '\t' << label(n) << '\n';
      }
    }
  }
  if (!out) {
    throw IoError("error writing " + path.string());
  }
}

RelationalCorrelationGraph read_rcg(const std::filesystem::path& path, const Vocab& relations) {
  RelationalCorrelationGraph rcg(relations.size());
  for (const auto& row : load_triples(path)) {
    const auto p = parse_pattern(row.rel);
    if (!p || *p == Pattern::NC) {
      throw ParseError(path.string() + ": unknown pattern '" + row.rel + "'");
    }
    const auto t = relations.find(row.head);
    const auto n = relations.find(row.tail);
    if (t == relations.size() || n == relations.size()) {
      throw VocabError(path.string() + ": unknown relation in row " + row.head + " " + row.tail);
    }
    rcg.insert(t, *p, n);
  }
  return rcg;
}

void export_pattern_histogram(const RelationalCorrelationGraph& rcg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  const auto h = rcg.histogram();
  for (std::size_t p = 0; p < kConnectedPatterns; ++p) {
    out << pattern_name(kConnected[p]) << '\t' << h[p] << '\n';
  }
}

}  // namespace tact
