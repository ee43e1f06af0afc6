#include "tact/params.hpp"

#include <cmath>

#include "tact/error.hpp"

namespace tact {

std::string_view variant_name(RcnVariant v) {
  switch (v) {
    case RcnVariant::Full:
      return "full";
    case RcnVariant::NoRA:
      return "no-ra";
    case RcnVariant::NoRC:
      return "no-rc";
  }
  return "full";
}

RcnVariant parse_variant(std::string_view name) {
  if (name == "full") {
    return RcnVariant::Full;
  }
  if (name == "no-ra") {
    return RcnVariant::NoRA;
  }
  if (name == "no-rc") {
    return RcnVariant::NoRC;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, no-ra or no-rc)");
}

ScoreParts ScoreParts::parse(std::string_view spec) {
  ScoreParts parts{false, false, false};
  for (char c : spec) {
    bool* flag = c == 'r' ? &parts.use_r : c == 'g' ? &parts.use_g : c == 'n' ? &parts.use_n : nullptr;
    if (flag == nullptr) {
      throw ConfigError("invalid score part '" + std::string(1, c) + "' in '" + std::string(spec) +
                        "' (expected letters from n, g, r)");
    }
    if (*flag) {
      throw ConfigError("score part '" + std::string(1, c) + "' repeated in '" + std::string(spec) + "'");
    }
    *flag = true;
  }
  if (!parts.use_r && !parts.use_g && !parts.use_n) {
    throw ConfigError("at least one score part is required");
  }
  return parts;
}

std::string ScoreParts::str() const {
  std::string s;
  if (use_n) s += 'n';
  if (use_g) s += 'g';
  if (use_r) s += 'r';
  return s;
}

void ModelConfig::validate() const {
  if (dim < 2) {
    throw ConfigError("embedding dimension must be >= 2");
  }
  if (layers < 1) {
    throw ConfigError("at least one graph layer is required");
  }
  if (hops < 1) {
    throw ConfigError("hops must be >= 1");
  }
  if (!parts.use_r && !parts.use_g && !parts.use_n) {
    throw ConfigError("at least one score part is required");
  }
}

ModelParams ModelParams::shaped(const ModelConfig& config, std::size_t num_relations) {
  config.validate();
  const auto d = config.dim;
  ModelParams p;
  p.rcn.relations = Matrix(num_relations, d);
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    p.rcn.pattern_weights[k] = Matrix(d, d);
    p.rcn.attention[k] = Matrix(d, 1);
  }
  p.rcn.fusion = Matrix(2 * d, d);
  p.gsn.resize(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const auto in = l == 0 ? 2 * d : d;
    p.gsn[l].relation_weights.assign(2 * num_relations, Matrix(in, d));
    p.gsn[l].self_weight = Matrix(in, d);
  }
  p.score = Matrix(config.parts.width(d), 1);
  return p;
}

namespace {

template <typename Self, typename Ptr>
std::vector<std::pair<std::string, Ptr>> collect(Self& self) {
  std::vector<std::pair<std::string, Ptr>> out;
  out.emplace_back("R", &self.rcn.relations);
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    out.emplace_back("W_p" + std::to_string(k), &self.rcn.pattern_weights[k]);
  }
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    out.emplace_back("a_p" + std::to_string(k), &self.rcn.attention[k]);
  }
  out.emplace_back("H", &self.rcn.fusion);
  for (std::size_t l = 0; l < self.gsn.size(); ++l) {
    const auto prefix = "gsn.l" + std::to_string(l) + ".";
    for (std::size_t r = 0; r < self.gsn[l].relation_weights.size(); ++r) {
      out.emplace_back(prefix + "rel" + std::to_string(r), &self.gsn[l].relation_weights[r]);
    }
    out.emplace_back(prefix + "self", &self.gsn[l].self_weight);
  }
  out.emplace_back("W_S", &self.score);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::named() { return collect<ModelParams, Matrix*>(*this); }

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named() const {
  return collect<const ModelParams, const Matrix*>(*this);
}

void initialize(ModelParams& params, std::size_t dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& [name, m] : params.named()) {
    for (auto& x : m->data) {
      x = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace tact
