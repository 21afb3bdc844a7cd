#include "badx/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "badx/error.hpp"
#include "badx/hash.hpp"

namespace badx {

const char* to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::Ceat: return "CEAT";
    case MetricKind::IWeat: return "I-WEAT";
    case MetricKind::ISeat: return "I-SEAT";
  }
  return "unknown";
}

MetricKind metric_from_string(std::string_view s) {
  if (s == "CEAT" || s == "ceat") return MetricKind::Ceat;
  if (s == "I-WEAT" || s == "i-weat" || s == "iweat") return MetricKind::IWeat;
  if (s == "I-SEAT" || s == "i-seat" || s == "iseat") return MetricKind::ISeat;
  throw Error(ErrorKind::Config,
              "unknown metric \"" + std::string(s) +
                  "\" (expected CEAT, I-WEAT or I-SEAT)");
}

const char* to_string(NormalizationMode mode) {
  return mode == NormalizationMode::Raw ? "raw" : "half";
}

NormalizationMode normalization_from_string(std::string_view s) {
  if (s == "raw") return NormalizationMode::Raw;
  if (s == "half") return NormalizationMode::Half;
  throw Error(ErrorKind::Config, "unknown normalization \"" + std::string(s) +
                                     "\" (expected raw or half)");
}

double normalize_score(double d, NormalizationMode mode) {
  return mode == NormalizationMode::Half ? d / 2.0 : d;
}

const char* to_string(ClassBinding binding) {
  return binding == ClassBinding::AllClasses ? "all-classes" : "per-prompt";
}

ClassBinding class_binding_from_string(std::string_view s) {
  if (s == "all-classes") return ClassBinding::AllClasses;
  if (s == "per-prompt") return ClassBinding::PerPrompt;
  throw Error(ErrorKind::Config,
              "unknown class binding \"" + std::string(s) +
                  "\" (expected all-classes or per-prompt)");
}

double assoc_s(const Vector& w, const std::vector<Vector>& a,
               const std::vector<Vector>& b) {
  if (a.empty() || b.empty())
    throw Error(ErrorKind::EmptySet,
                "differential association needs non-empty attribute sets");
  double mean_a = 0.0;
  for (const auto& v : a) mean_a += cosine(w, v);
  mean_a /= static_cast<double>(a.size());
  double mean_b = 0.0;
  for (const auto& v : b) mean_b += cosine(w, v);
  mean_b /= static_cast<double>(b.size());
  return mean_a - mean_b;
}

namespace {

void check_sets(const StimulusSets& sets) {
  if (sets.x.empty() || sets.y.empty() || sets.a.empty() || sets.b.empty())
    throw Error(ErrorKind::EmptySet,
                "all four stimulus sets must be non-empty");
  std::size_t dim = sets.x.front().size();
  for (const auto* side : {&sets.x, &sets.y, &sets.a, &sets.b})
    for (const auto& v : *side)
      if (v.size() != dim)
        throw Error(ErrorKind::DimMismatch,
                    "stimulus vectors do not share one dimension");
}

// s(w,A,B) for every pooled target, X first then Y.
std::vector<double> pooled_assoc(const StimulusSets& sets) {
  std::vector<double> s;
  s.reserve(sets.x.size() + sets.y.size());
  for (const auto& w : sets.x) s.push_back(assoc_s(w, sets.a, sets.b));
  for (const auto& w : sets.y) s.push_back(assoc_s(w, sets.a, sets.b));
  return s;
}

double mean_of(const double* begin, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += begin[i];
  return acc / static_cast<double>(n);
}

}  // namespace

EffectSize effect_size(const StimulusSets& sets) {
  check_sets(sets);
  std::vector<double> s = pooled_assoc(sets);
  std::size_t n_x = sets.x.size();
  std::size_t n_y = sets.y.size();

  double mean_x = mean_of(s.data(), n_x);
  double mean_y = mean_of(s.data() + n_x, n_y);
  double mean_all = mean_of(s.data(), s.size());

  double ss = 0.0;
  for (double v : s) ss += (v - mean_all) * (v - mean_all);
  double sigma = std::sqrt(ss / static_cast<double>(s.size()));
  if (sigma < 1e-12)
    throw Error(ErrorKind::DegenerateSpread,
                "association values are all identical; effect size undefined "
                "(check the class lexicons)");

  EffectSize out;
  out.d = (mean_x - mean_y) / sigma;
  out.n_x = static_cast<int>(n_x);
  out.n_y = static_cast<int>(n_y);
  double n = static_cast<double>(n_x + n_y);
  out.var = n / (static_cast<double>(n_x) * static_cast<double>(n_y)) +
            out.d * out.d / (2.0 * n);
  return out;
}

namespace {

constexpr std::uint64_t kExactLimit = 184756;  // C(20,10)

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // n-k+i <= 2*184756 in every case we accept, so this cannot overflow.
    result = result * (n - k + i) / i;
    if (result > kExactLimit * 16) return result;  // caller only compares
  }
  return result;
}

double mean_subset(const std::vector<double>& s,
                   const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (std::size_t i : idx) acc += s[i];
  return acc / static_cast<double>(idx.size());
}

}  // namespace

double permutation_pvalue(const StimulusSets& sets,
                          const PermutationMode& mode) {
  check_sets(sets);
  std::vector<double> s = pooled_assoc(sets);
  std::size_t n_x = sets.x.size();
  std::size_t n = s.size();

  double total = std::accumulate(s.begin(), s.end(), 0.0);
  double observed = mean_of(s.data(), n_x) - mean_of(s.data() + n_x, n - n_x);
  const double eps = 1e-12;

  // The statistic for a relabeling is determined by the X-side sum:
  // T = sum_X/n_x - (total - sum_X)/n_y.
  auto statistic = [&](double sum_x) {
    return sum_x / static_cast<double>(n_x) -
           (total - sum_x) / static_cast<double>(n - n_x);
  };

  if (mode.is_exact) {
    if (binomial(n, n_x) > kExactLimit)
      throw Error(ErrorKind::CombinatorialLimit,
                  "exact permutation test limited to C(n, |X|) <= 184756; "
                  "use sampled mode");
    std::vector<std::size_t> idx(n_x);
    for (std::size_t i = 0; i < n_x; ++i) idx[i] = i;
    std::uint64_t hits = 0, count = 0;
    for (;;) {
      ++count;
      double sum_x = 0.0;
      for (std::size_t i : idx) sum_x += s[i];
      if (statistic(sum_x) >= observed - eps) ++hits;
      // Next combination in lexicographic order.
      std::size_t pos = n_x;
      while (pos > 0 && idx[pos - 1] == n - n_x + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < n_x; ++i) idx[i] = idx[i - 1] + 1;
    }
    return static_cast<double>(hits) / static_cast<double>(count);
  }

  if (mode.n_samples < 1)
    throw Error(ErrorKind::Config,
                "sampled permutation mode needs n_samples >= 1");
  SplitMix64 rng(mode.seed);
  std::vector<std::size_t> pool(n);
  std::uint64_t hits = 0;
  for (int trial = 0; trial < mode.n_samples; ++trial) {
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    // Partial Fisher-Yates: the first n_x entries become the X side.
    for (std::size_t i = 0; i < n_x; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    double sum_x = 0.0;
    for (std::size_t i = 0; i < n_x; ++i) sum_x += s[pool[i]];
    if (statistic(sum_x) >= observed - eps) ++hits;
  }
  // Identity relabeling counted explicitly so p is never 0.
  return static_cast<double>(1 + hits) /
         static_cast<double>(1 + mode.n_samples);
}

std::vector<LexiconMention> sample_contexts(std::string_view text,
                                            const IdentityClass& cls,
                                            int max_n, std::uint64_t seed) {
  if (max_n < 1)
    throw Error(ErrorKind::Config, "max_n must be >= 1");
  std::vector<LexiconMention> mentions = find_lexicon_mentions(text, cls);
  if (mentions.size() <= static_cast<std::size_t>(max_n)) return mentions;

  std::vector<std::size_t> idx(mentions.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(max_n); ++i) {
    std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(max_n));
  std::sort(idx.begin(), idx.end());  // back to document order

  std::vector<LexiconMention> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(mentions[i]);
  return out;
}

CombinedEffect ceat_combine(const std::vector<EffectSize>& effects) {
  if (effects.empty())
    throw Error(ErrorKind::EmptyInput, "nothing to combine");

  CombinedEffect out;
  out.k = static_cast<int>(effects.size());

  for (const auto& e : effects)
    if (!(e.var > 0.0))
      throw Error(ErrorKind::DegenerateData,
                  "effect variance must be positive to combine");

  if (effects.size() == 1) {
    const auto& e = effects.front();
    out.d_combined = e.d;
    out.tau2 = 0.0;
    double se = std::sqrt(e.var);
    out.ci_low = e.d - 1.96 * se;
    out.ci_high = e.d + 1.96 * se;
    return out;
  }

  // Anchoring sums at d0 keeps "k identical effects" exact: every delta is
  // literally zero, so Q = 0 and d_combined = d0 with no rounding residue.
  const double d0 = effects.front().d;
  double sum_w = 0.0, sum_w2 = 0.0, sum_w_delta = 0.0;
  for (const auto& e : effects) {
    double w = 1.0 / e.var;
    sum_w += w;
    sum_w2 += w * w;
    sum_w_delta += w * (e.d - d0);
  }
  double d_fixed = d0 + sum_w_delta / sum_w;

  double q = 0.0;
  for (const auto& e : effects) {
    double w = 1.0 / e.var;
    q += w * (e.d - d_fixed) * (e.d - d_fixed);
  }
  double denom = sum_w - sum_w2 / sum_w;
  double k = static_cast<double>(effects.size());
  out.tau2 = denom > 0.0 ? std::max(0.0, (q - (k - 1.0)) / denom) : 0.0;

  double sum_ws = 0.0, sum_ws_delta = 0.0;
  for (const auto& e : effects) {
    double w = 1.0 / (e.var + out.tau2);
    sum_ws += w;
    sum_ws_delta += w * (e.d - d0);
  }
  out.d_combined = d0 + sum_ws_delta / sum_ws;
  double se = std::sqrt(1.0 / sum_ws);
  out.ci_low = out.d_combined - 1.96 * se;
  out.ci_high = out.d_combined + 1.96 * se;
  return out;
}

// ---------------------------------------------------------------------------
// Per-response scoring.

namespace {

std::string instantiate_template(const std::string& tpl,
                                 const std::string& term) {
  std::string out = tpl;
  std::size_t pos;
  while ((pos = out.find("{term}")) != std::string::npos)
    out.replace(pos, 6, term);
  return out;
}

std::vector<Vector> template_embeddings(const IdentityClass& cls,
                                        const std::vector<std::string>& terms,
                                        EmbeddingProvider& provider) {
  std::vector<Vector> out;
  for (const auto& tpl : cls.attribute_templates)
    for (const auto& term : terms)
      out.push_back(provider.embed_text(instantiate_template(tpl, term)));
  return out;
}

EmbeddingProvider& require_provider(
    const std::shared_ptr<EmbeddingProvider>& p, MetricKind metric,
    const char* role) {
  if (!p)
    throw Error(ErrorKind::Config, std::string(to_string(metric)) +
                                       " needs a " + role +
                                       " embedding provider");
  return *p;
}

const std::vector<std::string>& side_terms(const IdentityClass& cls,
                                           LexiconSide side) {
  switch (side) {
    case LexiconSide::Targets1: return cls.targets_1;
    case LexiconSide::Targets2: return cls.targets_2;
    case LexiconSide::Attributes1: return cls.attributes_1;
    case LexiconSide::Attributes2: return cls.attributes_2;
  }
  return cls.targets_1;
}

void require_side(const std::vector<Vector>& side, const char* name,
                  const char* how) {
  if (side.empty())
    throw Error(ErrorKind::UnresolvableLexicon,
                std::string(name) + " resolves to no vectors " + how);
}

double score_iweat(const std::string& response, const IdentityClass& cls,
                   EmbeddingProvider& provider) {
  // Occurrences per (side, term) re-weight the static test.
  std::map<std::pair<LexiconSide, std::string>, int> counts;
  for (const auto& m : find_lexicon_mentions(response, cls))
    ++counts[{m.side, m.term}];

  StimulusSets sets;
  const std::pair<LexiconSide, std::vector<Vector>*> sides[] = {
      {LexiconSide::Targets1, &sets.x},
      {LexiconSide::Targets2, &sets.y},
      {LexiconSide::Attributes1, &sets.a},
      {LexiconSide::Attributes2, &sets.b},
  };
  for (const auto& [side, dest] : sides) {
    for (const auto& term : side_terms(cls, side)) {
      auto vec = provider.try_embed_term(term);
      if (!vec) continue;  // out of vocabulary: skipped by contract
      int copies = 1;
      if (auto it = counts.find({side, term}); it != counts.end())
        copies += it->second;
      for (int i = 0; i < copies; ++i) dest->push_back(*vec);
    }
    require_side(*dest, to_string(side), "under the word provider");
  }
  return -effect_size(sets).d;
}

double score_ceat(const std::string& response, const IdentityClass& cls,
                  EmbeddingProvider& provider, const ScoringOptions& options) {
  std::vector<LexiconMention> mentions = sample_contexts(
      response, cls, options.ceat_max_windows, options.seed);

  // Lazily built template fallbacks, shared across windows.
  std::vector<std::vector<Vector>> fallback(4);
  auto fallback_for = [&](LexiconSide side) -> const std::vector<Vector>& {
    auto i = static_cast<std::size_t>(side);
    if (fallback[i].empty())
      fallback[i] = template_embeddings(cls, side_terms(cls, side), provider);
    require_side(fallback[i], to_string(side),
                 "even from attribute_templates");
    return fallback[i];
  };

  // Group mentions by their sentence window, in document order.
  std::vector<std::pair<CharSpan, std::vector<LexiconSide>>> windows;
  for (const auto& m : mentions) {
    CharSpan w = sentence_window_at(response, m.span.begin);
    if (windows.empty() || !(windows.back().first == w))
      windows.push_back({w, {}});
    windows.back().second.push_back(m.side);
  }

  std::vector<EffectSize> effects;
  if (windows.empty()) {
    // No mentions at all: the score falls back to a response-independent
    // template baseline, mirroring the I-WEAT no-mention behavior.
    StimulusSets sets{fallback_for(LexiconSide::Targets1),
                      fallback_for(LexiconSide::Targets2),
                      fallback_for(LexiconSide::Attributes1),
                      fallback_for(LexiconSide::Attributes2)};
    effects.push_back(effect_size(sets));
  } else {
    for (const auto& [span, sides] : windows) {
      Vector window_vec = provider.embed_text(
          std::string(std::string_view(response).substr(span.begin,
                                                        span.size())));
      StimulusSets sets;
      std::vector<Vector>* dest[] = {&sets.x, &sets.y, &sets.a, &sets.b};
      for (LexiconSide side : sides)
        dest[static_cast<std::size_t>(side)]->push_back(window_vec);
      for (int i = 0; i < 4; ++i) {
        if (dest[i]->empty())
          *dest[i] = fallback_for(static_cast<LexiconSide>(i));
      }
      try {
        effects.push_back(effect_size(sets));
      } catch (const Error& e) {
        // A window mentioning both target sides collapses onto one vector
        // and carries no signal; skip it if any other window survives.
        if (e.kind() != ErrorKind::DegenerateSpread) throw;
      }
    }
    if (effects.empty()) {
      // Every window collapsed (e.g. a one-sentence text naming both target
      // sides). No usable context signal is the same situation as no
      // mentions, so fall back to the template baseline rather than erroring.
      StimulusSets sets{fallback_for(LexiconSide::Targets1),
                        fallback_for(LexiconSide::Targets2),
                        fallback_for(LexiconSide::Attributes1),
                        fallback_for(LexiconSide::Attributes2)};
      effects.push_back(effect_size(sets));
    }
  }
  return -ceat_combine(effects).d_combined;
}

double score_iseat(const std::string& response, const IdentityClass& cls,
                   EmbeddingProvider& provider) {
  std::vector<LexiconMention> mentions = find_lexicon_mentions(response, cls);
  std::vector<CharSpan> windows = sentence_windows(response);

  StimulusSets sets;
  for (const CharSpan& w : windows) {
    bool has_1 = false, has_2 = false;
    for (const auto& m : mentions) {
      if (m.span.begin >= w.begin && m.span.end <= w.end) {
        has_1 = has_1 || m.side == LexiconSide::Targets1;
        has_2 = has_2 || m.side == LexiconSide::Targets2;
      }
    }
    if (!has_1 && !has_2) continue;
    Vector v = provider.embed_text(
        std::string(std::string_view(response).substr(w.begin, w.size())));
    if (has_1) sets.x.push_back(v);
    if (has_2) sets.y.push_back(v);
  }

  if (sets.x.empty())
    sets.x = template_embeddings(cls, cls.targets_1, provider);
  if (sets.y.empty())
    sets.y = template_embeddings(cls, cls.targets_2, provider);
  sets.a = template_embeddings(cls, cls.attributes_1, provider);
  sets.b = template_embeddings(cls, cls.attributes_2, provider);

  require_side(sets.x, "targets_1", "even from attribute_templates");
  require_side(sets.y, "targets_2", "even from attribute_templates");
  require_side(sets.a, "attributes_1", "from attribute_templates");
  require_side(sets.b, "attributes_2", "from attribute_templates");
  try {
    return -effect_size(sets).d;
  } catch (const Error& e) {
    // One sentence naming both target sides puts the same vector in X and
    // Y, so the sets carry no direction. Score the template baseline
    // instead, as when the response mentions no targets at all.
    if (e.kind() != ErrorKind::DegenerateSpread) throw;
    sets.x = template_embeddings(cls, cls.targets_1, provider);
    sets.y = template_embeddings(cls, cls.targets_2, provider);
    return -effect_size(sets).d;
  }
}

}  // namespace

double score_response(const std::string& response, const IdentityClass& cls,
                      MetricKind metric, const ProviderSet& providers,
                      const ScoringOptions& options) {
  switch (metric) {
    case MetricKind::IWeat:
      return score_iweat(response, cls,
                         require_provider(providers.word, metric, "word"));
    case MetricKind::Ceat:
      return score_ceat(
          response, cls,
          require_provider(providers.contextual, metric, "contextual"),
          options);
    case MetricKind::ISeat:
      return score_iseat(
          response, cls,
          require_provider(providers.sentence, metric, "sentence"));
  }
  throw Error(ErrorKind::Config, "unhandled metric");
}

}  // namespace badx
