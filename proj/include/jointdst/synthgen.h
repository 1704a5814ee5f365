#ifndef JOINTDST_SYNTHGEN_H_
#define JOINTDST_SYNTHGEN_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/schema.h"

namespace jointdst {

// Templates are space-separated token strings with one "{v}" placeholder.
// Values are space-separated token strings too ("18 : 30").
struct SynthConfig {
  SlotSchema schema;
  std::map<DataTypeGroup, std::vector<std::string>> vocabularies;
  // Per-slot overrides of the group vocabulary (e.g. cuisines vs weekdays,
  // both in group "other"). Keyed by slot index.
  std::map<int, std::vector<std::string>> slot_vocabularies;
  std::vector<std::vector<std::string>> slot_templates;  // per slot, 1..5
  std::map<DataTypeGroup, std::vector<std::string>> shared_templates;

  double domain_activation_prob = 0.6;
  std::vector<double> slot_activation;      // per slot base probability
  std::vector<std::vector<double>> boosts;  // N x N log-odds, symmetric
  double inform_prob = 0.15;
  double refer_prob = 0.1;
  double dontcare_prob = 0.05;
  // Chance that a spoken value uses its group's shared template.
  double shared_template_prob = 0.3;
  // Chance that the system names the slots the user just set.
  double acknowledge_prob = 1.0;
  // Chance that the user names the domain of the turn.
  double domain_cue_prob = 1.0;
  int max_filler = 2;
  int min_turns = 2;
  int max_turns = 5;
  int num_dialogues = 100;
  std::uint64_t seed = 1;

  // Throws Error(kConfig) describing the first problem found.
  void Validate() const;
};

// Restaurant + train ontology sharing the time and integer groups.
SlotSchema DefaultSynthSchema();
// Complete defaults (vocabularies, templates, boosts) for `schema`. Slots
// without hand-written templates get "<name words> {v}".
SynthConfig DefaultSynthConfig(const SlotSchema& schema = DefaultSynthSchema());

// Per turn:
//  1. Each domain is in focus with domain_activation_prob (one at random if
//     none is drawn).
//  2. One sweep over the focused slots not yet valued in the dialogue, in
//     canonical order:
//       logit_s = logit(slot_activation[s]) + sum_{j < s, j active} boosts[s][j]
//       active_s ~ Bernoulli(sigmoid(logit_s))
//  3. Each active slot draws its source: dontcare, inform (the value appears
//     in the system turn), refer (copies a valued slot with the same group
//     and vocabulary) or span (the value is spoken by the user). Boolean
//     slots draw true/false.
//  4. Same-group values spoken in one turn are distinct draws from the same
//     vocabulary.
// Deterministic given the config.
Corpus Generate(const SynthConfig& config);

struct CorpusStats {
  int num_dialogues = 0;
  int num_turns = 0;
  std::vector<double> activation_rate;         // per slot, gold class != none
  std::vector<std::vector<long long>> co_activation;  // N x N, diagonal = count
  std::vector<std::map<CopyClass, long long>> class_counts;
};

CorpusStats ComputeCorpusStats(const Corpus& corpus);
json CorpusStatsToJson(const CorpusStats& stats, const SlotSchema& schema);

}  // namespace jointdst

#endif  // JOINTDST_SYNTHGEN_H_
