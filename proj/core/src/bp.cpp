#include "commwatch/bp.hpp"

#include <algorithm>

namespace commwatch {

std::string_view to_string(LabelReason reason) {
  switch (reason) {
    case LabelReason::seed: return "seed";
    case LabelReason::cc: return "cc";
    case LabelReason::similarity: return "similarity";
  }
  return "?";
}

BipartiteIndex build_bipartite_index(std::span<const Event> day_events,
                                     const RareSet& rare_set, int fold_level) {
  BipartiteIndex index;
  for (const auto& ev : day_events) {
    const std::string folded = fold_domain(ev.domain, fold_level);
    if (!rare_set.contains(folded)) continue;
    index.dom_host[folded].insert(ev.host);
    index.host_rdom[ev.host].insert(folded);
  }
  return index;
}

namespace {

void absorb_rare_domains(const BipartiteIndex& index,
                         const std::set<std::string>& hosts,
                         std::set<std::string>& candidates) {
  for (const auto& h : hosts) {
    auto it = index.host_rdom.find(h);
    if (it == index.host_rdom.end()) continue;
    candidates.insert(it->second.begin(), it->second.end());
  }
}

}  // namespace

BpState belief_propagation(const BipartiteIndex& index,
                           const std::set<std::string>& seed_hosts,
                           const std::set<std::string>& seed_domains,
                           const DetectCcFn& detect_cc,
                           const ScoreFn& compute_score,
                           const BpThresholds& thresholds) {
  BpState state;
  state.hosts = seed_hosts;
  state.domains = seed_domains;
  for (const auto& d : seed_domains) {
    state.labels.push_back({d, 0, LabelReason::seed, 1.0});
    auto it = index.dom_host.find(d);
    if (it != index.dom_host.end())
      state.hosts.insert(it->second.begin(), it->second.end());
  }
  absorb_rare_domains(index, state.hosts, state.candidates);

  while (state.iterations_run < thresholds.max_iterations) {
    const int iteration = state.iterations_run + 1;

    std::vector<DomainLabel> newly;
    for (const auto& dom : state.candidates) {
      if (state.domains.count(dom)) continue;
      if (auto cc_score = detect_cc(dom)) {
        newly.push_back({dom, iteration, LabelReason::cc, *cc_score});
      }
    }

    if (newly.empty()) {
      std::string best_dom;
      double best_score = 0.0;
      bool have_best = false;
      for (const auto& dom : state.candidates) {
        if (state.domains.count(dom)) continue;
        const double s = compute_score(dom, state.domains);
        // Ties admit the lexicographically smallest domain; candidates are
        // iterated in sorted order, so strict > keeps the first.
        if (!have_best || s > best_score) {
          have_best = true;
          best_score = s;
          best_dom = dom;
        }
      }
      if (have_best && best_score >= thresholds.score_threshold) {
        newly.push_back({best_dom, iteration, LabelReason::similarity,
                         best_score});
      }
    }

    if (newly.empty()) break;
    state.iterations_run = iteration;

    std::sort(newly.begin(), newly.end(),
              [](const DomainLabel& a, const DomainLabel& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.domain < b.domain;
              });
    std::set<std::string> new_hosts;
    for (auto& label : newly) {
      state.domains.insert(label.domain);
      auto it = index.dom_host.find(label.domain);
      if (it != index.dom_host.end())
        new_hosts.insert(it->second.begin(), it->second.end());
      state.labels.push_back(std::move(label));
    }
    state.hosts.insert(new_hosts.begin(), new_hosts.end());
    absorb_rare_domains(index, state.hosts, state.candidates);
  }

  return state;
}

}  // namespace commwatch
