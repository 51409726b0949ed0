#include "discern/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "discern/csv.hpp"
#include "discern/error.hpp"
#include "discern/rng.hpp"
#include "discern/runner.hpp"

namespace discern::report {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string full(double v) { return std::isfinite(v) ? fmt::format("{}", v) : (std::isnan(v) ? "NA" : (v > 0 ? "inf" : "-inf")); }
std::string two(double v) { return std::isfinite(v) ? fmt::format("{:.2f}", v) : full(v); }

Trait trait_of(const nlohmann::json& entry) { return parse_trait(entry.at("trait").get<std::string>()); }

}  // namespace

ReferenceFixture ReferenceFixture::from_json(const nlohmann::json& j, std::string_view source) {
  ReferenceFixture f;
  try {
    if (j.at("schema").get<std::string>() != "discern.reference/1")
      throw LoadError(std::string(source) + ": unsupported schema " + j.at("schema").dump());
    f.label = j.at("label").get<std::string>();
    f.inventory_kind = parse_inventory_kind(j.at("inventory_kind").get<std::string>());
    f.n = j.at("n").get<std::size_t>();
    f.nd_correlations.outcome = stats::Outcome::ND;
    std::set<Trait> seen;
    for (const auto& e : j.at("correlations").at("ND")) {
      const Trait t = trait_of(e);
      seen.insert(t);
      auto& c = f.nd_correlations.entries[static_cast<std::size_t>(t)];
      c.r = e.at("r").get<double>();
      c.p_two_tailed = e.at("p").get<double>();
      c.n = f.n;
    }
    if (seen.size() != kTraitCount) throw LoadError(std::string(source) + ": ND correlations must cover E, A, C, N, O");
    for (auto outcome : stats::kOutcomes) {
      const auto& rows = j.at("regressions").at(std::string(stats::to_string(outcome)));
      if (rows.size() != kTraitCount)
        throw LoadError(std::string(source) + ": regression row " + std::string(stats::to_string(outcome)) +
                        " needs five traits");
      for (const auto& e : rows) {
        auto& cell = f.regressions[static_cast<std::size_t>(outcome)][static_cast<std::size_t>(trait_of(e))];
        cell.beta = e.at("beta").get<double>();
        cell.stars = e.value("stars", std::string());
      }
    }
    const auto& dirs = j.at("af_directions");
    if (dirs.size() != kTraitCount) throw LoadError(std::string(source) + ": af_directions needs five entries");
    for (std::size_t i = 0; i < kTraitCount; ++i) {
      f.af_directions[i] = dirs[i].get<std::string>();
      if (f.af_directions[i] != "pos" && f.af_directions[i] != "neg" && f.af_directions[i] != "ns" &&
          f.af_directions[i] != "--")
        throw LoadError(std::string(source) + ": bad af direction '" + f.af_directions[i] + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string(source) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(std::string(source) + ": " + e.what());
  }
  return f;
}

ReferenceFixture ReferenceFixture::load(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw LoadError(path.string() + ": not valid JSON");
  return from_json(j, path.string());
}

std::string CellInfo::label() const {
  return fmt::format("{} / {} / {} ({})", model_name, temperature, to_string(inventory_kind), to_string(scale_format));
}

CellInfo CellInfo::from_record(const SessionRecord& r) {
  if (!r.scale_format) throw ValidationError("record without scale format is not a persona record");
  return CellInfo{r.cell_key(), r.model_name, r.temperature, *r.scale_format, r.inventory_kind};
}

HeadlineComparison compare_headline(std::string headline_id, std::span<const double> persona,
                                    std::span<const double> baseline, double alpha) {
  (void)alpha;
  HeadlineComparison out;
  out.headline_id = std::move(headline_id);
  if (persona.size() < 2 || baseline.size() < 2) {
    out.excluded = true;
    out.reason = "fewer than two values on one side";
    return out;
  }
  const auto [pmin, pmax] = std::minmax_element(persona.begin(), persona.end());
  const auto [bmin, bmax] = std::minmax_element(baseline.begin(), baseline.end());
  if (*pmin == *pmax && *bmin == *bmax && *pmin == *bmin) {
    const double n1 = static_cast<double>(persona.size()), n2 = static_cast<double>(baseline.size());
    out.ks = {0.0, 1.0, stats::TestKind::KS, persona.size(), baseline.size(), true};
    out.mw = {n1 * n2 / 2, 1.0, stats::TestKind::MWU, persona.size(), baseline.size(), true};
    out.effect = {0.0, stats::EffectBin::UpTo0_2};
    return out;
  }
  out.ks = stats::ks_two_sample(persona, baseline);
  out.mw = stats::mann_whitney_u(persona, baseline);
  try {
    out.effect = stats::cohens_d(persona, baseline);
  } catch (const DegenerateError&) {
    // Both sides constant but different: an unbounded standardized shift.
    const double diff = stats::mean(persona) - stats::mean(baseline);
    const double d = diff == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    out.effect = {d, stats::effect_bin(d)};
  }
  return out;
}

ComparisonTableRow build_comparison_row(const CellInfo& cell, const std::vector<std::string>& headline_ids,
                                        const SamplesByHeadline& persona, const SamplesByHeadline& baseline,
                                        double alpha) {
  ComparisonTableRow row;
  row.cell = cell;
  for (const auto& id : headline_ids) {
    const auto p = persona.find(id);
    const auto b = baseline.find(id);
    HeadlineComparison hc;
    if (p == persona.end() || b == baseline.end()) {
      hc.headline_id = id;
      hc.excluded = true;
      hc.reason = p == persona.end() ? "no persona ratings" : "no neutral baseline";
    } else {
      hc = compare_headline(id, p->second, b->second, alpha);
    }
    if (hc.excluded) {
      row.excluded.push_back(id);
    } else {
      ++row.n_compared;
      if (hc.ks.p_two_tailed < alpha) ++row.ks_sig_count;
      if (hc.mw.p_two_tailed < alpha) ++row.mw_sig_count;
      ++row.bin_counts[static_cast<std::size_t>(hc.effect.bin)];
    }
    row.headlines.push_back(std::move(hc));
  }
  return row;
}

namespace {

double outcome_value(const DiscernmentSummary& s, stats::Outcome o) {
  switch (o) {
    case stats::Outcome::ND: return s.nd;
    case stats::Outcome::AR: return s.ar;
    case stats::Outcome::AF: return s.af;
  }
  return kNaN;
}

std::array<std::vector<double>, kTraitCount> trait_columns(const std::vector<AgentData>& agents) {
  std::array<std::vector<double>, kTraitCount> cols;
  for (const auto& a : agents)
    for (auto t : kTraits) cols[static_cast<std::size_t>(t)].push_back(a.traits[t]);
  return cols;
}

std::vector<double> outcome_column(const std::vector<AgentData>& agents, stats::Outcome o) {
  std::vector<double> y;
  y.reserve(agents.size());
  for (const auto& a : agents) y.push_back(outcome_value(a.summary, o));
  return y;
}

TraitCell defined_cell(double value, double p) {
  return TraitCell{true, value, p, std::string(stats::significance_stars(p)), 0, 0};
}

}  // namespace

TableBuild build_correlation_table(const std::vector<std::pair<CellInfo, std::vector<AgentData>>>& cells,
                                   const ReferenceFixture* reference) {
  TableBuild out;
  for (const auto& [cell, agents] : cells)
    if (agents.size() < 3)
      out.warnings.push_back(fmt::format("correlations: {} has {} eligible agents, row omitted", cell.label(),
                                         agents.size()));
  for (auto outcome : stats::kOutcomes) {
    if (reference && outcome == stats::Outcome::ND) {
      TraitTableRow row;
      row.setting = reference->label;
      row.outcome = outcome;
      row.n = reference->n;
      row.reference = true;
      for (std::size_t i = 0; i < kTraitCount; ++i) {
        const auto& e = reference->nd_correlations.entries[i];
        row.cells[i] = defined_cell(e.r, e.p_two_tailed);
      }
      out.rows.push_back(std::move(row));
    }
    for (const auto& [cell, agents] : cells) {
      if (agents.size() < 3) continue;
      TraitTableRow row;
      row.setting = cell.label();
      row.cell = cell;
      row.outcome = outcome;
      row.n = agents.size();
      const auto cols = trait_columns(agents);
      const auto y = outcome_column(agents, outcome);
      for (std::size_t i = 0; i < kTraitCount; ++i) {
        try {
          const auto r = stats::pearson(cols[i], y);
          row.cells[i] = defined_cell(r.r, r.p_two_tailed);
        } catch (const DegenerateError&) {
          row.cells[i] = TraitCell{false, kNaN, kNaN, "", 0, 0};
        }
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

TableBuild build_regression_table(const std::vector<std::pair<CellInfo, std::vector<AgentData>>>& cells,
                                  const ReferenceFixture* reference) {
  TableBuild out;
  for (auto outcome : stats::kOutcomes) {
    if (reference) {
      TraitTableRow row;
      row.setting = reference->label;
      row.outcome = outcome;
      row.n = reference->n;
      row.reference = true;
      for (std::size_t i = 0; i < kTraitCount; ++i) {
        const auto& b = reference->regressions[static_cast<std::size_t>(outcome)][i];
        row.cells[i] = TraitCell{true, b.beta, kNaN, b.stars, kNaN, kNaN};
      }
      out.rows.push_back(std::move(row));
    }
    for (const auto& [cell, agents] : cells) {
      if (agents.size() < 3) {
        if (outcome == stats::Outcome::ND)
          out.warnings.push_back(fmt::format("regressions: {} has {} eligible agents, row omitted", cell.label(),
                                             agents.size()));
        continue;
      }
      const auto cols = trait_columns(agents);
      const auto y = outcome_column(agents, outcome);
      std::vector<stats::Predictor> predictors;
      for (auto t : kTraits) predictors.push_back({std::string(to_string(t)), cols[static_cast<std::size_t>(t)]});
      TraitTableRow row;
      row.setting = cell.label();
      row.cell = cell;
      row.outcome = outcome;
      row.n = agents.size();
      try {
        const auto fit = stats::ols_regression(predictors, y, true);
        for (std::size_t i = 0; i < kTraitCount; ++i) {
          const auto& c = fit.coefficients[i];
          row.cells[i] = defined_cell(c.beta, c.p_two_tailed);
          row.cells[i].standard_error = c.standard_error;
          row.cells[i].t = c.t;
        }
      } catch (const ValidationError& e) {
        out.warnings.push_back(fmt::format("regressions: {} {}: {}, row omitted", cell.label(),
                                           stats::to_string(outcome), e.what()));
        continue;
      } catch (const DegenerateError& e) {
        out.warnings.push_back(fmt::format("regressions: {} {}: {}", cell.label(), stats::to_string(outcome), e.what()));
        for (auto& c : row.cells) c = TraitCell{false, kNaN, kNaN, "", kNaN, kNaN};
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<DirectionRow> build_af_directions(const std::vector<TraitTableRow>& correlation_rows,
                                              const ReferenceFixture* reference, double alpha) {
  struct Group {
    DirectionRow row;
    std::array<double, kTraitCount> best_p;
    std::array<bool, kTraitCount> any_defined{};
  };
  std::vector<Group> groups;
  for (const auto& r : correlation_rows) {
    if (r.outcome != stats::Outcome::AF || !r.cell) continue;
    const CellInfo& c = *r.cell;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.row.model_name == c.model_name && g.row.inventory_kind == c.inventory_kind &&
             g.row.scale_format == c.scale_format;
    });
    if (it == groups.end()) {
      Group g;
      g.row.model_name = c.model_name;
      g.row.inventory_kind = c.inventory_kind;
      g.row.scale_format = c.scale_format;
      g.row.label = fmt::format("{} / {} ({})", c.model_name, to_string(c.inventory_kind), to_string(c.scale_format));
      g.row.directions.fill("ns");
      g.best_p.fill(std::numeric_limits<double>::infinity());
      groups.push_back(std::move(g));
      it = groups.end() - 1;
    }
    for (std::size_t i = 0; i < kTraitCount; ++i) {
      const auto& cell = r.cells[i];
      if (!cell.defined) continue;
      it->any_defined[i] = true;
      if (cell.p < alpha && cell.p < it->best_p[i]) {
        it->best_p[i] = cell.p;
        it->row.directions[i] = cell.value > 0 ? "pos" : "neg";
      }
    }
  }
  std::vector<DirectionRow> out;
  for (auto& g : groups) {
    for (std::size_t i = 0; i < kTraitCount; ++i)
      if (!g.any_defined[i]) g.row.directions[i] = "NA";
    out.push_back(std::move(g.row));
  }
  if (reference) {
    DirectionRow ref;
    ref.label = reference->label;
    ref.inventory_kind = reference->inventory_kind;
    ref.directions = reference->af_directions;
    ref.reference = true;
    out.push_back(std::move(ref));
  }
  return out;
}

std::vector<SimilarityRow> build_similarity_data(
    const std::vector<std::pair<std::string, stats::CorrelationVector>>& configurations,
    const stats::CorrelationVector& reference, double alpha) {
  std::vector<SimilarityRow> out;
  for (const auto& [label, v] : configurations) {
    SimilarityRow row;
    row.setting = label;
    const bool defined = std::all_of(v.entries.begin(), v.entries.end(), [](const auto& e) { return std::isfinite(e.r); });
    if (!defined) {
      row.cos_all = row.cos_significant = kNaN;
      row.flagged = true;
      row.flag = "undefined correlation";
      out.push_back(std::move(row));
      continue;
    }
    try {
      row.cos_all = stats::cosine_similarity(v, reference, stats::CosineMask::All, reference, alpha);
    } catch (const DegenerateError& e) {
      row.cos_all = kNaN;
      row.flagged = true;
      row.flag = e.what();
    }
    try {
      row.cos_significant = stats::cosine_similarity(v, reference, stats::CosineMask::SignificantOnly, reference, alpha);
    } catch (const DegenerateError& e) {
      row.cos_significant = kNaN;
      row.flagged = true;
      row.flag = e.what();
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

bool cell_less(const CellInfo& a, const CellInfo& b) {
  return std::tuple(a.model_name, a.temperature, static_cast<int>(a.inventory_kind), static_cast<int>(a.scale_format)) <
         std::tuple(b.model_name, b.temperature, static_cast<int>(b.inventory_kind), static_cast<int>(b.scale_format));
}

std::string neutral_cell_key(const CellInfo& c) {
  SessionRecord r;
  r.model_name = c.model_name;
  r.temperature = c.temperature;
  r.inventory_kind = c.inventory_kind;
  return r.cell_key();
}

}  // namespace

Analysis analyze(const std::vector<SessionRecord>& persona, const std::vector<SessionRecord>& neutral,
                 const Corpus& corpus, const Inventory& inventory, const std::optional<TraitScoreMap>& supplied,
                 const ReferenceFixture* reference, const AnalysisOptions& options) {
  std::set<std::string> run_ids;
  for (const auto& r : persona) run_ids.insert(r.run_id);
  for (const auto& r : neutral) run_ids.insert(r.run_id);
  if (run_ids.size() > 1) {
    std::string list;
    for (const auto& id : run_ids) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("sessions come from more than one run (" + list + "); analyze one run at a time");
  }
  for (const auto& r : persona)
    if (r.condition != Condition::Persona) throw ValidationError("neutral record found among persona sessions");
  for (const auto& r : neutral)
    if (r.condition != Condition::Neutral) throw ValidationError("persona record found among neutral sessions");
  if (persona.empty()) throw ValidationError("no persona sessions to analyze");

  Analysis out;
  const SessionRecord& first = persona.front();
  const std::uint64_t base_seed = options.baseline_seed.value_or(first.seed);
  out.provenance = Provenance{std::string(kToolVersion), first.run_id, base_seed, first.prompt_template_hash,
                              options.baseline_sigma,
                              options.baseline_n ? std::to_string(*options.baseline_n) : "persona sample size"};

  std::map<std::string, int> neutral_rating;
  for (const auto& r : neutral)
    if (r.rating && r.parse_status == ParseStatus::Ok) neutral_rating[r.cell_key() + "#" + r.headline_id] = *r.rating;

  std::vector<std::string> headline_ids;
  for (const auto& h : corpus.headlines()) headline_ids.push_back(h.headline_id);

  const auto grouped = group_persona_records(persona);
  std::vector<std::pair<CellInfo, std::vector<AgentData>>> eligible;
  for (const auto& [key, agents] : grouped) {
    CellAnalysis ca;
    ca.cell = CellInfo::from_record(agents.begin()->second.front());
    SamplesByHeadline persona_samples;
    std::vector<AgentData> usable;
    for (const auto& [pid, recs] : agents) {
      AgentData a;
      a.summary = compute_summary(recs, corpus);
      if (supplied) {
        auto it = supplied->find(pid);
        if (it == supplied->end()) throw ValidationError("no trait scores for participant '" + pid + "'");
        a.traits = it->second;
      } else {
        const ItemBank& bank = inventory.bank(recs.front().inventory_kind);
        a.traits = score_inventory(decode_responses(recs.front().responses, bank), bank);
      }
      const auto means = headline_means(recs, corpus);
      for (std::size_t i = 0; i < means.size(); ++i)
        if (means[i]) persona_samples[headline_ids[i]].push_back(*means[i]);
      ++ca.n_agents;
      if (a.summary.excluded) ++ca.n_excluded_agents;
      else if (!eligible_for_correlation(a.summary, corpus.size())) ++ca.n_ineligible_agents;
      if (eligible_for_correlation(a.summary, corpus.size())) usable.push_back(a);
      ca.agents.push_back(std::move(a));
    }
    if (ca.n_excluded_agents || ca.n_ineligible_agents)
      out.warnings.push_back(fmt::format("{}: {} agent(s) with an empty veracity class, {} rated under half the headlines",
                                         ca.cell.label(), ca.n_excluded_agents, ca.n_ineligible_agents));

    SamplesByHeadline baseline;
    const std::string nkey = neutral_cell_key(ca.cell);
    for (const auto& id : headline_ids) {
      auto it = neutral_rating.find(nkey + "#" + id);
      if (it == neutral_rating.end()) continue;
      const auto ps = persona_samples.find(id);
      const std::size_t n = options.baseline_n.value_or(ps == persona_samples.end() ? 0 : ps->second.size());
      if (n < 2) continue;
      const auto seed = rng::derive_key(base_seed, {"baseline", ca.cell.cell_key, id});
      baseline[id] = build_neutral_baseline(it->second, options.baseline_sigma, n, seed, id).samples;
    }
    out.comparison.push_back(build_comparison_row(ca.cell, headline_ids, persona_samples, baseline, options.alpha));
    eligible.emplace_back(ca.cell, std::move(usable));
    out.cells.push_back(std::move(ca));
  }

  std::sort(out.cells.begin(), out.cells.end(), [](const auto& a, const auto& b) { return cell_less(a.cell, b.cell); });
  std::sort(out.comparison.begin(), out.comparison.end(),
            [](const auto& a, const auto& b) { return cell_less(a.cell, b.cell); });
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) { return cell_less(a.first, b.first); });

  auto corr = build_correlation_table(eligible, reference);
  auto reg = build_regression_table(eligible, reference);
  out.correlations = std::move(corr.rows);
  out.regressions = std::move(reg.rows);
  out.warnings.insert(out.warnings.end(), corr.warnings.begin(), corr.warnings.end());
  out.warnings.insert(out.warnings.end(), reg.warnings.begin(), reg.warnings.end());
  out.af_directions = build_af_directions(out.correlations, reference, options.alpha);

  if (reference) {
    std::vector<std::pair<std::string, stats::CorrelationVector>> configs;
    std::vector<CellInfo> infos;
    for (const auto& row : out.correlations) {
      if (row.reference || row.outcome != stats::Outcome::ND) continue;
      stats::CorrelationVector v;
      for (std::size_t i = 0; i < kTraitCount; ++i) {
        v.entries[i].r = row.cells[i].defined ? row.cells[i].value : kNaN;
        v.entries[i].p_two_tailed = row.cells[i].p;
        v.entries[i].n = row.n;
      }
      configs.emplace_back(row.setting, v);
      infos.push_back(*row.cell);
    }
    out.similarity = build_similarity_data(configs, reference->nd_correlations, options.alpha);
    for (std::size_t i = 0; i < infos.size(); ++i) out.similarity[i].cell = infos[i];
  }
  return out;
}

OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "md" || s == "markdown") return OutputFormat::Markdown;
  if (s == "both") return OutputFormat::Both;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv, md or both)");
}

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = std::max<std::size_t>(3, header[i].size());
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t i = 0; i < width.size(); ++i)
      s += fmt::format(" {:<{}} |", i < cells.size() ? cells[i] : std::string(), width[i]);
    return s + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (auto w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

namespace {

std::string csv_header_comment(const Provenance& p) {
  return fmt::format("# tool={} run_id={} seed={} prompt_template_hash={} baseline_sigma={} baseline_n={}\n",
                     p.tool_version, p.run_id, p.seed, p.template_hash, p.baseline_sigma, p.baseline_n);
}

std::string md_header(const Provenance& p, std::string_view title) {
  return fmt::format("# {}\n\nTool {}, run `{}`, seed {}, prompt template `{}`, neutral baseline sigma {} with n = {}.\n\n",
                     title, p.tool_version, p.run_id, p.seed, p.template_hash, p.baseline_sigma, p.baseline_n);
}

std::string csv_line(const std::vector<std::string>& fields) { return csv::join(fields) + "\n"; }

std::vector<std::string> cell_columns(const std::optional<CellInfo>& c) {
  if (!c) return {"", "", "", ""};
  return {c->model_name, fmt::format("{}", c->temperature), std::string(to_string(c->scale_format)),
          std::string(to_string(c->inventory_kind))};
}

std::string md_value(const TraitCell& c) { return c.defined ? two(c.value) + c.stars : "NA"; }

std::string comparison_csv(const Analysis& a) {
  std::string out = csv_header_comment(a.provenance);
  out += "model,temperature,scale_format,inventory,ks_sig,mw_sig,d_le_0.2,d_0.2_0.5,d_0.5_0.8,d_gt_0.8,n_compared,excluded\n";
  for (const auto& r : a.comparison) {
    auto f = cell_columns(r.cell);
    f.push_back(std::to_string(r.ks_sig_count));
    f.push_back(std::to_string(r.mw_sig_count));
    for (auto c : r.bin_counts) f.push_back(std::to_string(c));
    f.push_back(std::to_string(r.n_compared));
    std::string ex;
    for (const auto& id : r.excluded) ex += (ex.empty() ? "" : ";") + id;
    f.push_back(ex);
    out += csv_line(f);
  }
  return out;
}

std::string comparison_md(const Analysis& a) {
  std::string out = md_header(a.provenance, "Persona vs neutral rating distributions");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : a.comparison) {
    rows.push_back({r.cell.model_name, std::string(to_string(r.cell.scale_format)), fmt::format("{}", r.cell.temperature),
                    std::string(to_string(r.cell.inventory_kind)), std::to_string(r.ks_sig_count),
                    std::to_string(r.mw_sig_count), std::to_string(r.bin_counts[0]), std::to_string(r.bin_counts[1]),
                    std::to_string(r.bin_counts[2]), std::to_string(r.bin_counts[3]),
                    std::to_string(r.excluded.size())});
  }
  out += markdown_table({"Model", "Scale", "Temp", "Inventory", "KS", "MW", "d <= .2", ".21-.5", ".51-.8", "> .8",
                         "Excluded"},
                        rows);
  out += "\nKS and MW count headlines with p < .05.\n";
  return out;
}

std::string trait_rows_csv(const Analysis& a, const std::vector<TraitTableRow>& rows, bool regression) {
  std::string out = csv_header_comment(a.provenance);
  std::vector<std::string> header{"setting", "model", "temperature", "scale_format", "inventory", "outcome", "n"};
  for (auto t : kTraits) {
    const std::string n(to_string(t));
    if (regression) {
      for (const char* suffix : {"_beta", "_se", "_t", "_p", "_stars"}) header.push_back(n + suffix);
    } else {
      for (const char* suffix : {"_r", "_p", "_stars"}) header.push_back(n + suffix);
    }
  }
  out += csv_line(header);
  for (const auto& r : rows) {
    std::vector<std::string> f{r.setting};
    for (auto& c : cell_columns(r.cell)) f.push_back(std::move(c));
    f.push_back(std::string(stats::to_string(r.outcome)));
    f.push_back(std::to_string(r.n));
    for (const auto& c : r.cells) {
      f.push_back(c.defined ? full(c.value) : "NA");
      if (regression) {
        f.push_back(c.defined ? full(c.standard_error) : "NA");
        f.push_back(c.defined ? full(c.t) : "NA");
      }
      f.push_back(c.defined ? full(c.p) : "NA");
      f.push_back(c.stars);
    }
    out += csv_line(f);
  }
  return out;
}

std::string correlations_md(const Analysis& a) {
  std::string out = md_header(a.provenance, "Trait correlations");
  for (auto outcome : stats::kOutcomes) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : a.correlations) {
      if (r.outcome != outcome) continue;
      std::vector<std::string> row{r.setting};
      for (const auto& c : r.cells) row.push_back(md_value(c));
      row.push_back(std::to_string(r.n));
      rows.push_back(std::move(row));
    }
    out += fmt::format("## {}\n\n", stats::to_string(outcome));
    out += markdown_table({"Setting", "E", "A", "C", "N", "O", "n"}, rows);
    out += "\n";
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& d : a.af_directions) {
    std::vector<std::string> row{d.label};
    for (const auto& v : d.directions) row.push_back(v);
    rows.push_back(std::move(row));
  }
  out += "## AF directions\n\n";
  out += markdown_table({"Setting", "E", "A", "C", "N", "O"}, rows);
  out += "\nSignificance: * p < .05, ** p < .01, *** p < .001 (two-tailed). A direction is pos/neg when at least one "
         "temperature is significant.\n";
  return out;
}

std::string correlations_csv(const Analysis& a) {
  std::string out = trait_rows_csv(a, a.correlations, false);
  return out;
}

std::string directions_csv_block(const Analysis& a) {
  std::string out = csv_header_comment(a.provenance);
  out += "setting,model,inventory,scale_format,E,A,C,N,O\n";
  for (const auto& d : a.af_directions) {
    std::vector<std::string> f{d.label, d.model_name, std::string(to_string(d.inventory_kind)),
                               d.scale_format ? std::string(to_string(*d.scale_format)) : ""};
    for (const auto& v : d.directions) f.push_back(v);
    out += csv_line(f);
  }
  return out;
}

std::string regressions_md(const Analysis& a) {
  std::string out = md_header(a.provenance, "Multiple regression (standardized OLS)");
  // One wide row per setting: ND | AR | AF.
  std::vector<std::string> order;
  std::map<std::string, std::array<const TraitTableRow*, 3>> by_setting;
  for (const auto& r : a.regressions) {
    if (!by_setting.contains(r.setting)) {
      order.push_back(r.setting);
      by_setting[r.setting] = {nullptr, nullptr, nullptr};
    }
    by_setting[r.setting][static_cast<std::size_t>(r.outcome)] = &r;
  }
  std::vector<std::string> header{"Setting"};
  for (auto o : stats::kOutcomes)
    for (auto t : kTraits) header.push_back(fmt::format("{} {}", stats::to_string(o), to_string(t)));
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : order) {
    std::vector<std::string> row{s};
    for (const auto* r : by_setting[s])
      for (std::size_t i = 0; i < kTraitCount; ++i) row.push_back(r ? md_value(r->cells[i]) : "");
    rows.push_back(std::move(row));
  }
  out += markdown_table(header, rows);
  out += "\nSignificance: * p < .05, ** p < .01, *** p < .001 (two-tailed).\n";
  return out;
}

std::string similarity_csv(const Analysis& a) {
  std::string out = csv_header_comment(a.provenance);
  out += "setting,model,temperature,scale_format,inventory,cos_all,cos_significant,flag\n";
  for (const auto& r : a.similarity) {
    std::vector<std::string> f{r.setting};
    for (auto& c : cell_columns(r.cell)) f.push_back(std::move(c));
    f.push_back(full(r.cos_all));
    f.push_back(full(r.cos_significant));
    f.push_back(r.flag);
    out += csv_line(f);
  }
  return out;
}

std::string similarity_md(const Analysis& a) {
  std::string out = md_header(a.provenance, "Cosine similarity with the human ND correlations");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : a.similarity) rows.push_back({r.setting, two(r.cos_all), two(r.cos_significant), r.flag});
  out += markdown_table({"Setting", "All traits", "Significant traits", "Flag"}, rows);
  if (a.similarity.empty()) out += "\nNo reference vector was supplied.\n";
  return out;
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_');
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'", 0);
  f << body;
  if (!f.flush()) throw IoError("write to '" + path.string() + "' failed", 0);
}

}  // namespace

std::vector<std::string> write_report(const Analysis& a, const std::filesystem::path& out_dir, OutputFormat format) {
  std::filesystem::create_directories(out_dir / "summaries");
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_file(out_dir / name, body);
    files.push_back(name);
  };
  const bool csv = format != OutputFormat::Markdown;
  const bool md = format != OutputFormat::Csv;
  if (csv) {
    emit("comparison.csv", comparison_csv(a));
    emit("correlations.csv", correlations_csv(a));
    emit("af_directions.csv", directions_csv_block(a));
    emit("regressions.csv", trait_rows_csv(a, a.regressions, true));
    emit("similarity.csv", similarity_csv(a));
  }
  if (md) {
    emit("comparison.md", comparison_md(a));
    emit("correlations.md", correlations_md(a));
    emit("regressions.md", regressions_md(a));
    emit("similarity.md", similarity_md(a));
  }
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : a.cells) {
    std::vector<DiscernmentSummary> rows;
    for (const auto& agent : c.agents) rows.push_back(agent.summary);
    const std::string name = "summaries/" + sanitize(c.cell.cell_key) + ".csv";
    emit(name, csv_header_comment(a.provenance) + summaries_to_csv(rows));
    cells.push_back({{"cell", c.cell.label()},
                     {"agents", c.n_agents},
                     {"excluded_agents", c.n_excluded_agents},
                     {"ineligible_agents", c.n_ineligible_agents},
                     {"summaries", name}});
  }
  nlohmann::ordered_json m;
  m["schema"] = "discern.report_manifest/1";
  m["tool_version"] = a.provenance.tool_version;
  m["run_id"] = a.provenance.run_id;
  m["seed"] = a.provenance.seed;
  m["prompt_template_hash"] = a.provenance.template_hash;
  m["baseline_sigma"] = a.provenance.baseline_sigma;
  m["baseline_n"] = a.provenance.baseline_n;
  m["cells"] = std::move(cells);
  m["warnings"] = a.warnings;
  files.push_back("manifest.json");
  m["files"] = files;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
  return files;
}

}  // namespace discern::report
