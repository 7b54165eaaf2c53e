#include "mhel/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "mhel/error.hpp"
#include "mhel/stats.hpp"

namespace mhel {

namespace {

constexpr std::string_view kNilLabel = "NIL";

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_pairs(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw PreconditionError("evaluation needs at least one pair");
  std::unordered_set<std::string_view> ids;
  for (const auto& p : pairs) {
    if (p.gold.empty() || p.pred.empty()) {
      throw PreconditionError("empty gold or prediction label for mention " + p.mention_id);
    }
    if (!ids.insert(p.mention_id).second) {
      throw PreconditionError("duplicate mention_id " + p.mention_id);
    }
  }
}

std::string row(const char* label, double value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-22s %10.6f\n", label, value);
  return buf;
}

std::string row(const char* label, std::size_t value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-22s %10zu\n", label, value);
  return buf;
}

}  // namespace

double harmonic_f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

MicroScores micro_scores(std::span<const EvalPair> pairs) {
  check_pairs(pairs);
  MicroScores s;
  s.n = pairs.size();
  std::size_t linked_preds = 0;
  std::size_t linked_golds = 0;
  std::size_t linked_correct = 0;
  for (const auto& p : pairs) {
    const bool correct = p.pred == p.gold;
    if (correct) ++s.correct;
    if (p.pred != kNilLabel) {
      ++linked_preds;
      if (correct) ++linked_correct;
    }
    if (p.gold != kNilLabel) ++linked_golds;
  }
  s.accuracy_f1 = ratio(s.correct, s.n);
  s.link_only.precision = ratio(linked_correct, linked_preds);
  s.link_only.recall = ratio(linked_correct, linked_golds);
  s.link_only.f1 = harmonic_f1(s.link_only.precision, s.link_only.recall);
  return s;
}

NilReport nil_scores(std::span<const EvalPair> pairs) {
  check_pairs(pairs);
  NilReport r;
  for (const auto& p : pairs) {
    const bool gold_nil = p.gold == kNilLabel;
    const bool pred_nil = p.pred == kNilLabel;
    if (gold_nil && pred_nil) ++r.tp;
    if (!gold_nil && pred_nil) ++r.fp;
    if (gold_nil && !pred_nil) ++r.fn;
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = harmonic_f1(r.precision, r.recall);
  return r;
}

CorrelationReport point_biserial(std::span<const double> scores, std::span<const int> correct) {
  if (scores.size() != correct.size()) {
    throw PreconditionError("point_biserial: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  if (n < 3) throw PreconditionError("point_biserial: need at least 3 observations");

  // Group means, then the between/within decomposition of the total sum of
  // squares: r^2 = SS_between / (SS_between + SS_within).
  std::size_t n1 = 0;
  double sum1 = 0.0;
  double sum0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (correct[i] != 0 && correct[i] != 1) {
      throw PreconditionError("point_biserial: labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) throw PreconditionError("point_biserial: non-finite score");
    if (correct[i] == 1) {
      ++n1;
      sum1 += scores[i];
    } else {
      sum0 += scores[i];
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) {
    throw PreconditionError("point_biserial: correctness has a single class");
  }
  const double mean1 = sum1 / static_cast<double>(n1);
  const double mean0 = sum0 / static_cast<double>(n0);
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = scores[i] - (correct[i] == 1 ? mean1 : mean0);
    within += d * d;
  }
  const double gap = mean1 - mean0;
  const double between =
      static_cast<double>(n1) * static_cast<double>(n0) / static_cast<double>(n) * gap * gap;
  if (!(between + within > 0.0)) throw PreconditionError("point_biserial: scores have zero variance");

  CorrelationReport report;
  report.n = n;
  const double magnitude = std::sqrt(between / (between + within));
  report.r_pb = gap < 0.0 ? -magnitude : magnitude;
  const double df = static_cast<double>(n - 2);
  if (within == 0.0) {
    report.t_stat = std::copysign(std::numeric_limits<double>::infinity(), report.r_pb);
    report.p_value = 0.0;
  } else {
    // t = r sqrt(df) / sqrt(1 - r^2), with 1 - r^2 = within / total.
    report.t_stat = gap * std::sqrt(static_cast<double>(n1) * static_cast<double>(n0) /
                                    static_cast<double>(n) * df / within);
    report.p_value = stats::student_t_two_sided_p(report.t_stat, df);
  }
  return report;
}

const char* to_string(ErrorRelation relation) {
  switch (relation) {
    case ErrorRelation::false_: return "false";
    case ErrorRelation::exact: return "exact";
    case ErrorRelation::close: return "close";
    case ErrorRelation::related: return "related";
    case ErrorRelation::broader: return "broader";
    case ErrorRelation::narrower: return "narrower";
  }
  return "unknown";
}

std::optional<ErrorRelation> error_relation_from_string(std::string_view name) {
  for (ErrorRelation r : kErrorRelations) {
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

ErrorTally tally_error_relations(std::span<const ErrorAnnotation> annotations) {
  ErrorTally tally;
  for (const auto& a : annotations) {
    const auto index = static_cast<std::size_t>(a.relation);
    if (index >= kErrorRelationCount) throw PreconditionError("invalid error relation");
    auto& cells = tally.by_dataset.try_emplace(a.dataset, RelationCounts{}).first->second;
    ++cells[index];
    ++tally.totals[index];
    ++tally.total;
  }
  return tally;
}

std::vector<ErrorAnnotation> read_error_annotations(const std::string& path) {
  std::vector<ErrorAnnotation> out;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    ErrorAnnotation a;
    a.mention_id = required_string(obj, "mention_id", path, line);
    const std::string relation = required_string(obj, "relation", path, line);
    const auto parsed = error_relation_from_string(relation);
    if (!parsed) throw FormatError(path, line, "unknown relation \"" + relation + "\"");
    a.relation = *parsed;
    a.dataset = required_string(obj, "dataset", path, line);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<RecallPoint> retrieval_recall_report(std::span<const DevRetrievalRecord> records,
                                                 std::span<const int> k_steps) {
  return recall_curve(records, k_steps);
}

std::vector<EvalPair> join_predictions(std::span<const PredictionRecord> predictions,
                                       std::span<const MentionQuery> gold) {
  std::unordered_map<std::string_view, const MentionQuery*> by_id;
  for (const auto& m : gold) by_id.emplace(m.mention_id, &m);
  if (by_id.size() != predictions.size()) {
    throw PreconditionError("gold has " + std::to_string(by_id.size()) + " mentions, predictions " +
                            std::to_string(predictions.size()));
  }
  std::vector<EvalPair> pairs;
  pairs.reserve(predictions.size());
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.mention_id);
    if (it == by_id.end()) throw PreconditionError("no gold mention for " + p.mention_id);
    if (!it->second->gold_qid) throw PreconditionError("gold mention lacks gold_qid: " + p.mention_id);
    pairs.push_back({p.mention_id, *it->second->gold_qid, p.pred_qid, p.top_score.value_or(0.0)});
  }
  return pairs;
}

std::vector<EvalPair> pairs_from_predictions(std::span<const PredictionRecord> predictions) {
  std::vector<EvalPair> pairs;
  pairs.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (!p.gold_qid) throw PreconditionError("prediction lacks gold_qid: " + p.mention_id);
    pairs.push_back({p.mention_id, *p.gold_qid, p.pred_qid, p.top_score.value_or(0.0)});
  }
  return pairs;
}

json to_json(const MicroScores& s) {
  return {{"n", s.n},
          {"correct", s.correct},
          {"accuracy_f1", s.accuracy_f1},
          {"link_only",
           {{"precision", s.link_only.precision},
            {"recall", s.link_only.recall},
            {"f1", s.link_only.f1}}}};
}

json to_json(const NilReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn}};
}

json to_json(const CorrelationReport& r) {
  json obj = {{"r_pb", r.r_pb}, {"n", r.n}, {"t_stat", r.t_stat}};
  // Six decimals would print most p-values as zero.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", r.p_value);
  obj["p_value"] = buf;
  return obj;
}

json to_json(const ErrorTally& tally) {
  auto counts = [](const RelationCounts& cells) {
    json obj;
    for (ErrorRelation r : kErrorRelations) obj[to_string(r)] = cells[static_cast<std::size_t>(r)];
    return obj;
  };
  json datasets = json::object();
  for (const auto& [name, cells] : tally.by_dataset) datasets[name] = counts(cells);
  return {{"datasets", datasets}, {"totals", counts(tally.totals)}, {"total", tally.total}};
}

std::string format_table(const MicroScores& s) {
  return row("mentions", s.n) + row("correct", s.correct) + row("accuracy / micro F1", s.accuracy_f1) +
         row("link-only precision", s.link_only.precision) +
         row("link-only recall", s.link_only.recall) + row("link-only F1", s.link_only.f1);
}

std::string format_table(const NilReport& r) {
  return row("NIL precision", r.precision) + row("NIL recall", r.recall) + row("NIL F1", r.f1) +
         row("NIL tp", r.tp) + row("NIL fp", r.fp) + row("NIL fn", r.fn);
}

std::string format_table(const CorrelationReport& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-22s %10.3e\n", "p-value", r.p_value);
  return row("r_pb", r.r_pb) + row("n", r.n) + row("t statistic", r.t_stat) + buf;
}

std::string format_table(const ErrorTally& tally) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "Relation");
  out += buf;
  for (const auto& [name, cells] : tally.by_dataset) {
    std::snprintf(buf, sizeof buf, " %10s", name.c_str());
    out += buf;
  }
  out += "       Tot.\n";
  for (ErrorRelation r : kErrorRelations) {
    const auto i = static_cast<std::size_t>(r);
    std::snprintf(buf, sizeof buf, "%-10s", to_string(r));
    out += buf;
    for (const auto& [name, cells] : tally.by_dataset) {
      std::snprintf(buf, sizeof buf, " %10zu", cells[i]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %10zu\n", tally.totals[i]);
    out += buf;
  }
  return out;
}

}  // namespace mhel
