#include "smcr/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "smcr/error.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

void RetrievalSet::validate() const {
  if (identities.size() != features.size() || cameras.size() != features.size())
    fail(ErrorKind::Shape, "retrieval set columns differ in length");
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::Degenerate, "cosine similarity of a zero vector");
  return dot(a, b) / (na * nb);
}

}  // namespace

std::vector<std::size_t> rank_gallery(std::span<const double> query, int query_identity, int query_camera,
                                      const RetrievalSet& gallery) {
  gallery.validate();
  std::vector<std::size_t> order;
  std::vector<double> sim(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    if (gallery.identities[g] == query_identity && gallery.cameras[g] == query_camera) continue;
    if (gallery.features[g].size() != query.size()) fail(ErrorKind::Shape, "query and gallery dimensions differ");
    sim[g] = cosine(query, gallery.features[g]);
    order.push_back(g);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  return order;
}

namespace {

QueryOutcome score_query(std::span<const double> query, int qid, int qcam, const RetrievalSet& gallery) {
  QueryOutcome out;
  const auto order = rank_gallery(query, qid, qcam, gallery);
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (gallery.identities[order[r]] != qid) continue;
    ++hits;
    if (hits == 1) out.first_hit_rank = r + 1;
    precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) {
    out.skipped = true;
    return out;
  }
  out.ap = precision_sum / static_cast<double>(hits);
  return out;
}

}  // namespace

std::optional<double> average_precision(std::span<const double> query, const RetrievalSet& gallery,
                                        int query_identity, int query_camera) {
  const auto q = score_query(query, query_identity, query_camera, gallery);
  if (q.skipped) return std::nullopt;
  return q.ap;
}

double RetrievalMetrics::cmc_at(std::size_t k) const {
  if (k == 0 || k > cmc.size()) fail(ErrorKind::Domain, "CMC rank out of range");
  return cmc[k - 1];
}

RetrievalMetrics evaluate_retrieval(const RetrievalSet& queries, const RetrievalSet& gallery, std::size_t max_rank) {
  queries.validate();
  gallery.validate();
  if (max_rank == 0) fail(ErrorKind::Domain, "max_rank must be positive");
  RetrievalMetrics m;
  m.cmc.assign(max_rank, 0.0);
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto outcome = score_query(queries.features[q], queries.identities[q], queries.cameras[q], gallery);
    outcome.query = q;
    if (outcome.skipped) {
      ++m.skipped;
    } else {
      ++m.evaluated;
      ap_sum += outcome.ap;
      for (std::size_t k = outcome.first_hit_rank; k <= max_rank; ++k) m.cmc[k - 1] += 1.0;
    }
    m.per_query.push_back(outcome);
  }
  if (m.evaluated == 0) fail(ErrorKind::Evaluation, "every query was skipped (no relevant gallery entries)");
  const double n = static_cast<double>(m.evaluated);
  m.mean_ap = ap_sum / n;
  for (double& c : m.cmc) c /= n;
  return m;
}

double mean_ap(const RetrievalSet& queries, const RetrievalSet& gallery) {
  return evaluate_retrieval(queries, gallery, 1).mean_ap;
}

double cmc(const RetrievalSet& queries, const RetrievalSet& gallery, std::size_t k) {
  return evaluate_retrieval(queries, gallery, k).cmc_at(k);
}

double pseudo_label_purity(std::span<const int> pseudo, std::span<const int> truth) {
  if (pseudo.size() != truth.size()) fail(ErrorKind::Shape, "pseudo and truth label lists differ in length");
  if (pseudo.empty()) fail(ErrorKind::Domain, "purity of an empty labelling");
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < pseudo.size(); ++i) ++counts[pseudo[i]][truth[i]];
  std::size_t pure = 0;
  for (const auto& [_, inner] : counts) {
    std::size_t best = 0;
    for (const auto& [__, c] : inner) best = std::max(best, c);
    pure += best;
  }
  return static_cast<double>(pure) / static_cast<double>(pseudo.size());
}

void write_per_query_csv(const RetrievalMetrics& metrics, std::ostream& out) {
  out << "query,skipped,ap,first_hit_rank\n";
  for (const auto& q : metrics.per_query)
    out << q.query << ',' << (q.skipped ? 1 : 0) << ',' << format_double(q.ap) << ',' << q.first_hit_rank << '\n';
}

std::string format_metrics(const std::map<std::string, double>& metrics) {
  std::string out;
  for (const auto& [k, v] : metrics) out += k + "=" + format_double(v) + "\n";
  return out;
}

}  // namespace smcr
