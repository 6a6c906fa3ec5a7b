#pragma once

// Re-identification style retrieval metrics (mAP, CMC rank-k) and pseudo-label
// purity against withheld identities.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smcr/numerics.hpp"

namespace smcr {

struct RetrievalSet {
  std::vector<Vector> features;
  std::vector<int> identities;
  std::vector<int> cameras;

  std::size_t size() const { return features.size(); }
  void validate() const;
};

/// Gallery indices ranked by descending cosine similarity to the query, ties by
/// ascending index, with same-identity-same-camera entries removed.
std::vector<std::size_t> rank_gallery(std::span<const double> query, int query_identity, int query_camera,
                                      const RetrievalSet& gallery);

/// Mean over relevant positions k of (#relevant in top k) / k. nullopt when the
/// query has no relevant gallery entry after exclusion.
std::optional<double> average_precision(std::span<const double> query, const RetrievalSet& gallery,
                                        int query_identity, int query_camera);

struct QueryOutcome {
  std::size_t query = 0;
  bool skipped = false;
  double ap = 0.0;
  std::size_t first_hit_rank = 0;  // 1-based
};

struct RetrievalMetrics {
  double mean_ap = 0.0;
  std::vector<double> cmc;  // cmc[k-1] = CMC@k
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<QueryOutcome> per_query;

  double cmc_at(std::size_t k) const;
};

/// Throws Evaluation when every query is skipped.
RetrievalMetrics evaluate_retrieval(const RetrievalSet& queries, const RetrievalSet& gallery,
                                    std::size_t max_rank = 10);
double mean_ap(const RetrievalSet& queries, const RetrievalSet& gallery);
double cmc(const RetrievalSet& queries, const RetrievalSet& gallery, std::size_t k);

/// Sum over pseudo classes of the largest ground-truth count inside, over N.
/// Throws Shape on length mismatch.
double pseudo_label_purity(std::span<const int> pseudo, std::span<const int> truth);

void write_per_query_csv(const RetrievalMetrics& metrics, std::ostream& out);
/// key=value lines in key order.
std::string format_metrics(const std::map<std::string, double>& metrics);

}  // namespace smcr
