#pragma once

#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stem/corpus.hpp"
#include "stem/detail/format.hpp"
#include "stem/embed.hpp"

namespace stem {

struct PrincipalAxis {
  Eigen::VectorXd direction;  // unit norm; zero when the variance is exhausted
  double variance = 0.0;
};

/// Dominant eigenpair of a symmetric PSD matrix by power iteration. The sign
/// is fixed so that the largest-magnitude component is positive.
inline PrincipalAxis power_iteration(const Eigen::MatrixXd& cov, int max_iterations = 10000,
                                     double tolerance = 1e-12) {
  const auto n = cov.rows();
  PrincipalAxis axis;
  axis.direction = Eigen::VectorXd::Zero(n);
  if (n == 0) return axis;

  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = cov * x;
    const double norm = next.norm();
    if (norm <= 1e-14 * scale) return axis;
    next /= norm;
    const double change = (next - x).norm();
    x = std::move(next);
    if (change < tolerance) break;
  }
  Eigen::Index argmax = 0;
  x.cwiseAbs().maxCoeff(&argmax);
  if (x(argmax) < 0) x = -x;
  axis.direction = x;
  axis.variance = x.dot(cov * x);
  return axis;
}

struct PcaPoint {
  SpeakerId speaker;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

/// Projects each vector onto the top two principal directions of the
/// embedding's covariance, found by power iteration with deflation. Vectors
/// are projected as-is (not centered), so class means keep their side.
inline std::vector<PcaPoint> principal_projection(const SpeakerEmbedding& emb) {
  std::vector<PcaPoint> out;
  const auto k = emb.vectors.cols();
  if (k == 0) return out;
  const Eigen::VectorXd mean = emb.vectors.rowwise().mean();
  const Eigen::MatrixXd centered = emb.vectors.colwise() - mean;
  Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(k);

  const PrincipalAxis first = power_iteration(cov);
  cov -= first.variance * first.direction * first.direction.transpose();
  const PrincipalAxis second = power_iteration(cov);

  for (Eigen::Index i = 0; i < k; ++i)
    out.push_back({emb.order[static_cast<std::size_t>(i)], first.direction.dot(emb.vectors.col(i)),
                   second.direction.dot(emb.vectors.col(i))});
  return out;
}

/// CSV `speaker,pc1,pc2,label`.
inline void write_pca_csv(std::ostream& os, const std::vector<PcaPoint>& points,
                          const std::map<SpeakerId, StanceLabel>& labels) {
  os << "speaker,pc1,pc2,label\n";
  for (const auto& p : points) {
    auto it = labels.find(p.speaker);
    os << detail::csv_field(p.speaker) << ',' << detail::format_double(p.pc1) << ','
       << detail::format_double(p.pc2) << ',' << (it == labels.end() ? "" : to_string(it->second)) << '\n';
  }
}

}  // namespace stem
