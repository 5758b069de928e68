#pragma once

#include "sgnn/graph.hpp"
#include "sgnn/model.hpp"
#include "sgnn/trainer.hpp"

#include <iosfwd>
#include <vector>

namespace sgnn {

/// Margin test: a neuron with sign +1 is lucky when
///   <w, p+> - sigma |w|  >=  max_{p != p+} <w, p> + sigma |w|   and  <w, p+> > 0,
/// i.e. p+ wins max-pooling against every other pattern under any noise of
/// norm <= sigma. Neurons with sign -1 use p- instead.
template <typename Derived>
bool is_lucky(const Eigen::MatrixBase<Derived>& w, int sign, const PatternSet& patterns, double sigma)
{
  const Eigen::VectorXd proj = patterns.patterns.transpose() * w.template cast<double>();
  const Eigen::Index target = sign > 0 ? 0 : 1;
  if (!(proj[target] > 0.0)) return false;
  const double slack = 2.0 * sigma * w.template cast<double>().norm();
  for (Eigen::Index i = 0; i < proj.size(); ++i)
    if (i != target && proj[target] - slack < proj[i]) return false;
  return true;
}

struct LuckyReport
{
  std::vector<Eigen::Index> positive;  // lucky neurons in B+
  std::vector<Eigen::Index> negative;  // lucky neurons in B-
  std::size_t width = 0;               // K
  std::size_t class_positive = 0;      // surviving |B+|
  std::size_t class_negative = 0;      // surviving |B-|
  double fraction_positive = 0.0;      // |K+| / K
  double fraction_negative = 0.0;      // |K-| / K
  double coarse_lucky_bound = 0.0;            // (1 - K^-1/2 - L sigma) / L
  double lucky_fraction_bound = 0.0;           // (1 - eps_K - L sigma / pi) / L

  /// Sorted union of both lucky sets.
  std::vector<Eigen::Index> all() const;
};

/// sqrt(L^2 log q / K).
double epsilon_K(double L, double K, double q);
double coarse_lucky_bound(double L, double K, double sigma);
double lucky_fraction_bound(double L, double eps_K, double sigma);

/// Lucky sets among surviving neurons. eps_K defaults to epsilon_K(L, K, q=10).
LuckyReport detect_lucky(const Model& model, const PatternSet& patterns, double sigma,
                         std::optional<double> eps_K = std::nullopt);

/// Inner products <w_k, p> for every neuron and pattern, recorded per iteration.
struct ProjectionTrace
{
  std::vector<TrainPhase> phases;
  std::vector<int> iterations;
  std::vector<Eigen::MatrixXd> values;  // K x L each
  Eigen::VectorXd signs;

  std::size_t size() const noexcept { return values.size(); }
  void record(TrainPhase phase, int t, const Model& model, const PatternSet& patterns);
  /// CSV with header phase,t,neuron,sign,pattern,value.
  void write_csv(std::ostream& out) const;
};

/// Hook that fills `trace` every `stride` iterations of the chosen phases.
TrainHook projection_hook(ProjectionTrace& trace, const PatternSet& patterns, bool retrain_only = true, int stride = 1);

/// c_eta (alpha - sigma sqrt((1 + r^2) log q / |D|)) t
double lucky_growth_reference(double c_eta, double alpha, double sigma, double r, double labeled, double q, int t);
/// c_eta (1 + sigma) sqrt((1 + r^2) log q / |D|) t
double unlucky_drift_reference(double c_eta, double sigma, double r, double labeled, double q, int t);

struct TraceCheck
{
  bool ok = true;
  int first_failure = -1;
  double worst_ratio = 0.0;
};

/// min over `lucky` of <w_i(t), p_class> >= factor * c_eta * alpha * t for all
/// recorded retraining t >= t_min.
TraceCheck check_lucky_growth(const ProjectionTrace& trace, const std::vector<Eigen::Index>& lucky, double c_eta,
                              double alpha, int t_min = 5, double factor = 0.5);
/// max over j in B-, p != p- of |<w_j(t), p>| <= factor * c_eta (1 + sigma) t sqrt((1 + r^2) / |D|).
TraceCheck check_unlucky_drift(const ProjectionTrace& trace, double c_eta, double sigma, double r, double labeled,
                               int t_min = 1, double factor = 2.0);

struct ScatterRow
{
  Eigen::Index neuron = 0;
  int sign = 0;
  double norm = 0.0;
  double angle_positive = 0.0;  // degrees
  double angle_negative = 0.0;  // degrees
};

/// One row per surviving neuron.
std::vector<ScatterRow> neuron_scatter(const Model& model, const PatternSet& patterns);
void write_scatter_csv(const std::vector<ScatterRow>& rows, std::ostream& out);
/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Shattering construction for even L in [4, 8]: m = 2^(L/2-1) stars. Center
/// of star J carries p+; its L/2-1 leaves carry p_{2i-1} or p_{2i} (the i-th
/// pair of irrelevant patterns) depending on bit J_i.
struct VcConstruction
{
  int L = 0;
  int points = 0;                 // m
  PatternSet patterns;            // identity basis of R^L
  StructuredGraph graph;
  std::vector<NodeId> centers;    // center of D_J, indexed by J
  Eigen::VectorXd coefficients;   // alpha_J
  Model model;                    // 2m neurons: w_J (b = +1) then u_J (b = -1)
};

/// (ones - I) of size m: the system in the row order where row i carries label y of point i^dagger.
Eigen::MatrixXd vc_system_matrix(int m);

/// Builds the points and solves sum_{J' != 1-J} alpha_J' = y_J. Weights are
/// max(+-alpha_J, 0) times the summed leaf features of D_J; set
/// `include_center` to add the center's p+ to that sum as well.
VcConstruction vc_construct(int L, const std::vector<int>& labels, bool include_center = false);

/// sign(g(D_J)) == y_J for every J.
bool vc_realizes(const VcConstruction& vc, const std::vector<int>& labels);

struct VcSummary
{
  bool verified = false;
  int points = 0;
  long labelings = 0;
  long realized = 0;
};

/// Exhaustive check over all 2^m labelings (L <= 8).
VcSummary vc_verify(int L, bool include_center = false);

}  // namespace sgnn
