#include "sgnn/analysis.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace sgnn {

std::vector<Eigen::Index> LuckyReport::all() const
{
  std::vector<Eigen::Index> out(positive);
  out.insert(out.end(), negative.begin(), negative.end());
  std::sort(out.begin(), out.end());
  return out;
}

double epsilon_K(double L, double K, double q) { return std::sqrt(L * L * std::log(q) / K); }

double coarse_lucky_bound(double L, double K, double sigma) { return (1.0 - 1.0 / std::sqrt(K) - L * sigma) / L; }

double lucky_fraction_bound(double L, double eps_K, double sigma) { return (1.0 - eps_K - L * sigma / std::numbers::pi) / L; }

LuckyReport detect_lucky(const Model& model, const PatternSet& patterns, double sigma, std::optional<double> eps_K)
{
  if (patterns.dimension() != model.dimension()) throw Error("dimension mismatch between model and patterns");
  LuckyReport rep;
  rep.width = static_cast<std::size_t>(model.width());
  for (Eigen::Index k = 0; k < model.width(); ++k) {
    if (!model.alive[k]) continue;
    const int sign = model.b[k] > 0 ? 1 : -1;
    (sign > 0 ? rep.class_positive : rep.class_negative)++;
    if (is_lucky(model.W.col(k), sign, patterns, sigma)) (sign > 0 ? rep.positive : rep.negative).push_back(k);
  }
  const double K = static_cast<double>(rep.width);
  const double L = static_cast<double>(patterns.count());
  rep.fraction_positive = static_cast<double>(rep.positive.size()) / K;
  rep.fraction_negative = static_cast<double>(rep.negative.size()) / K;
  rep.coarse_lucky_bound = coarse_lucky_bound(L, K, sigma);
  rep.lucky_fraction_bound = lucky_fraction_bound(L, eps_K ? *eps_K : epsilon_K(L, K, 10.0), sigma);
  return rep;
}

void ProjectionTrace::record(TrainPhase phase, int t, const Model& model, const PatternSet& patterns)
{
  if (signs.size() == 0) signs = model.b;
  phases.push_back(phase);
  iterations.push_back(t);
  values.push_back(model.W.transpose() * patterns.patterns);
}

void ProjectionTrace::write_csv(std::ostream& out) const
{
  static constexpr const char* names[] = {"init", "pretrain", "pruned", "retrain"};
  out << "phase,t,neuron,sign,pattern,value\n";
  for (std::size_t s = 0; s < values.size(); ++s)
    for (Eigen::Index k = 0; k < values[s].rows(); ++k)
      for (Eigen::Index p = 0; p < values[s].cols(); ++p)
        out << names[static_cast<int>(phases[s])] << ',' << iterations[s] << ',' << k << ',' << (signs[k] > 0 ? 1 : -1)
            << ',' << p << ',' << format_exact(values[s](k, p)) << '\n';
}

TrainHook projection_hook(ProjectionTrace& trace, const PatternSet& patterns, bool retrain_only, int stride)
{
  stride = std::max(stride, 1);
  return [&trace, &patterns, retrain_only, stride](TrainPhase phase, int t, const Model& model) {
    if (retrain_only && phase != TrainPhase::Retrain) return;
    if (t % stride != 0) return;
    trace.record(phase, t, model, patterns);
  };
}

double lucky_growth_reference(double c_eta, double alpha, double sigma, double r, double labeled, double q, int t)
{
  return c_eta * (alpha - sigma * std::sqrt((1.0 + r * r) * std::log(q) / labeled)) * t;
}

double unlucky_drift_reference(double c_eta, double sigma, double r, double labeled, double q, int t)
{
  return c_eta * (1.0 + sigma) * std::sqrt((1.0 + r * r) * std::log(q) / labeled) * t;
}

TraceCheck check_lucky_growth(const ProjectionTrace& trace, const std::vector<Eigen::Index>& lucky, double c_eta,
                              double alpha, int t_min, double factor)
{
  TraceCheck out;
  out.worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const int t = trace.iterations[s];
    if (trace.phases[s] != TrainPhase::Retrain || t < t_min) continue;
    const double need = factor * c_eta * alpha * t;
    for (auto k : lucky) {
      const double v = trace.values[s](k, trace.signs[k] > 0 ? 0 : 1);
      out.worst_ratio = std::min(out.worst_ratio, v / need);
      if (v < need && out.ok) {
        out.ok = false;
        out.first_failure = t;
      }
    }
  }
  return out;
}

TraceCheck check_unlucky_drift(const ProjectionTrace& trace, double c_eta, double sigma, double r, double labeled,
                               int t_min, double factor)
{
  TraceCheck out;
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const int t = trace.iterations[s];
    if (trace.phases[s] != TrainPhase::Retrain || t < t_min) continue;
    const double limit = factor * c_eta * (1.0 + sigma) * t * std::sqrt((1.0 + r * r) / labeled);
    const auto& v = trace.values[s];
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      if (trace.signs[k] > 0) continue;
      for (Eigen::Index p = 0; p < v.cols(); ++p) {
        if (p == 1) continue;
        const double x = std::abs(v(k, p));
        out.worst_ratio = std::max(out.worst_ratio, x / limit);
        if (x > limit && out.ok) {
          out.ok = false;
          out.first_failure = t;
        }
      }
    }
  }
  return out;
}

std::vector<ScatterRow> neuron_scatter(const Model& model, const PatternSet& patterns)
{
  std::vector<ScatterRow> rows;
  const double to_deg = 180.0 / std::numbers::pi;
  for (Eigen::Index k = 0; k < model.width(); ++k) {
    if (!model.alive[k]) continue;
    ScatterRow row;
    row.neuron = k;
    row.sign = model.b[k] > 0 ? 1 : -1;
    row.norm = model.W.col(k).norm();
    auto angle = [&](const auto& p) {
      if (row.norm == 0.0) return 90.0;
      return std::acos(std::clamp(model.W.col(k).dot(p) / (row.norm * p.norm()), -1.0, 1.0)) * to_deg;
    };
    row.angle_positive = angle(patterns.positive());
    row.angle_negative = angle(patterns.negative());
    rows.push_back(row);
  }
  return rows;
}

void write_scatter_csv(const std::vector<ScatterRow>& rows, std::ostream& out)
{
  out << "neuron,sign,norm,angle_positive,angle_negative\n";
  for (const auto& r : rows)
    out << r.neuron << ',' << r.sign << ',' << format_exact(r.norm) << ',' << format_exact(r.angle_positive) << ','
        << format_exact(r.angle_negative) << '\n';
}

namespace {

std::vector<double> ranks(const std::vector<double>& v)
{
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman needs two equal-length samples of size >= 2");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const Eigen::Map<const Eigen::VectorXd> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Eigen::VectorXd> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Eigen::VectorXd cx = x.array() - x.mean();
  const Eigen::VectorXd cy = y.array() - y.mean();
  const double denom = cx.norm() * cy.norm();
  return denom == 0.0 ? 0.0 : cx.dot(cy) / denom;
}

Eigen::MatrixXd vc_system_matrix(int m)
{
  return Eigen::MatrixXd::Ones(m, m) - Eigen::MatrixXd::Identity(m, m);
}

VcConstruction vc_construct(int L, const std::vector<int>& labels, bool include_center)
{
  if (L < 4 || L % 2 != 0) throw Error("VC construction needs an even L >= 4");
  if (L > 8) throw Error("VC construction is capped at L = 8");
  const int bits = L / 2 - 1;
  const int m = 1 << bits;
  if (static_cast<int>(labels.size()) != m) throw Error("VC construction needs 2^(L/2-1) labels");

  VcConstruction vc;
  vc.L = L;
  vc.points = m;
  vc.patterns.mode = PatternMode::Orthogonal;
  vc.patterns.patterns = Eigen::MatrixXd::Identity(L, L);

  // Star J: center (p+) followed by its bits leaves. Irrelevant pair i uses
  // pattern columns 2 + 2i (bit set) and 3 + 2i (bit clear).
  const int star = bits + 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(L, m * star);
  std::vector<Edge> edges;
  for (int J = 0; J < m; ++J) {
    const NodeId c = J * star;
    vc.centers.push_back(c);
    x(0, c) = 1.0;
    for (int i = 0; i < bits; ++i) {
      const NodeId leaf = c + 1 + i;
      x(((J >> i) & 1) ? 2 + 2 * i : 3 + 2 * i, leaf) = 1.0;
      edges.push_back({c, leaf});
    }
  }
  const auto nodes = static_cast<std::size_t>(m * star);
  vc.graph = StructuredGraph(x, std::vector<int>(nodes, 1), std::vector<Tag>(nodes, Tag::Unknown), edges, 0.0);

  // A(J, J') = 1 unless J' is the complement of J.
  Eigen::MatrixXd A = Eigen::MatrixXd::Ones(m, m);
  Eigen::VectorXd y(m);
  for (int J = 0; J < m; ++J) {
    A(J, (m - 1) ^ J) = 0.0;
    y[J] = labels[static_cast<std::size_t>(J)];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw Error("singular VC system");
  vc.coefficients = lu.solve(y);

  Eigen::MatrixXd W(L, 2 * m);
  Eigen::VectorXd b(2 * m);
  for (int J = 0; J < m; ++J) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(L);
    for (NodeId u : vc.graph.neighborhood(vc.centers[static_cast<std::size_t>(J)]))
      if (include_center || u != vc.centers[static_cast<std::size_t>(J)]) sum += vc.graph.feature(u);
    const double a = vc.coefficients[J];
    W.col(J) = std::max(a, 0.0) * sum;
    W.col(m + J) = std::max(-a, 0.0) * sum;
    b[J] = 1.0;
    b[m + J] = -1.0;
  }
  vc.model = Model(W, b, NormMode::OverK);
  return vc;
}

bool vc_realizes(const VcConstruction& vc, const std::vector<int>& labels)
{
  const auto batch = full_neighborhoods(vc.graph, vc.centers);
  const Eigen::VectorXd g = forward_batch(vc.model, vc.graph, batch);
  for (int J = 0; J < vc.points; ++J) {
    const int y = labels[static_cast<std::size_t>(J)];
    if (!(y * g[J] > 0.0)) return false;
  }
  return true;
}

VcSummary vc_verify(int L, bool include_center)
{
  if (L > 8) throw Error("VC verification is capped at L = 8");
  VcSummary s;
  const int m = 1 << (L / 2 - 1);
  s.points = m;
  s.labelings = 1L << m;
  for (long mask = 0; mask < s.labelings; ++mask) {
    std::vector<int> labels(static_cast<std::size_t>(m));
    for (int J = 0; J < m; ++J) labels[static_cast<std::size_t>(J)] = (mask >> J) & 1 ? 1 : -1;
    if (vc_realizes(vc_construct(L, labels, include_center), labels)) ++s.realized;
  }
  s.verified = s.realized == s.labelings;
  return s;
}

}  // namespace sgnn
