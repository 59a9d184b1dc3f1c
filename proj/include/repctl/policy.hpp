#ifndef REPCTL_POLICY_HPP
#define REPCTL_POLICY_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

namespace repctl {

/// mu(R, t) = mu.
struct ConstantPolicy {
  double mu = 0.0;
};

/// Bang-bang control in time only: |mu| = epsilon, starting with
/// initial_sign * epsilon and flipping at every switch time. At a switch time
/// the new sign is already in force.
struct PulsingPolicy {
  double epsilon = 0.0;
  std::vector<double> switch_times;  // ascending
  int initial_sign = -1;

  double control(double t) const;
  std::optional<double> next_switch_after(double t) const;
};

/// Control table over a (reputation, time) grid with nearest-node lookup.
/// Nearest is measured in log-reputation when the nodes are log-spaced.
class FeedbackPolicy {
 public:
  FeedbackPolicy(Eigen::VectorXd nodes, bool log_spaced, Eigen::VectorXd times,
                 Eigen::MatrixXd table, double epsilon);

  /// Throws DomainError outside [R_min (1 - tol), R_max (1 + tol)] x [0, T].
  double control(double R, double t) const;

  double epsilon() const noexcept { return epsilon_; }
  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& times() const noexcept { return times_; }
  const Eigen::MatrixXd& table() const noexcept { return table_; }

  static constexpr double kDomainTolerance = 1e-2;

 private:
  Eigen::Index nearest_node(double R) const;
  Eigen::Index nearest_time(double t) const;

  Eigen::VectorXd nodes_;
  bool log_spaced_;
  Eigen::VectorXd times_;
  Eigen::MatrixXd table_;
  double epsilon_;
};

/// Any admissible control rule mu(R, t).
class ControlPolicy {
 public:
  using Variant = std::variant<ConstantPolicy, PulsingPolicy, FeedbackPolicy>;

  ControlPolicy(ConstantPolicy p) : rule_(std::move(p)) {}
  ControlPolicy(PulsingPolicy p) : rule_(std::move(p)) {}
  ControlPolicy(FeedbackPolicy p) : rule_(std::move(p)) {}

  double operator()(double R, double t) const;

  /// Largest |mu| the rule can emit.
  double bound() const;

  /// Next time-only discontinuity strictly after t, if the rule has one.
  std::optional<double> next_switch_after(double t) const;

  const Variant& rule() const noexcept { return rule_; }

 private:
  Variant rule_;
};

/// Single switch family used by the switch-time sweep: +epsilon on
/// [0, t_switch), -epsilon afterwards.
PulsingPolicy one_switch_policy(double epsilon, double t_switch);

/// CSV with columns (t_switch, sign); the first row is (0, initial sign)
/// followed by one row per switch carrying the sign that takes over.
void write_csv(std::ostream& os, const PulsingPolicy& policy);

}  // namespace repctl

#endif  // REPCTL_POLICY_HPP
