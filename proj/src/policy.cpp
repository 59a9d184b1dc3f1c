#include "repctl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "repctl/csv.hpp"
#include "repctl/errors.hpp"

namespace repctl {

double PulsingPolicy::control(double t) const {
  const auto flips = std::upper_bound(switch_times.begin(), switch_times.end(), t) -
                     switch_times.begin();
  const int sign = (flips % 2 == 0) ? initial_sign : -initial_sign;
  return sign * epsilon;
}

std::optional<double> PulsingPolicy::next_switch_after(double t) const {
  auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  if (it == switch_times.end()) return std::nullopt;
  return *it;
}

FeedbackPolicy::FeedbackPolicy(Eigen::VectorXd nodes, bool log_spaced,
                               Eigen::VectorXd times, Eigen::MatrixXd table,
                               double epsilon)
    : nodes_(std::move(nodes)),
      log_spaced_(log_spaced),
      times_(std::move(times)),
      table_(std::move(table)),
      epsilon_(epsilon) {
  if (nodes_.size() < 2 || times_.size() < 1 || table_.rows() != nodes_.size() ||
      table_.cols() != times_.size())
    throw DomainError("FeedbackPolicy: table shape does not match the grid");
}

Eigen::Index FeedbackPolicy::nearest_node(double R) const {
  const auto n = nodes_.size();
  const auto* first = nodes_.data();
  const auto* it = std::lower_bound(first, first + n, R);
  if (it == first) return 0;
  if (it == first + n) return n - 1;
  const Eigen::Index hi = it - first;
  const Eigen::Index lo = hi - 1;
  double d_lo = R - nodes_[lo];
  double d_hi = nodes_[hi] - R;
  if (log_spaced_) {
    d_lo = std::log(R / nodes_[lo]);
    d_hi = std::log(nodes_[hi] / R);
  }
  return d_hi < d_lo ? hi : lo;
}

Eigen::Index FeedbackPolicy::nearest_time(double t) const {
  const auto n = times_.size();
  const auto* first = times_.data();
  const auto* it = std::lower_bound(first, first + n, t);
  if (it == first) return 0;
  if (it == first + n) return n - 1;
  const Eigen::Index hi = it - first;
  const Eigen::Index lo = hi - 1;
  return (times_[hi] - t) < (t - times_[lo]) ? hi : lo;
}

double FeedbackPolicy::control(double R, double t) const {
  const double r_lo = nodes_[0] * (1.0 - kDomainTolerance);
  const double r_hi = nodes_[nodes_.size() - 1] * (1.0 + kDomainTolerance);
  if (!(R >= r_lo && R <= r_hi))
    throw DomainError("FeedbackPolicy: reputation outside the solved grid");
  if (!(t >= times_[0] && t <= times_[times_.size() - 1]))
    throw DomainError("FeedbackPolicy: time outside the solved horizon");
  return table_(nearest_node(R), nearest_time(t));
}

double ControlPolicy::operator()(double R, double t) const {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantPolicy>) {
          return p.mu;
        } else if constexpr (std::is_same_v<P, PulsingPolicy>) {
          return p.control(t);
        } else {
          return p.control(R, t);
        }
      },
      rule_);
}

double ControlPolicy::bound() const {
  return std::visit(
      [](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantPolicy>) {
          return std::abs(p.mu);
        } else if constexpr (std::is_same_v<P, PulsingPolicy>) {
          return std::abs(p.epsilon);
        } else {
          return p.table().size() ? p.table().cwiseAbs().maxCoeff() : 0.0;
        }
      },
      rule_);
}

std::optional<double> ControlPolicy::next_switch_after(double t) const {
  if (const auto* p = std::get_if<PulsingPolicy>(&rule_)) return p->next_switch_after(t);
  return std::nullopt;
}

PulsingPolicy one_switch_policy(double epsilon, double t_switch) {
  return PulsingPolicy{epsilon, {t_switch}, +1};
}

void write_csv(std::ostream& os, const PulsingPolicy& policy) {
  csv::header(os, {"t_switch", "sign"});
  int sign = policy.initial_sign;
  csv::row(os, {0.0, static_cast<double>(sign)});
  for (double t : policy.switch_times) {
    sign = -sign;
    csv::row(os, {t, static_cast<double>(sign)});
  }
}

}  // namespace repctl
