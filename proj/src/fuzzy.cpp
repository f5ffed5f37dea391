#include "spmm/fuzzy.hpp"

#include <algorithm>
#include <cmath>

#include "spmm/error.hpp"

namespace spmm {

namespace {

double zmf(double x, double a, double b) {
  if (x <= a) return 1.0;
  if (x >= b) return 0.0;
  const double mid = 0.5 * (a + b);
  const double w = b - a;
  if (x <= mid) {
    const double u = (x - a) / w;
    return 1.0 - 2.0 * u * u;
  }
  const double u = (x - b) / w;
  return 2.0 * u * u;
}

double rising(double x, double a, double b) { return a == b ? 1.0 : (x - a) / (b - a); }
double falling(double x, double c, double d) { return c == d ? 1.0 : (d - x) / (d - c); }

}  // namespace

MembershipFunction MembershipFunction::triangular(double a, double b, double c) {
  if (!(a <= b && b <= c) || a == c) throw DomainError("triangular needs a <= b <= c, a < c");
  return {Shape::Triangular, {a, b, c, 0.0}};
}

MembershipFunction MembershipFunction::trapezoidal(double a, double b, double c, double d) {
  if (!(a <= b && b <= c && c <= d) || a == d) {
    throw DomainError("trapezoidal needs a <= b <= c <= d, a < d");
  }
  return {Shape::Trapezoidal, {a, b, c, d}};
}

MembershipFunction MembershipFunction::z_shaped(double a, double b) {
  if (!(a < b)) throw DomainError("z-shaped needs a < b");
  return {Shape::ZShaped, {a, b, 0.0, 0.0}};
}

MembershipFunction MembershipFunction::s_shaped(double a, double b) {
  if (!(a < b)) throw DomainError("s-shaped needs a < b");
  return {Shape::SShaped, {a, b, 0.0, 0.0}};
}

std::size_t MembershipFunction::arity() const {
  switch (shape_) {
    case Shape::Triangular: return 3;
    case Shape::Trapezoidal: return 4;
    default: return 2;
  }
}

double MembershipFunction::operator()(double x) const {
  const auto& [a, b, c, d] = p_;
  switch (shape_) {
    case Shape::Triangular:
      if (x < a || x > c) return 0.0;
      return x <= b ? rising(x, a, b) : falling(x, b, c);
    case Shape::Trapezoidal:
      if (x < a || x > d) return 0.0;
      if (x < b) return rising(x, a, b);
      if (x <= c) return 1.0;
      return falling(x, c, d);
    case Shape::ZShaped:
      return zmf(x, a, b);
    case Shape::SShaped:
      return 1.0 - zmf(x, a, b);
  }
  return 0.0;
}

FuzzyVariable::FuzzyVariable(std::string name, double lo, double hi, std::vector<FuzzyTerm> terms)
    : name_(std::move(name)), lo_(lo), hi_(hi), terms_(std::move(terms)) {
  if (!(lo < hi)) throw DomainError("variable '" + name_ + "' has an empty universe");
  if (terms_.empty()) throw DomainError("variable '" + name_ + "' has no terms");
  // Complete coverage, checked on a fine grid.
  constexpr int kProbe = 1000;
  for (int i = 0; i <= kProbe; ++i) {
    const double x = lo_ + (hi_ - lo_) * i / kProbe;
    const bool covered = std::any_of(terms_.begin(), terms_.end(),
                                     [x](const FuzzyTerm& t) { return t.mf(x) > 0.0; });
    if (!covered) {
      throw DomainError("variable '" + name_ + "' leaves " + std::to_string(x) + " uncovered");
    }
  }
}

std::size_t FuzzyVariable::term_index(const std::string& label) const {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].label == label) return i;
  }
  throw DomainError("variable '" + name_ + "' has no term '" + label + "'");
}

double FuzzyVariable::clamp(double x) const { return std::clamp(x, lo_, hi_); }

std::vector<double> FuzzyVariable::fuzzify(double crisp) const {
  const double x = clamp(crisp);
  std::vector<double> m(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) m[i] = std::clamp(terms_[i].mf(x), 0.0, 1.0);
  return m;
}

double FuzzyVariable::membership(const std::string& label, double crisp) const {
  return fuzzify(crisp)[term_index(label)];
}

double FuzzyAggregate::operator()(double x) const {
  double mu = 0.0;
  const auto& terms = output->terms();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (levels[t] <= 0.0) continue;
    mu = std::max(mu, std::min(levels[t], terms[t].mf(x)));
  }
  return mu;
}

bool FuzzyAggregate::is_zero() const {
  return std::all_of(levels.begin(), levels.end(), [](double l) { return l <= 0.0; });
}

double defuzzify_centroid(const FuzzyAggregate& agg, std::size_t samples) {
  const double lo = agg.output->lo();
  const double hi = agg.output->hi();
  const double mid = 0.5 * (lo + hi);
  if (samples == 0 || agg.is_zero()) return mid;
  const double w = (hi - lo) / static_cast<double>(samples);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = lo + (static_cast<double>(i) + 0.5) * w;
    const double mu = agg(x);
    num += x * mu;
    den += mu;
  }
  if (den <= 0.0) return mid;
  return std::clamp(num / den, lo, hi);
}

RuleBase::RuleBase(std::vector<FuzzyVariable> inputs, FuzzyVariable output)
    : inputs_(std::move(inputs)), output_(std::move(output)) {
  if (inputs_.empty()) throw DomainError("rule base needs at least one input");
}

std::size_t RuleBase::input_index(const std::string& name) const {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (inputs_[i].name() == name) return i;
  }
  throw DomainError("unknown input variable '" + name + "'");
}

void RuleBase::add_rule(const std::vector<std::pair<std::string, std::string>>& antecedent,
                        const std::string& consequent, double weight) {
  if (antecedent.empty()) throw DomainError("rule needs an antecedent");
  if (!(weight >= 0.0 && weight <= 1.0)) throw DomainError("rule weight must lie in [0, 1]");
  Rule r;
  for (const auto& [var, label] : antecedent) {
    const auto vi = input_index(var);
    r.antecedent.emplace_back(vi, inputs_[vi].term_index(label));
  }
  r.consequent = output_.term_index(consequent);
  r.weight = weight;
  rules_.push_back(std::move(r));
}

std::vector<double> RuleBase::firing_strengths(
    std::span<const std::vector<double>> memberships) const {
  if (memberships.size() != inputs_.size()) throw DomainError("wrong number of inputs");
  std::vector<double> s(rules_.size());
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    double strength = 1.0;
    for (const auto& [vi, ti] : rules_[r].antecedent) {
      strength = std::min(strength, memberships[vi][ti]);
    }
    s[r] = strength * rules_[r].weight;
  }
  return s;
}

FuzzyAggregate RuleBase::infer(std::span<const std::vector<double>> memberships) const {
  const auto strengths = firing_strengths(memberships);
  FuzzyAggregate agg{&output_, std::vector<double>(output_.terms().size(), 0.0)};
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    auto& level = agg.levels[rules_[r].consequent];
    level = std::max(level, strengths[r]);
  }
  return agg;
}

double RuleBase::evaluate(std::span<const double> crisp) const {
  if (crisp.size() != inputs_.size()) throw DomainError("wrong number of inputs");
  std::vector<std::vector<double>> m;
  m.reserve(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) m.push_back(inputs_[i].fuzzify(crisp[i]));
  return defuzzify_centroid(infer(m));
}

RuleBase default_rule_base() {
  using MF = MembershipFunction;
  FuzzyVariable pd("pd", 0.0, 100.0,
                   {{"short", MF::z_shaped(10, 40)}, {"long", MF::s_shaped(10, 40)}});
  FuzzyVariable he("he", 0.0, 180.0,
                   {{"small", MF::z_shaped(15, 60)}, {"large", MF::s_shaped(15, 60)}});
  FuzzyVariable likelihood("likelihood", 0.0, 100.0,
                           {{"low", MF::triangular(0, 0, 50)},
                            {"average", MF::triangular(25, 50, 75)},
                            {"high", MF::triangular(50, 100, 100)}});
  RuleBase rb({std::move(pd), std::move(he)}, std::move(likelihood));
  rb.add_rule({{"pd", "short"}, {"he", "small"}}, "high");
  rb.add_rule({{"pd", "short"}, {"he", "large"}}, "average");
  rb.add_rule({{"pd", "long"}, {"he", "small"}}, "average");
  rb.add_rule({{"pd", "long"}, {"he", "large"}}, "low");
  return rb;
}

}  // namespace spmm
