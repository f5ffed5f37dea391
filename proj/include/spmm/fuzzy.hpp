#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spmm {

/// Membership function on a crisp axis, valued in [0, 1].
class MembershipFunction {
 public:
  enum class Shape { Triangular, Trapezoidal, ZShaped, SShaped };

  static MembershipFunction triangular(double a, double b, double c);
  static MembershipFunction trapezoidal(double a, double b, double c, double d);
  /// Smooth quadratic step from 1 at a down to 0 at b.
  static MembershipFunction z_shaped(double a, double b);
  /// Mirror of z_shaped: 0 at a up to 1 at b.
  static MembershipFunction s_shaped(double a, double b);

  double operator()(double x) const;

  Shape shape() const { return shape_; }
  std::span<const double> params() const { return {p_.data(), arity()}; }
  std::size_t arity() const;

 private:
  MembershipFunction(Shape shape, std::array<double, 4> p) : shape_(shape), p_(p) {}

  Shape shape_;
  std::array<double, 4> p_;
};

struct FuzzyTerm {
  std::string label;
  MembershipFunction mf;
};

/// Linguistic variable over a closed universe [lo, hi].
class FuzzyVariable {
 public:
  FuzzyVariable(std::string name, double lo, double hi, std::vector<FuzzyTerm> terms);

  const std::string& name() const { return name_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<FuzzyTerm>& terms() const { return terms_; }
  std::size_t term_index(const std::string& label) const;

  double clamp(double x) const;
  /// Membership of the clamped value in every term, in term order.
  std::vector<double> fuzzify(double crisp) const;
  double membership(const std::string& label, double crisp) const;

 private:
  std::string name_;
  double lo_;
  double hi_;
  std::vector<FuzzyTerm> terms_;
};

struct Rule {
  std::vector<std::pair<std::size_t, std::size_t>> antecedent;  ///< (input, term)
  std::size_t consequent = 0;                                    ///< output term
  double weight = 1.0;
};

/// Union of clipped consequent shapes: mu(x) = max_t min(level_t, term_t(x)).
struct FuzzyAggregate {
  const FuzzyVariable* output = nullptr;
  std::vector<double> levels;  ///< clip level per output term

  double operator()(double x) const;
  bool is_zero() const;
};

inline constexpr std::size_t kDefuzzifySamples = 201;

/// Centroid of the aggregate by the midpoint rule over `samples` equal cells
/// of the output universe. A zero aggregate defuzzifies to the midpoint.
double defuzzify_centroid(const FuzzyAggregate& agg, std::size_t samples = kDefuzzifySamples);

/// Mamdani rule base with min for AND, product with rule weight, and max
/// aggregation.
class RuleBase {
 public:
  RuleBase(std::vector<FuzzyVariable> inputs, FuzzyVariable output);

  /// Adds `if in1 is l1 and in2 is l2 ... then out is label`.
  void add_rule(const std::vector<std::pair<std::string, std::string>>& antecedent,
                const std::string& consequent, double weight = 1.0);

  const std::vector<FuzzyVariable>& inputs() const { return inputs_; }
  const FuzzyVariable& output() const { return output_; }
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t input_index(const std::string& name) const;

  /// Firing strength of every rule given per-input memberships.
  std::vector<double> firing_strengths(std::span<const std::vector<double>> memberships) const;
  /// The output variable must outlive the returned aggregate.
  FuzzyAggregate infer(std::span<const std::vector<double>> memberships) const;
  /// fuzzify -> infer -> defuzzify on crisp inputs given in input order.
  double evaluate(std::span<const double> crisp) const;

 private:
  std::vector<FuzzyVariable> inputs_;
  FuzzyVariable output_;
  std::vector<Rule> rules_;
};

/// Two-input (PD meters, HE degrees) rule base producing a [0, 100]
/// link likelihood.
RuleBase default_rule_base();

}  // namespace spmm
