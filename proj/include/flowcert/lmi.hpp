// Affine matrix inequalities over named scalar variables, plus the primal
// SDP data used for worst-case extraction.
#pragma once

#include "flowcert/core_model.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace flowcert {

using nlohmann::json;

enum class Sign { Free, NonNeg };
enum class Sense { NegSemidef, PosSemidef };

// constant + sum_k coef_k * var_k, indices into an LmiSystem's variables.
struct Affine {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // sorted by index, no duplicates

  Affine() = default;
  Affine(double c) : constant(c) {}  // NOLINT: implicit on purpose
  static Affine var(int index, double coef = 1.0);

  bool is_constant() const { return terms.empty(); }
  double coef(int index) const;
  double eval(const Eigen::VectorXd& x) const;

  Affine& operator+=(const Affine& o);
  Affine& operator-=(const Affine& o);
  Affine& operator*=(double k);
};

Affine operator+(Affine a, const Affine& b);
Affine operator-(Affine a, const Affine& b);
Affine operator-(Affine a);
Affine operator*(double k, Affine a);
Affine operator*(Affine a, double k);
Affine operator/(Affine a, double k);

// Value and time derivative of one ansatz coefficient at a fixed instant;
// both affine so that fixed numbers and search variables share one path.
struct Term {
  Affine value;
  Affine deriv;

  Term() = default;
  Term(double v) : value(v), deriv(0.0) {}  // NOLINT
  Term(Affine v, Affine d) : value(std::move(v)), deriv(std::move(d)) {}
};

Term term_of(const Profile& p, double t);

struct Variable {
  std::string name;
  Sign sign = Sign::Free;
};

struct LmiBlock {
  std::string name;
  Sense sense = Sense::NegSemidef;
  int dim = 0;
  std::vector<Affine> lower;  // row-major lower triangle, (i,j) with j <= i

  LmiBlock() = default;
  LmiBlock(std::string n, Sense s, int d);
  Affine& at(int i, int j);
  const Affine& at(int i, int j) const;
  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
};

struct EqualityConstraint {
  std::string name;
  Affine expr;  // required == 0
};

class LmiSystem {
 public:
  int add_variable(const std::string& name, Sign sign);
  int index_of(const std::string& name) const;  // -1 when absent
  bool has_variable(const std::string& name) const { return index_of(name) >= 0; }
  Affine var(const std::string& name) const;

  LmiBlock& add_block(const std::string& name, Sense sense, int dim);
  void add_equality(const std::string& name, const Affine& expr);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LmiBlock>& blocks() const { return blocks_; }
  const std::vector<EqualityConstraint>& equalities() const { return equalities_; }
  std::vector<LmiBlock>& mutable_blocks() { return blocks_; }

  Eigen::VectorXd assignment_vector(const std::map<std::string, double>& values) const;
  std::map<std::string, double> assignment_map(const Eigen::VectorXd& x) const;

  // Appends every variable, block and equality of `other`, renaming its
  // variables with `suffix`; variables listed in `shared` keep their name and
  // are merged with existing ones.
  void append(const LmiSystem& other, const std::string& suffix,
              const std::vector<std::string>& shared = {});

  json to_json() const;
  static LmiSystem from_json(const json& j);

 private:
  std::vector<Variable> variables_;
  std::map<std::string, int> index_;
  std::vector<LmiBlock> blocks_;
  std::vector<EqualityConstraint> equalities_;
};

// max_F,G  b0^T F + Tr(A0 G)  s.t.  bk^T F + Tr(Ak G) >= 0,  G psd,
// and optionally bn^T F + Tr(An G) == value.
struct PrimalConstraint {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct PrimalNormalization {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double value = 1.0;
};

struct PrimalSdp {
  int gram_dimension = 0;
  int F_dimension = 0;
  Eigen::MatrixXd A0;
  Eigen::VectorXd b0;
  std::vector<PrimalConstraint> constraints;
  std::optional<PrimalNormalization> normalization;

  void validate() const;
  json to_json() const;
  static PrimalSdp from_json(const json& j);
};

json profile_to_json(const Profile& p);
Profile profile_from_json(const json& j);
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

}  // namespace flowcert
