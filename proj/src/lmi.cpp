#include "flowcert/lmi.hpp"

#include <algorithm>
#include <stdexcept>

namespace flowcert {

Affine Affine::var(int index, double coef) {
  Affine a;
  if (coef != 0.0) a.terms.emplace_back(index, coef);
  return a;
}

double Affine::coef(int index) const {
  auto it = std::lower_bound(terms.begin(), terms.end(), std::make_pair(index, -kInf));
  if (it != terms.end() && it->first == index) return it->second;
  return 0.0;
}

double Affine::eval(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x[i];
  return v;
}

Affine& Affine::operator+=(const Affine& o) {
  constant += o.constant;
  std::vector<std::pair<int, double>> merged;
  merged.reserve(terms.size() + o.terms.size());
  size_t a = 0, b = 0;
  while (a < terms.size() || b < o.terms.size()) {
    if (b == o.terms.size() || (a < terms.size() && terms[a].first < o.terms[b].first)) {
      merged.push_back(terms[a++]);
    } else if (a == terms.size() || o.terms[b].first < terms[a].first) {
      merged.push_back(o.terms[b++]);
    } else {
      const double c = terms[a].second + o.terms[b].second;
      if (c != 0.0) merged.emplace_back(terms[a].first, c);
      ++a;
      ++b;
    }
  }
  terms.swap(merged);
  return *this;
}

Affine& Affine::operator-=(const Affine& o) { return *this += (-1.0) * o; }

Affine& Affine::operator*=(double k) {
  constant *= k;
  if (k == 0.0) {
    terms.clear();
  } else {
    for (auto& t : terms) t.second *= k;
  }
  return *this;
}

Affine operator+(Affine a, const Affine& b) { return a += b; }
Affine operator-(Affine a, const Affine& b) { return a -= b; }
Affine operator-(Affine a) { return a *= -1.0; }
Affine operator*(double k, Affine a) { return a *= k; }
Affine operator*(Affine a, double k) { return a *= k; }
Affine operator/(Affine a, double k) { return a *= 1.0 / k; }

Term term_of(const Profile& p, double t) { return Term(Affine(p.value(t)), Affine(p.derivative(t))); }

// ---------------------------------------------------------------- blocks

LmiBlock::LmiBlock(std::string n, Sense s, int d)
    : name(std::move(n)), sense(s), dim(d), lower(static_cast<size_t>(d * (d + 1) / 2)) {}

static int tri_index(int i, int j) {
  if (j > i) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

Affine& LmiBlock::at(int i, int j) {
  if (i < 0 || j < 0 || i >= dim || j >= dim) throw std::out_of_range("LmiBlock::at");
  return lower[tri_index(i, j)];
}

const Affine& LmiBlock::at(int i, int j) const {
  if (i < 0 || j < 0 || i >= dim || j >= dim) throw std::out_of_range("LmiBlock::at");
  return lower[tri_index(i, j)];
}

Eigen::MatrixXd LmiBlock::eval(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = at(i, j).eval(x);
  return m;
}

// ---------------------------------------------------------------- system

int LmiSystem::add_variable(const std::string& name, Sign sign) {
  if (index_.count(name)) throw std::invalid_argument("duplicate variable " + name);
  const int id = num_variables();
  variables_.push_back({name, sign});
  index_[name] = id;
  return id;
}

int LmiSystem::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Affine LmiSystem::var(const std::string& name) const {
  const int id = index_of(name);
  if (id < 0) throw std::invalid_argument("undeclared variable " + name);
  return Affine::var(id);
}

LmiBlock& LmiSystem::add_block(const std::string& name, Sense sense, int dim) {
  blocks_.emplace_back(name, sense, dim);
  return blocks_.back();
}

void LmiSystem::add_equality(const std::string& name, const Affine& expr) {
  for (const auto& [i, c] : expr.terms)
    if (i < 0 || i >= num_variables()) throw std::invalid_argument("equality uses undeclared variable");
  equalities_.push_back({name, expr});
}

Eigen::VectorXd LmiSystem::assignment_vector(const std::map<std::string, double>& values) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_variables());
  for (const auto& [name, v] : values) {
    const int id = index_of(name);
    if (id < 0) throw std::invalid_argument("assignment names unknown variable " + name);
    x[id] = v;
  }
  return x;
}

std::map<std::string, double> LmiSystem::assignment_map(const Eigen::VectorXd& x) const {
  std::map<std::string, double> out;
  for (int i = 0; i < num_variables(); ++i) out[variables_[i].name] = x[i];
  return out;
}

void LmiSystem::append(const LmiSystem& other, const std::string& suffix,
                       const std::vector<std::string>& shared) {
  std::vector<int> remap(other.num_variables());
  for (int i = 0; i < other.num_variables(); ++i) {
    const auto& v = other.variables_[i];
    const bool is_shared = std::find(shared.begin(), shared.end(), v.name) != shared.end();
    const std::string name = is_shared ? v.name : v.name + suffix;
    const int existing = index_of(name);
    if (existing >= 0) {
      if (!is_shared) throw std::invalid_argument("append: name clash on " + name);
      remap[i] = existing;
    } else {
      remap[i] = add_variable(name, v.sign);
    }
  }
  auto rename = [&](const Affine& a) {
    Affine out(a.constant);
    for (const auto& [i, c] : a.terms) out += Affine::var(remap[i], c);
    return out;
  };
  for (const auto& b : other.blocks_) {
    LmiBlock nb(b.name + suffix, b.sense, b.dim);
    for (size_t k = 0; k < b.lower.size(); ++k) nb.lower[k] = rename(b.lower[k]);
    blocks_.push_back(std::move(nb));
  }
  for (const auto& e : other.equalities_) equalities_.push_back({e.name + suffix, rename(e.expr)});
}

// ---------------------------------------------------------------- json

static json affine_to_json(const Affine& a, const std::vector<Variable>& vars) {
  json coeffs = json::object();
  for (const auto& [i, c] : a.terms) coeffs[vars[i].name] = c;
  return json{{"constant", a.constant}, {"coefficients", coeffs}};
}

static Affine affine_from_json(const json& j, const LmiSystem& sys) {
  Affine a(j.at("constant").get<double>());
  for (auto it = j.at("coefficients").begin(); it != j.at("coefficients").end(); ++it) {
    a += sys.var(it.key()) * it.value().get<double>();
  }
  return a;
}

json LmiSystem::to_json() const {
  json j;
  j["variables"] = json::array();
  for (const auto& v : variables_) {
    j["variables"].push_back({{"name", v.name}, {"sign", v.sign == Sign::NonNeg ? "nonneg" : "free"}});
  }
  j["blocks"] = json::array();
  for (const auto& b : blocks_) {
    json jb{{"name", b.name},
            {"sense", b.sense == Sense::NegSemidef ? "nsd" : "psd"},
            {"dim", b.dim},
            {"lower", json::array()}};
    for (const auto& e : b.lower) jb["lower"].push_back(affine_to_json(e, variables_));
    j["blocks"].push_back(jb);
  }
  j["equalities"] = json::array();
  for (const auto& e : equalities_) {
    json je = affine_to_json(e.expr, variables_);
    je["name"] = e.name;
    j["equalities"].push_back(je);
  }
  return j;
}

LmiSystem LmiSystem::from_json(const json& j) {
  LmiSystem sys;
  for (const auto& v : j.at("variables")) {
    const auto s = v.at("sign").get<std::string>();
    if (s != "nonneg" && s != "free") throw std::invalid_argument("bad sign " + s);
    sys.add_variable(v.at("name").get<std::string>(), s == "nonneg" ? Sign::NonNeg : Sign::Free);
  }
  for (const auto& jb : j.at("blocks")) {
    const auto s = jb.at("sense").get<std::string>();
    if (s != "nsd" && s != "psd") throw std::invalid_argument("bad sense " + s);
    const int dim = jb.at("dim").get<int>();
    LmiBlock& b = sys.add_block(jb.at("name").get<std::string>(),
                                s == "nsd" ? Sense::NegSemidef : Sense::PosSemidef, dim);
    if (jb.at("lower").size() != b.lower.size()) throw std::invalid_argument("block size mismatch");
    for (size_t k = 0; k < b.lower.size(); ++k) b.lower[k] = affine_from_json(jb.at("lower")[k], sys);
  }
  for (const auto& je : j.at("equalities")) {
    sys.add_equality(je.at("name").get<std::string>(), affine_from_json(je, sys));
  }
  return sys;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) throw std::invalid_argument("ragged matrix");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

static json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

static Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

void PrimalSdp::validate() const {
  auto check = [&](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    if (A.rows() != gram_dimension || A.cols() != gram_dimension)
      throw std::invalid_argument("primal: A has wrong dimension");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 0.0)
      throw std::invalid_argument("primal: A not symmetric");
    if (b.size() != F_dimension) throw std::invalid_argument("primal: b has wrong dimension");
  };
  check(A0, b0);
  for (const auto& c : constraints) check(c.A, c.b);
  if (normalization) check(normalization->A, normalization->b);
}

json PrimalSdp::to_json() const {
  json j{{"gram_dimension", gram_dimension},
         {"F_dimension", F_dimension},
         {"A0", matrix_to_json(A0)},
         {"b0", vector_to_json(b0)},
         {"constraints", json::array()}};
  for (const auto& c : constraints)
    j["constraints"].push_back({{"A", matrix_to_json(c.A)}, {"b", vector_to_json(c.b)}});
  if (normalization) {
    j["normalization"] = {{"A", matrix_to_json(normalization->A)},
                          {"b", vector_to_json(normalization->b)},
                          {"value", normalization->value}};
  }
  return j;
}

PrimalSdp PrimalSdp::from_json(const json& j) {
  PrimalSdp p;
  p.gram_dimension = j.at("gram_dimension").get<int>();
  p.F_dimension = j.at("F_dimension").get<int>();
  p.A0 = matrix_from_json(j.at("A0"));
  p.b0 = vector_from_json(j.at("b0"));
  for (const auto& c : j.at("constraints"))
    p.constraints.push_back({matrix_from_json(c.at("A")), vector_from_json(c.at("b"))});
  if (j.contains("normalization")) {
    const auto& n = j.at("normalization");
    p.normalization = PrimalNormalization{matrix_from_json(n.at("A")), vector_from_json(n.at("b")),
                                          n.at("value").get<double>()};
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------- profiles

json profile_to_json(const Profile& p) {
  static const char* kinds[] = {"Constant", "PowerShift", "Reciprocal", "Exponential", "Sum", "Product"};
  json j{{"family", kinds[static_cast<int>(p.kind())]}};
  if (p.kind() == Profile::Kind::Sum || p.kind() == Profile::Kind::Product) {
    j["args"] = json::array({profile_to_json(p.lhs()), profile_to_json(p.rhs())});
  } else {
    j["params"] = p.params();
  }
  return j;
}

Profile profile_from_json(const json& j) {
  const auto fam = j.at("family").get<std::string>();
  if (fam == "Sum" || fam == "Product") {
    const auto& a = j.at("args");
    if (a.size() != 2) throw std::invalid_argument("composite profile needs two args");
    const Profile l = profile_from_json(a[0]), r = profile_from_json(a[1]);
    return fam == "Sum" ? Profile::sum(l, r) : Profile::product(l, r);
  }
  const auto p = j.at("params").get<std::vector<double>>();
  auto need = [&](size_t n) {
    if (p.size() != n) throw std::invalid_argument(fam + " expects " + std::to_string(n) + " params");
  };
  if (fam == "Constant") { need(1); return Profile::constant(p[0]); }
  if (fam == "PowerShift") { need(3); return Profile::power_shift(p[0], p[1], p[2]); }
  if (fam == "Reciprocal") { need(1); return Profile::reciprocal(p[0]); }
  if (fam == "Exponential") { need(2); return Profile::exponential(p[0], p[1]); }
  throw std::invalid_argument("unknown profile family " + fam);
}

}  // namespace flowcert
