#include "rdsopt/manifold.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

namespace rdsopt {

namespace {

std::uint64_t hash_doubles(const double* data, Index n, std::uint64_t h) {
  for (Index i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    h = combine_seed(h, bits);
  }
  return h;
}

}  // namespace

std::uint64_t fingerprint(const Point& x) {
  std::uint64_t h = hash_doubles(x.coords.data(), x.coords.size(), 0x51ed270b27ULL);
  if (x.factors) {
    h = hash_doubles(x.factors->u.data(), x.factors->u.size(), h);
    h = hash_doubles(x.factors->s.data(), x.factors->s.size(), h);
    h = hash_doubles(x.factors->v.data(), x.factors->v.size(), h);
  }
  return h;
}

double Manifold::inner(const Point&, const VectorXd& u, const VectorXd& v) const {
  return u.dot(v);
}

double Manifold::tangency_residual(const Point& x, const VectorXd& v) const {
  return (v - project(x, v)).norm();
}

Point Manifold::random_point(std::uint64_t seed) const {
  Rng rng(mix64(seed));
  return sample(rng);
}

void Manifold::check_ambient(const VectorXd& v, const char* what) const {
  if (v.size() != ambient_dim_) {
    throw Error(ErrorCode::InvalidShape,
                std::string(what) + ": expected ambient length " +
                    std::to_string(ambient_dim_) + " for " + describe() + ", got " +
                    std::to_string(v.size()));
  }
}

TangentVector project_tangent(const Manifold& m, const Point& x, const VectorXd& v) {
  m.check_ambient(v, "project_tangent");
  return TangentVector{m.project(x, v), fingerprint(x)};
}

Point retract(const Manifold& m, const Point& x, const TangentVector& d) {
  m.check_ambient(d.v, "retract");
  if (d.base != fingerprint(x))
    throw Error(ErrorCode::BaseMismatch, "retract: tangent vector is not based at x");
  return m.retract(x, d.v);
}

double inner(const Manifold& m, const Point& x, const TangentVector& u,
             const TangentVector& v) {
  const auto base = fingerprint(x);
  if (u.base != base || v.base != base)
    throw Error(ErrorCode::BaseMismatch, "inner: tangent vectors based elsewhere");
  return m.inner(x, u.v, v.v);
}

double norm(const Manifold& m, const Point& x, const TangentVector& u) {
  return std::sqrt(inner(m, x, u, u));
}

double constraint_residual(const Manifold& m, const VectorXd& a) {
  m.check_ambient(a, "constraint_residual");
  return m.residual(a);
}

Point random_point(const Manifold& m, std::uint64_t seed) { return m.random_point(seed); }

TangentVector zero_tangent(const Manifold& m, const Point& x) {
  return TangentVector{VectorXd::Zero(m.ambient_dim()), fingerprint(x)};
}

VectorXd random_unit_tangent(const Manifold& m, const Point& x, Rng& rng) {
  for (;;) {
    VectorXd v = m.project(x, random_normal(rng, m.ambient_dim()));
    const double n = std::sqrt(m.inner(x, v, v));
    if (n > 1e-12) return v / n;
  }
}

MatrixXd qf_positive(const MatrixXd& a) {
  const Index n = a.rows();
  const Index p = a.cols();
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, p);
  const auto& r = qr.matrixQR();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// ---------------------------------------------------------------------------
// parse_manifold

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ManifoldHandle parse() {
    auto m = manifold();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return m;
  }

 private:
  ManifoldHandle manifold() {
    const std::string name = ident();
    expect('(');
    if (name == "product") {
      std::vector<ManifoldHandle> parts{manifold()};
      while (accept(',')) parts.push_back(manifold());
      expect(')');
      return make_product(std::move(parts));
    }
    std::vector<Index> args{number()};
    while (accept(',')) args.push_back(number());
    expect(')');
    auto want = [&](std::size_t n) {
      if (args.size() != n) fail(name + " takes " + std::to_string(n) + " arguments");
    };
    if (name == "sphere") { want(1); return make_sphere(args[0]); }
    if (name == "product-spheres") return make_product_spheres(args);
    if (name == "stiefel") { want(2); return make_stiefel(args[0], args[1]); }
    if (name == "so") { want(1); return make_special_orthogonal(args[0]); }
    if (name == "fixed-rank") { want(3); return make_fixed_rank(args[0], args[1], args[2]); }
    if (name == "spd") { want(1); return make_spd(args[0]); }
    if (name == "simplex") { want(1); return make_simplex(args[0]); }
    if (name == "euclidean") { want(1); return make_euclidean(args[0]); }
    fail("unknown manifold kind '" + name + "'");
  }

  std::string ident() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-'))
      ++pos_;
    if (start == pos_) fail("expected a manifold kind");
    return s_.substr(start, pos_ - start);
  }

  Index number() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    return static_cast<Index>(std::stoll(s_.substr(start, pos_ - start)));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::InvalidConfig,
                "manifold '" + s_ + "' at " + std::to_string(pos_) + ": " + msg);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace

ManifoldHandle parse_manifold(const std::string& text) { return Parser(text).parse(); }

}  // namespace rdsopt
