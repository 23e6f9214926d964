#include <algorithm>
#include <cmath>
#include <limits>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

namespace {

class Product : public Manifold {
 public:
  Product(std::vector<ManifoldHandle> parts, double tol, std::string kind)
      : Manifold(total(parts, &Manifold::ambient_dim), total(parts, &Manifold::intrinsic_dim),
                 tol),
        kind_(std::move(kind)) {
    if (parts.empty()) throw Error(ErrorCode::InvalidDimension, "empty product manifold");
    Index off = 0;
    for (const auto& p : parts) {
      if (p->kind() == "fixed-rank")
        throw Error(ErrorCode::Unsupported, "fixed-rank cannot be a product component");
      layout_.offsets.push_back(off);
      off += p->ambient_dim();
    }
    layout_.components = std::move(parts);
  }

  const ProductLayout& layout() const { return layout_; }

  std::string kind() const override { return kind_; }

  std::string describe() const override {
    std::string s = kind_ + "(";
    if (kind_ == "product-spheres") {
      for (std::size_t i = 0; i < size(); ++i)
        s += (i ? "," : "") + std::to_string(layout_.components[i]->ambient_dim());
    } else {
      for (std::size_t i = 0; i < size(); ++i)
        s += (i ? "," : "") + layout_.components[i]->describe();
    }
    return s + ")";
  }

  VectorXd project(const Point& x, const VectorXd& v) const override {
    VectorXd out(ambient_dim());
    for (std::size_t i = 0; i < size(); ++i)
      seg(out, i) = part(i).project(component_point(layout_, x, i), cseg(v, i));
    return out;
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    VectorXd out(ambient_dim());
    for (std::size_t i = 0; i < size(); ++i)
      seg(out, i) = part(i).retract(component_point(layout_, x, i), cseg(d, i)).coords;
    return Point{std::move(out), std::nullopt};
  }

  double inner(const Point& x, const VectorXd& u, const VectorXd& v) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      s += part(i).inner(component_point(layout_, x, i), cseg(u, i), cseg(v, i));
    return s;
  }

  double residual(const VectorXd& a) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += part(i).residual(cseg(a, i));
    return s;
  }

  double tangency_residual(const Point& x, const VectorXd& v) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      s += part(i).tangency_residual(component_point(layout_, x, i), cseg(v, i));
    return s;
  }

  double step_radius(const Point& x) const override {
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i)
      r = std::min(r, part(i).step_radius(component_point(layout_, x, i)));
    return r;
  }

  Point sample(Rng& rng) const override {
    VectorXd out(ambient_dim());
    for (std::size_t i = 0; i < size(); ++i) seg(out, i) = part(i).sample(rng).coords;
    return Point{std::move(out), std::nullopt};
  }

 private:
  static Index total(const std::vector<ManifoldHandle>& parts, Index (Manifold::*f)() const) {
    Index s = 0;
    for (const auto& p : parts) s += ((*p).*f)();
    return s;
  }

  std::size_t size() const { return layout_.components.size(); }
  const Manifold& part(std::size_t i) const { return *layout_.components[i]; }
  Eigen::VectorBlock<VectorXd> seg(VectorXd& v, std::size_t i) const {
    return v.segment(layout_.offsets[i], part(i).ambient_dim());
  }
  VectorXd cseg(const VectorXd& v, std::size_t i) const {
    return v.segment(layout_.offsets[i], part(i).ambient_dim());
  }

  ProductLayout layout_;
  std::string kind_;
};

}  // namespace

const ProductLayout* product_layout(const Manifold& m) {
  if (const auto* p = dynamic_cast<const Product*>(&m)) return &p->layout();
  return nullptr;
}

Point component_point(const ProductLayout& layout, const Point& x, std::size_t i) {
  const Index len = layout.components[i]->ambient_dim();
  return Point{x.coords.segment(layout.offsets[i], len), std::nullopt};
}

ManifoldHandle make_product(std::vector<ManifoldHandle> components, double tol) {
  return std::make_shared<Product>(std::move(components), tol, "product");
}

ManifoldHandle make_product_spheres(const std::vector<Index>& dims, double tol) {
  std::vector<ManifoldHandle> parts;
  parts.reserve(dims.size());
  for (Index n : dims) parts.push_back(make_sphere(n, tol));
  return std::make_shared<Product>(std::move(parts), tol, "product-spheres");
}

}  // namespace rdsopt
