#include "lent/lent_particle.hpp"

#include <cmath>
#include <utility>

#include "lent/errors.hpp"
#include "lent/sde_flow.hpp"

namespace lent {

OneMarkMap Functional::one_mark_map(const Configuration& rest, const BasePoint& base) const {
  OneMarkMap g;
  g.output_dim = output_dim();
  g.eval = [this, rest, base](const Mark& u) {
    return eval(eps_plus(rest, MarkedPoint{base, u}));
  };
  return g;
}

namespace {

// F = sum over points of f(base, mark). Covers both N(f) and transformed
// jump sums; the distinction is the caller's choice of f.
class SumFunctional final : public Functional {
 public:
  explicit SumFunctional(PointMap f) : f_(std::move(f)) {
    if (!f_.eval) throw Error("jump-sum functional needs an evaluator");
    if (f_.output_dim < 1) throw Error("jump-sum functional needs positive output dimension");
  }

  int output_dim() const override { return f_.output_dim; }

  Eigen::VectorXd eval(const Configuration& cfg) const override {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(f_.output_dim);
    for (const MarkedPoint& p : cfg.points()) sum += f_.eval(p.base, p.mark);
    return sum;
  }

  OneMarkMap one_mark_map(const Configuration& rest, const BasePoint& base) const override {
    OneMarkMap g = Functional::one_mark_map(rest, base);
    if (f_.dtheta) {
      // The rest-sum is constant in u, so the derivative is f's alone.
      g.angle_deriv = [f = f_, base](const Mark& u) {
        return f.dtheta(base, mark_angle(u));
      };
    }
    if (f_.sde_terminal) {
      OneMarkMap::SdeTerminal sde;
      sde.start = base.attribute;
      const int k = f_.output_dim;
      sde.outer_jacobian = [k](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(k, k).eval();
      };
      g.sde = std::move(sde);
    }
    return g;
  }

  std::optional<Eigen::VectorXd> inplace_angle_deriv(const Configuration& cfg,
                                                     std::size_t i) const override {
    if (!f_.dtheta) return std::nullopt;
    const MarkedPoint& p = cfg.points()[i];
    return f_.dtheta(p.base, mark_angle(p.mark));
  }

  std::optional<Eigen::MatrixXd> inplace_outer_jacobian(const Configuration&,
                                                        std::size_t) const override {
    if (!f_.sde_terminal) return std::nullopt;
    return Eigen::MatrixXd::Identity(f_.output_dim, f_.output_dim).eval();
  }

 private:
  PointMap f_;
};

// F = exp(-N(f)) for scalar f.
class ExpFunctional final : public Functional {
 public:
  explicit ExpFunctional(PointMap f) : f_(std::move(f)) {
    if (!f_.eval) throw Error("exponential functional needs an evaluator");
    if (f_.output_dim != 1) throw Error("exponential functional needs scalar f");
  }

  int output_dim() const override { return 1; }

  Eigen::VectorXd eval(const Configuration& cfg) const override {
    double s = 0.0;
    for (const MarkedPoint& p : cfg.points()) s += f_.eval(p.base, p.mark)[0];
    return Eigen::VectorXd::Constant(1, std::exp(-s));
  }

  OneMarkMap one_mark_map(const Configuration& rest, const BasePoint& base) const override {
    OneMarkMap g = Functional::one_mark_map(rest, base);
    if (f_.dtheta) {
      // d/du exp(-(S_rest + f(u))) = -f'(u) exp(-(S_rest + f(u))); the value
      // factor reuses the full evaluator so both gamma routes see identical
      // floating-point sums.
      g.angle_deriv = [this, rest, base](const Mark& u) {
        const double slope = f_.dtheta(base, mark_angle(u))[0];
        const double value = eval(eps_plus(rest, MarkedPoint{base, u}))[0];
        return Eigen::VectorXd::Constant(1, -slope * value).eval();
      };
    }
    if (f_.sde_terminal) {
      double rest_sum = 0.0;
      for (const MarkedPoint& p : rest.points()) rest_sum += f_.eval(p.base, p.mark)[0];
      OneMarkMap::SdeTerminal sde;
      sde.start = base.attribute;
      sde.outer_jacobian = [rest_sum](const Eigen::VectorXd& terminal) {
        if (terminal.size() != 1)
          throw UnsupportedFunctional("exponential of an SDE sum needs a scalar state");
        return Eigen::MatrixXd::Constant(1, 1, -std::exp(-(rest_sum + terminal[0]))).eval();
      };
      g.sde = std::move(sde);
    }
    return g;
  }

  std::optional<Eigen::VectorXd> inplace_angle_deriv(const Configuration& cfg,
                                                     std::size_t i) const override {
    if (!f_.dtheta) return std::nullopt;
    const MarkedPoint& p = cfg.points()[i];
    const double slope = f_.dtheta(p.base, mark_angle(p.mark))[0];
    return Eigen::VectorXd::Constant(1, -slope * eval(cfg)[0]).eval();
  }

  std::optional<Eigen::MatrixXd> inplace_outer_jacobian(const Configuration& cfg,
                                                        std::size_t) const override {
    if (!f_.sde_terminal) return std::nullopt;
    return Eigen::MatrixXd::Constant(1, 1, -eval(cfg)[0]).eval();
  }

 private:
  PointMap f_;
};

class StackedFunctional final : public Functional {
 public:
  explicit StackedFunctional(std::vector<FunctionalPtr> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw Error("stacked functional needs at least one component");
    for (const auto& c : comps_) {
      if (!c) throw Error("stacked functional holds a null component");
      dim_ += c->output_dim();
    }
  }

  int output_dim() const override { return dim_; }

  Eigen::VectorXd eval(const Configuration& cfg) const override {
    Eigen::VectorXd out(dim_);
    int at = 0;
    for (const auto& c : comps_) {
      out.segment(at, c->output_dim()) = c->eval(cfg);
      at += c->output_dim();
    }
    return out;
  }

  OneMarkMap one_mark_map(const Configuration& rest, const BasePoint& base) const override {
    std::vector<OneMarkMap> parts;
    parts.reserve(comps_.size());
    for (const auto& c : comps_) parts.push_back(c->one_mark_map(rest, base));

    OneMarkMap g;
    g.output_dim = dim_;
    g.eval = [parts, dim = dim_](const Mark& u) {
      Eigen::VectorXd out(dim);
      int at = 0;
      for (const OneMarkMap& part : parts) {
        out.segment(at, part.output_dim) = part.eval(u);
        at += part.output_dim;
      }
      return out;
    };

    // Analytic structure only when every block carries it; mixing mechanisms
    // across blocks would desynchronize the two gamma routes.
    bool all_angle = true;
    bool all_sde = true;
    for (const OneMarkMap& part : parts) {
      if (!part.angle_deriv) all_angle = false;
      if (!part.sde) all_sde = false;
    }
    if (all_angle) {
      g.angle_deriv = [parts, dim = dim_](const Mark& u) {
        Eigen::VectorXd out(dim);
        int at = 0;
        for (const OneMarkMap& part : parts) {
          out.segment(at, part.output_dim) = part.angle_deriv(u);
          at += part.output_dim;
        }
        return out;
      };
    }
    if (all_sde) {
      OneMarkMap::SdeTerminal sde;
      sde.start = parts.front().sde->start;
      sde.outer_jacobian = [parts, dim = dim_](const Eigen::VectorXd& terminal) {
        const int m = static_cast<int>(terminal.size());
        Eigen::MatrixXd jac(dim, m);
        int at = 0;
        for (const OneMarkMap& part : parts) {
          jac.middleRows(at, part.output_dim) = part.sde->outer_jacobian
                                                    ? part.sde->outer_jacobian(terminal)
                                                    : Eigen::MatrixXd::Identity(part.output_dim, m);
          at += part.output_dim;
        }
        return jac;
      };
      g.sde = std::move(sde);
    }
    return g;
  }

  std::optional<Eigen::VectorXd> inplace_angle_deriv(const Configuration& cfg,
                                                     std::size_t i) const override {
    Eigen::VectorXd out(dim_);
    int at = 0;
    for (const auto& c : comps_) {
      auto block = c->inplace_angle_deriv(cfg, i);
      if (!block) return std::nullopt;
      out.segment(at, c->output_dim()) = *block;
      at += c->output_dim();
    }
    return out;
  }

  std::optional<Eigen::MatrixXd> inplace_outer_jacobian(const Configuration& cfg,
                                                        std::size_t i) const override {
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(comps_.size());
    for (const auto& c : comps_) {
      auto block = c->inplace_outer_jacobian(cfg, i);
      if (!block) return std::nullopt;
      blocks.push_back(std::move(*block));
    }
    const int m = static_cast<int>(blocks.front().cols());
    Eigen::MatrixXd jac(dim_, m);
    int at = 0;
    for (const Eigen::MatrixXd& block : blocks) {
      jac.middleRows(at, static_cast<int>(block.rows())) = block;
      at += static_cast<int>(block.rows());
    }
    return jac;
  }

 private:
  std::vector<FunctionalPtr> comps_;
  int dim_ = 0;
};

}  // namespace

FunctionalPtr make_linear(PointMap f) {
  return std::make_shared<SumFunctional>(std::move(f));
}

FunctionalPtr make_exp(PointMap f) {
  return std::make_shared<ExpFunctional>(std::move(f));
}

FunctionalPtr make_jump_sum(PointMap transform) {
  return std::make_shared<SumFunctional>(std::move(transform));
}

FunctionalPtr make_stacked(std::vector<FunctionalPtr> components) {
  return std::make_shared<StackedFunctional>(std::move(components));
}

FunctionalPtr polar_jump_sum(double t) {
  PointMap f;
  f.output_dim = 2;
  f.eval = [t](const BasePoint& base, const Mark& mark) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
    if (base.time <= t) {
      const double r = base.attribute[0];
      const double theta = mark_angle(mark);
      out[0] = r * std::cos(theta);
      out[1] = r * std::sin(theta);
    }
    return out;
  };
  f.dtheta = [t](const BasePoint& base, double theta) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
    if (base.time <= t) {
      const double r = base.attribute[0];
      out[0] = -r * std::sin(theta);
      out[1] = r * std::cos(theta);
    }
    return out;
  };
  return make_jump_sum(std::move(f));
}

PointMap radial_sine_map() {
  PointMap f;
  f.output_dim = 1;
  f.eval = [](const BasePoint& base, const Mark& mark) {
    return Eigen::VectorXd::Constant(1, base.attribute[0] * std::sin(mark_angle(mark)));
  };
  f.dtheta = [](const BasePoint& base, double theta) {
    return Eigen::VectorXd::Constant(1, base.attribute[0] * std::cos(theta));
  };
  return f;
}

namespace {

class OpaqueFunctional final : public Functional {
 public:
  explicit OpaqueFunctional(FunctionalPtr inner) : inner_(std::move(inner)) {
    if (!inner_) throw Error("opaque wrapper holds a null functional");
  }

  int output_dim() const override { return inner_->output_dim(); }
  Eigen::VectorXd eval(const Configuration& cfg) const override { return inner_->eval(cfg); }

 private:
  FunctionalPtr inner_;
};

}  // namespace

FunctionalPtr make_opaque(FunctionalPtr inner) {
  return std::make_shared<OpaqueFunctional>(std::move(inner));
}

Eigen::MatrixXd gamma_total(const Functional& F, const Configuration& cfg,
                            const MarkSpace& space) {
  const int k = F.output_dim();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, k);
  for (const MarkedPoint& p : cfg.points()) {
    const Configuration rest = eps_minus(cfg, p);
    total += space.gamma_one(F.one_mark_map(rest, p.base), p.mark);
  }
  return total;
}

Eigen::MatrixXd gamma_total_oracle(const Functional& F, const Configuration& cfg,
                                   const MarkSpace& space) {
  const int k = F.output_dim();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const MarkedPoint& p = cfg.points()[i];
    if (is_angle(p.mark)) {
      Eigen::VectorXd d;
      if (auto analytic = F.inplace_angle_deriv(cfg, i)) {
        d = std::move(*analytic);
      } else {
        double h = 1e-5;
        if (const auto* circle = dynamic_cast<const CircleMarkSpace*>(&space))
          h = circle->fd_step();
        const double theta = mark_angle(p.mark);
        const Eigen::VectorXd up = F.eval(cfg.with_replaced_mark(i, Mark(wrap_angle(theta + h))));
        const Eigen::VectorXd dn = F.eval(cfg.with_replaced_mark(i, Mark(wrap_angle(theta - h))));
        d = (up - dn) / (2.0 * h);
      }
      total += d * d.transpose();
    } else {
      const auto* wiener = dynamic_cast<const WienerMarkSpace*>(&space);
      if (!wiener)
        throw UnsupportedFunctional("driver-path marks need a Wiener mark space");
      auto jac = F.inplace_outer_jacobian(cfg, i);
      if (!jac)
        throw UnsupportedFunctional(
            "in-place gamma over driver-path marks needs SDE-terminal structure");
      const Eigen::MatrixXd inner =
          gamma_sde(wiener->coefficients(), p.base.attribute, mark_path(p.mark));
      total += (*jac) * inner * jac->transpose();
    }
  }
  return total;
}

Eigen::VectorXd sharp_sample(const Functional& F, const Configuration& cfg,
                             const MarkSpace& space, std::uint64_t seed) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(F.output_dim());
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const MarkedPoint& p = cfg.points()[i];
    const Configuration rest = eps_minus(cfg, p);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out += space.flat_sample(F.one_mark_map(rest, p.base), p.mark, rng);
  }
  return out;
}

Eigen::MatrixXd sharp_samples(const Functional& F, const Configuration& cfg,
                              const MarkSpace& space, std::uint64_t seed, int n_draws) {
  const int k = F.output_dim();
  std::vector<OneMarkMap> maps;
  maps.reserve(cfg.size());
  for (const MarkedPoint& p : cfg.points())
    maps.push_back(F.one_mark_map(eps_minus(cfg, p), p.base));

  Eigen::MatrixXd out(n_draws, k);
  for (int d = 0; d < n_draws; ++d) {
    const std::uint64_t draw_seed = derive_seed(seed, static_cast<std::uint64_t>(d));
    Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      Rng rng(derive_seed(draw_seed, static_cast<std::uint64_t>(i)));
      row += space.flat_sample(maps[i], cfg.points()[i].mark, rng);
    }
    out.row(d) = row.transpose();
  }
  return out;
}

}  // namespace lent
