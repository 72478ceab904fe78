#include "occmob/smm.hpp"

#include <algorithm>
#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

void SmmSpec::validate() const {
  require(!free_params.empty(), ErrorCode::Config, "SmmSpec: no free parameters");
  require(!targets.empty(), ErrorCode::Config, "SmmSpec: no targets");
  for (const auto& p : free_params) {
    require(p.lower < p.upper, ErrorCode::Config, "SmmSpec: empty bounds for " + p.name);
    require(p.start >= p.lower && p.start <= p.upper, ErrorCode::Config,
            "SmmSpec: start outside bounds for " + p.name);
  }
  for (const auto& t : targets)
    require(t.weight > 0.0, ErrorCode::Config, "SmmSpec: nonpositive weight for " + t.name);
}

SmmLoss smm_objective(const MomentSet& simulated, const SmmSpec& spec) {
  SmmLoss out;
  for (const auto& t : spec.targets) {
    MomentBreakdown b;
    b.name = t.name;
    b.target = t.value;
    const double scale = std::max(std::abs(t.value), spec.scale_floor);
    if (!simulated.has(t.name)) {
      b.missing = true;
      b.contribution = t.weight * 4.0;  // a missing moment counts as a 200% miss
      out.penalized = true;
    } else {
      b.simulated = simulated.value(t.name);
      const double dev = (b.simulated - t.value) / scale;
      b.contribution = t.weight * dev * dev;
    }
    out.loss += b.contribution;
    out.breakdown.push_back(b);
  }
  return out;
}

void apply_free_param(ModelParams& params, const std::string& name, double value) {
  if (name == "b") params.b = value;
  else if (name == "k") params.k = value;
  else if (name == "eta") params.eta = value;
  else if (name == "c") params.c = value;
  else if (name == "nu") params.nu = value;
  else if (name == "delta_L") params.delta_L = value;
  else if (name == "delta_H") params.delta_H = value;
  else if (name == "gamma_d") params.gamma_d = value;
  else if (name == "rho_z") params.z_proc.rho = value;
  else if (name == "sigma_z") params.z_proc.sigma = value;
  else if (name == "rho_A") params.a_proc.rho = value;
  else if (name == "sigma_A") params.a_proc.sigma = value;
  else if (name == "x2") params.x_levels(1) = value;
  else if (name == "x3") params.x_levels(2) = value;
  else
    throw Error(ErrorCode::Config, "apply_free_param: unknown parameter " + name);
}

namespace {

double to_unconstrained(double v, const FreeParam& p) {
  switch (p.transform) {
    case ParamTransform::Log: return std::log(v);
    case ParamTransform::Logit: {
      const double u = (v - p.lower) / (p.upper - p.lower);
      return std::log(u / (1.0 - u));
    }
    default: return v;
  }
}

double from_unconstrained(double u, const FreeParam& p) {
  double v;
  switch (p.transform) {
    case ParamTransform::Log: v = std::exp(u); break;
    case ParamTransform::Logit: v = p.lower + (p.upper - p.lower) / (1.0 + std::exp(-u)); break;
    default: v = u;
  }
  return std::clamp(v, p.lower, p.upper);
}

}  // namespace

CalibrationResult calibrate(const Objective& objective, const SmmSpec& spec, int budget) {
  spec.validate();
  const int dim = int(spec.free_params.size());
  CalibrationResult out;
  out.best_loss = std::numeric_limits<double>::infinity();

  auto eval = [&](const std::vector<double>& u) {
    std::vector<double> theta(std::size_t(dim), 0.0);
    for (int i = 0; i < dim; ++i)
      theta[std::size_t(i)] = from_unconstrained(u[std::size_t(i)], spec.free_params[std::size_t(i)]);
    const double loss = objective(theta);
    ++out.evaluations;
    if (loss < out.best_loss) {
      out.best_loss = loss;
      out.best_theta = theta;
    }
    out.trace.push_back({theta, loss, out.best_loss});
    return loss;
  };

  if (budget <= 0) {
    out.best_theta.resize(std::size_t(dim));
    for (int i = 0; i < dim; ++i) out.best_theta[std::size_t(i)] = spec.free_params[std::size_t(i)].start;
    out.best_loss = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  RngStream rng(spec.seed, 0x53494d50ULL /*SIMP*/);
  for (int start = 0; start < std::max(1, spec.multistarts) && out.evaluations < budget; ++start) {
    // start points: the configured start first, then bound-scaled draws
    std::vector<double> u0(std::size_t(dim), 0.0);
    for (int i = 0; i < dim; ++i) {
      const FreeParam& p = spec.free_params[std::size_t(i)];
      double v = p.start;
      if (start > 0) v = p.lower + (0.1 + 0.8 * rng.next_double()) * (p.upper - p.lower);
      u0[std::size_t(i)] = to_unconstrained(v, p);
    }

    // Nelder-Mead simplex
    const double alpha = 1.0, gamma_e = 2.0, rho_c = 0.5, sigma_s = 0.5;
    std::vector<std::vector<double>> simplex(std::size_t(dim + 1), u0);
    std::vector<double> fvals(std::size_t(dim + 1), 0.0);
    for (int i = 0; i < dim; ++i) {
      double step = std::abs(u0[std::size_t(i)]) > 1e-8 ? 0.05 * std::abs(u0[std::size_t(i)]) : 0.05;
      simplex[std::size_t(i + 1)][std::size_t(i)] += step;
    }
    for (int i = 0; i <= dim && out.evaluations < budget; ++i) fvals[std::size_t(i)] = eval(simplex[std::size_t(i)]);

    while (out.evaluations < budget) {
      std::vector<int> order(std::size_t(dim + 1));
      for (int i = 0; i <= dim; ++i) order[std::size_t(i)] = i;
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return fvals[std::size_t(a)] < fvals[std::size_t(b)]; });
      const int best = order[0], worst = order[std::size_t(dim)];
      if (std::abs(fvals[std::size_t(worst)] - fvals[std::size_t(best)]) <
          1e-10 * (1.0 + std::abs(fvals[std::size_t(best)])))
        break;

      std::vector<double> centroid(std::size_t(dim), 0.0);
      for (int i = 0; i <= dim; ++i) {
        if (i == worst) continue;
        for (int d = 0; d < dim; ++d) centroid[std::size_t(d)] += simplex[std::size_t(i)][std::size_t(d)] / dim;
      }
      auto blend = [&](double t) {
        std::vector<double> p(std::size_t(dim), 0.0);
        for (int d = 0; d < dim; ++d)
          p[std::size_t(d)] = centroid[std::size_t(d)] + t * (centroid[std::size_t(d)] - simplex[std::size_t(worst)][std::size_t(d)]);
        return p;
      };
      std::vector<double> refl = blend(alpha);
      const double f_refl = eval(refl);
      if (f_refl < fvals[std::size_t(best)]) {
        if (out.evaluations >= budget) break;
        std::vector<double> expd = blend(gamma_e);
        const double f_exp = eval(expd);
        if (f_exp < f_refl) {
          simplex[std::size_t(worst)] = expd;
          fvals[std::size_t(worst)] = f_exp;
        } else {
          simplex[std::size_t(worst)] = refl;
          fvals[std::size_t(worst)] = f_refl;
        }
      } else if (f_refl < fvals[std::size_t(order[std::size_t(dim - 1)])]) {
        simplex[std::size_t(worst)] = refl;
        fvals[std::size_t(worst)] = f_refl;
      } else {
        if (out.evaluations >= budget) break;
        std::vector<double> contr = blend(-rho_c);
        const double f_con = eval(contr);
        if (f_con < fvals[std::size_t(worst)]) {
          simplex[std::size_t(worst)] = contr;
          fvals[std::size_t(worst)] = f_con;
        } else {
          for (int i = 0; i <= dim && out.evaluations < budget; ++i) {
            if (i == best) continue;
            for (int d = 0; d < dim; ++d)
              simplex[std::size_t(i)][std::size_t(d)] =
                  simplex[std::size_t(best)][std::size_t(d)] +
                  sigma_s * (simplex[std::size_t(i)][std::size_t(d)] - simplex[std::size_t(best)][std::size_t(d)]);
            fvals[std::size_t(i)] = eval(simplex[std::size_t(i)]);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace occmob
