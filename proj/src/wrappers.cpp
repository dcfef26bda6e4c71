/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>

#include "actmap/error.hpp"
#include "actmap/training.hpp"

namespace actmap {

std::string_view to_string(Wrapper w) {
  switch (w) {
    case Wrapper::none: return "none";
    case Wrapper::action_mapping: return "action_mapping";
    case Wrapper::replacement: return "replacement";
    case Wrapper::resampling: return "resampling";
    case Wrapper::projection: return "projection";
  }
  return "unknown";
}

ProjectionResult project(const std::function<double(const Vector&)>& G,
                         const std::function<bool(const Vector&)>& feasible, Vector u,
                         const ProjectionConfig& config, bool clamp) {
  if (config.step <= 0.0 || config.fd_step <= 0.0 || config.overshoot <= 0.0) {
    throw UsageError("project: step, overshoot and fd_step must be positive");
  }
  ProjectionResult out;
  Vector grad(u.size());
  for (std::size_t it = 0; it < config.iterations; ++it) {
    if (feasible(u)) {
      out.u = std::move(u);
      out.iterations = it;
      out.converged = true;
      return out;
    }
    const double g0 = G(u);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      Vector up = u, dn = u;
      up[k] += config.fd_step;
      dn[k] -= config.fd_step;
      grad[k] = (G(up) - G(dn)) / (2.0 * config.fd_step);
    }
    const double norm = grad.norm();
    out.iterations = it + 1;
    // A flat or broken gradient leaves nowhere to go.
    if (!(norm > 0.0) || !std::isfinite(norm) || !std::isfinite(g0)) break;
    const double len = std::min(config.step, g0 / norm + config.overshoot);
    u -= (len / norm) * grad;
    if (clamp) u = u.cwiseMax(-1.0).cwiseMin(1.0);
  }
  out.converged = feasible(u);
  out.u = std::move(u);
  return out;
}

DecisionPipeline::DecisionPipeline(Wrapper wrapper, const Agent& agent,
                                   const FeasibilityPolicy* mapping,
                                   const FeasibilityModel* model, ProjectionConfig projection,
                                   std::size_t resample_budget)
    : wrapper_(wrapper),
      agent_(agent),
      mapping_(mapping),
      model_(model),
      projection_(projection),
      resample_budget_(resample_budget) {
  if (wrapper_ == Wrapper::action_mapping && mapping_ == nullptr) {
    throw ConfigError("action mapping needs a feasibility policy");
  }
  const bool needs_model = wrapper_ == Wrapper::replacement || wrapper_ == Wrapper::resampling ||
                           wrapper_ == Wrapper::projection;
  if (needs_model && model_ == nullptr) {
    throw ConfigError(std::string(to_string(wrapper_)) + " needs a feasibility model");
  }
  if (wrapper_ == Wrapper::resampling && resample_budget_ == 0) {
    throw ConfigError("resampling budget must be positive");
  }
}

Decision DecisionPipeline::decide(const Environment& env, const Observation& obs, Rng& rng,
                                  Record& rec) const {
  const SquashedSample s = agent_.act(obs, rng, rec);
  rec.z = s.z;
  rec.log_prob = s.log_prob;
  Decision d;
  d.network_forwards = 1;
  const ActionBox box = env.action_box();

  switch (wrapper_) {
    case Wrapper::none:
      d.action = box.from_unit(view(s.z));
      return d;

    case Wrapper::action_mapping:
      d.action = mapping_->map_latent(env.partial_state(), view(s.z));
      d.network_forwards = 2;
      return d;

    case Wrapper::replacement: {
      d.action = box.from_unit(view(s.z));
      if (!model_->g(env.partial_state(), view(d.action))) {
        const auto safe = env.safe_action();
        if (!safe) throw ConfigError("replacement: environment has no safe action");
        d.action = *safe;
        d.intervened = true;
      }
      return d;
    }

    case Wrapper::resampling: {
      const PartialState ps = env.partial_state();
      d.action = box.from_unit(view(s.z));
      if (model_->g(ps, view(d.action))) return d;
      d.intervened = true;
      const GaussianHead head = agent_.head(obs);
      ++d.network_forwards;
      while (d.attempts < resample_budget_) {
        ++d.attempts;
        const SquashedSample redraw = squashed_sample(head, rng);
        rec.z = redraw.z;
        rec.log_prob = redraw.log_prob;
        d.action = box.from_unit(view(redraw.z));
        if (model_->g(ps, view(d.action))) return d;
      }
      d.resample_exhausted = true;
      return d;
    }

    case Wrapper::projection: {
      const PartialState ps = env.partial_state();
      // Finite-difference probes may leave the unit box by fd_step.
      const std::function<double(const Vector&)> G = [&](const Vector& u) {
        const Vector inside = u.cwiseMax(-1.0).cwiseMin(1.0);
        return model_->G(ps, view(box.from_unit(view(inside))));
      };
      const std::function<bool(const Vector&)> g = [&](const Vector& u) {
        return model_->g(ps, view(box.from_unit(view(u))));
      };
      const ProjectionResult r = project(G, g, s.z, projection_);
      d.action = box.from_unit(view(r.u));
      d.attempts = r.iterations + 1;
      d.intervened = r.iterations > 0;
      d.projection_failed = !r.converged;
      return d;
    }
  }
  throw UsageError("unknown wrapper");
}

}  // namespace actmap
