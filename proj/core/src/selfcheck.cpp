#include "entroplan/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "entroplan/distmath.hpp"
#include "entroplan/maze.hpp"
#include "entroplan/metaplanner.hpp"
#include "entroplan/planner.hpp"
#include "entroplan/rng.hpp"

namespace entroplan {

namespace {

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

Eigen::VectorXd random_simplex(Rng& rng, int k) {
  Eigen::VectorXd v(k);
  for (int i = 0; i < k; ++i) v[i] = -std::log(1.0 - rng.uniform01());
  return v / v.sum();
}

// local oracle: plain -sum p ln p
double entropy_oracle(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 1e-15) h -= p[i] * std::log(p[i]);
  return h;
}

// local oracle: plain sum q ln(q/p)
double kl_oracle(const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) d += q[i] * std::log(q[i] / p[i]);
  return d;
}

}  // namespace

CheckResult check_distribution_identities(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "distribution identities (entropy/KL/IG)";
  Rng rng(splitmix64(seed ^ 0x01));
  std::ostringstream why;
  bool ok = true;
  const double tol = 1e-9;

  for (int rep = 0; rep < 10000 && ok; ++rep) {
    const int k = 2 + rng.uniform_int(7);
    // uniform entropy = ln k
    {
      CategoricalDist u(Eigen::VectorXd::Constant(k, 1.0 / k));
      if (std::abs(entropy(u) - std::log(static_cast<double>(k))) > tol) {
        ok = false;
        why << "uniform entropy != ln K at K=" << k;
        break;
      }
    }
    // one-hot entropy = 0
    {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
      p[rng.uniform_int(k)] = 1.0;
      if (std::abs(entropy(CategoricalDist(p))) > tol) {
        ok = false;
        why << "one-hot entropy != 0";
        break;
      }
    }
    // KL >= 0, KL(q||q) = 0, and agreement with the direct-sum oracle
    {
      Eigen::VectorXd q = random_simplex(rng, k);
      Eigen::VectorXd p = random_simplex(rng, k);
      p = 0.99 * p.array() + 0.01 / k;  // keep denominators positive
      const double d = kl_divergence(CategoricalDist(q), CategoricalDist(p));
      if (d < -tol || std::abs(d - kl_oracle(q, p)) > tol) {
        ok = false;
        why << "KL mismatch or negative";
        break;
      }
      if (std::abs(kl_divergence(CategoricalDist(q), CategoricalDist(q))) >
          tol) {
        ok = false;
        why << "KL(q||q) != 0";
        break;
      }
      if (std::abs(entropy(CategoricalDist(q)) - entropy_oracle(q)) > tol) {
        ok = false;
        why << "entropy oracle mismatch";
        break;
      }
    }
    // information gain: H(Y) - H(Y|X) vs expected-KL form
    {
      const int ky = 2 + rng.uniform_int(3), kx = 2 + rng.uniform_int(3);
      Eigen::MatrixXd joint(ky, kx);
      double total = 0.0;
      for (int y = 0; y < ky; ++y)
        for (int x = 0; x < kx; ++x) {
          joint(y, x) = -std::log(1.0 - rng.uniform01());
          total += joint(y, x);
        }
      joint /= total;
      const double gain = information_gain(joint);
      // oracle: expected KL computed locally
      Eigen::VectorXd py = joint.rowwise().sum();
      Eigen::VectorXd px = joint.colwise().sum();
      double expected_kl = 0.0;
      for (int x = 0; x < kx; ++x) {
        Eigen::VectorXd cond = joint.col(x) / px[x];
        expected_kl += px[x] * kl_oracle(cond, py);
      }
      if (std::abs(gain - expected_kl) > tol || gain < -tol) {
        ok = false;
        why << "information gain forms disagree";
        break;
      }
    }
  }
  out.pass = ok;
  out.detail = ok ? "10000 random cases within 1e-9" : why.str();
  out.seconds = timer.seconds();
  return out;
}

CheckResult check_mixture_failure_modes(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "mixture failure modes (inflation / underestimation)";
  Rng rng(splitmix64(seed ^ 0x02));
  bool ok = true;
  std::ostringstream why;

  for (int rep = 0; rep < 1000 && ok; ++rep) {
    const int g = 1 + rng.uniform_int(3), k = 2 + rng.uniform_int(6);
    const int m = 2 + rng.uniform_int(3);
    std::vector<GroupedCategorical> comps;
    for (int i = 0; i < m; ++i) {
      std::vector<CategoricalDist> groups;
      for (int gi = 0; gi < g; ++gi)
        groups.emplace_back(random_simplex(rng, k));
      comps.emplace_back(std::move(groups));
    }
    Eigen::VectorXd w = random_simplex(rng, m);

    // inflation: blending modes can only raise entropy above the average
    GroupedCategorical mix = mixture(comps, w);
    double avg = 0.0;
    for (int i = 0; i < m; ++i) avg += w[i] * entropy(comps[i]);
    if (entropy(mix) < avg) {
      ok = false;
      why << "mixture entropy below weighted component entropy";
      break;
    }

    // underestimation: a dominant mode pins the mixture near its own entropy
    Eigen::VectorXd heavy = Eigen::VectorXd::Constant(m, 0.0);
    double prev_gap = 0.0;
    bool first = true;
    for (double wc : {0.99, 0.999}) {
      heavy.setConstant((1.0 - wc) / (m - 1));
      heavy[0] = wc;
      GroupedCategorical dom = mixture(comps, heavy);
      const double gap = std::abs(entropy(dom) - entropy(comps[0]));
      if (!first && gap > prev_gap + 1e-12) {
        ok = false;
        why << "entropy gap did not shrink as the dominant weight grew";
        break;
      }
      prev_gap = gap;
      first = false;
    }
  }
  out.pass = ok;
  out.detail = ok ? "1000 random mixtures, exact inequalities" : why.str();
  out.seconds = timer.seconds();
  return out;
}

CheckResult check_plan_selection_oracle(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "plan selection vs brute-force max scan";
  Rng rng(splitmix64(seed ^ 0x03));
  bool ok = true;
  std::ostringstream why;

  for (int rep = 0; rep < 1000 && ok; ++rep) {
    const int n = 1 + rng.uniform_int(64);
    std::vector<ScoredTrajectory> cands(n);
    for (int i = 0; i < n; ++i) {
      cands[i].cum_reward = rng.normal();
      cands[i].cum_entropy = rng.normal();
      // quantized scores provoke ties
      cands[i].score = std::round(rng.normal() * 4.0) / 4.0;
      cands[i].actions = {i};
      cands[i].final_feature = Eigen::VectorXd::Constant(1, i);
    }
    // independent scan: first strictly-greater wins
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (cands[i].score > cands[best].score) best = i;
    Plan plan = select_plan(cands);
    if (plan.actions[0] != best) {
      ok = false;
      why << "selection disagrees with max scan at rep " << rep;
    }
  }
  out.pass = ok;
  out.detail = ok ? "1000 candidate sets, exact including ties" : why.str();
  out.seconds = timer.seconds();
  return out;
}

CheckResult check_replan_statistics(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "replan rate matches squashed grid {0, 0.0625, 0.25, 0.5625, 1}";
  Rng rng(splitmix64(seed ^ 0x04));
  bool ok = true;
  std::ostringstream why;
  const int draws = 100000;

  for (int idx = 0; idx < 5 && ok; ++idx) {
    const double p = idx / 4.0;
    const double expect = p * p;
    int hits = 0;
    for (int i = 0; i < draws; ++i)
      hits += MetaPolicy::replan_draw(p, rng) ? 1 : 0;
    const double rate = static_cast<double>(hits) / draws;
    const double sigma = std::sqrt(expect * (1.0 - expect) / draws);
    if (std::abs(rate - expect) > std::max(3.0 * sigma, 1e-12)) {
      ok = false;
      why << "p=" << p << " rate " << rate << " vs " << expect;
    }
  }
  out.pass = ok;
  out.detail = ok ? "1e5 draws per grid point within 3 sigma" : why.str();
  out.seconds = timer.seconds();
  return out;
}

CheckResult check_meta_reward_and_gae(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "meta-reward and GAE vs direct-evaluation oracles";
  Rng rng(splitmix64(seed ^ 0x05));
  bool ok = true;
  std::ostringstream why;
  const double tol = 1e-9;

  for (int rep = 0; rep < 1000 && ok; ++rep) {
    // meta reward: (L/2) sum of (reward + entropy) over L+1 entries
    const int L = 1 + rng.uniform_int(12);
    std::vector<std::pair<double, double>> window(L + 1);
    double direct = 0.0;
    for (auto& [r, e] : window) {
      r = rng.normal();
      e = std::abs(rng.normal());
      direct += r + e;
    }
    direct *= 0.5 * L;
    if (std::abs(meta_reward(window, L, false) - direct) > tol) {
      ok = false;
      why << "meta reward mismatch";
      break;
    }

    // GAE vs the nested-sum definition
    const int n = 1 + rng.uniform_int(8);
    Eigen::VectorXd rewards(n), values(n);
    std::vector<bool> dones(n);
    for (int i = 0; i < n; ++i) {
      rewards[i] = rng.normal();
      values[i] = rng.normal();
      dones[i] = rng.uniform01() < 0.2;
    }
    const double bootstrap = rng.normal();
    const double gamma = 0.99, lambda = 0.95;
    GaeResult gae = compute_gae(rewards, values, bootstrap, dones, gamma,
                                lambda);
    for (int t = 0; t < n && ok; ++t) {
      // oracle: A_t = sum_l (gamma*lambda)^l delta_{t+l}, cut at a terminal
      double acc = 0.0, factor = 1.0;
      for (int l = t; l < n; ++l) {
        const double next_v = dones[l] ? 0.0
                              : (l + 1 < n ? values[l + 1] : bootstrap);
        const double delta = rewards[l] + gamma * next_v - values[l];
        acc += factor * delta;
        if (dones[l]) break;
        factor *= gamma * lambda;
      }
      if (std::abs(acc - gae.advantages[t]) > tol) {
        ok = false;
        why << "GAE mismatch at t=" << t;
      }
      if (std::abs(gae.value_targets[t] - (gae.advantages[t] + values[t])) >
          tol) {
        ok = false;
        why << "value target != advantage + value";
      }
    }
  }
  out.pass = ok;
  out.detail = ok ? "1000 random windows and sequences within 1e-9" : why.str();
  out.seconds = timer.seconds();
  return out;
}

CheckResult check_maze_environment(uint64_t seed) {
  Timer timer;
  CheckResult out;
  out.name = "maze generation, connectivity, and reward formulas";
  bool ok = true;
  std::ostringstream why;

  MazeSpec spec;
  spec.reward_scale = 1.0;  // formulas checked unscaled

  // connectivity across the porosity sweep, and the spanning-tree identity
  double prev_mean_walls = 1e18;
  for (double porosity : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    spec.porosity = porosity;
    double wall_sum = 0.0;
    const int trials = porosity == 0.0 || porosity == 1.0 ? 1000 : 1000;
    for (int t = 0; t < trials && ok; ++t) {
      MazeState maze = generate_maze(spec, seed * 7919 + t);
      if (!connectivity_check(maze)) {
        ok = false;
        why << "disconnected maze at porosity " << porosity;
      }
      wall_sum += maze.interior_wall_count();
      if (porosity == 0.0) {
        // spanning tree: slots - (W*H - 1) walls remain
        const int slots = 2 * spec.width * spec.height - spec.width -
                          spec.height;
        const int expect = slots - (spec.width * spec.height - 1);
        if (maze.interior_wall_count() != expect) {
          ok = false;
          why << "wall count " << maze.interior_wall_count() << " != "
              << expect;
        }
      }
      if (porosity == 1.0 && maze.interior_wall_count() != 0) {
        ok = false;
        why << "walls remain at porosity 1";
      }
    }
    const double mean_walls = wall_sum / trials;
    if (mean_walls >= prev_mean_walls) {
      ok = false;
      why << "mean wall count not decreasing at porosity " << porosity;
    }
    prev_mean_walls = mean_walls;
    if (!ok) break;
  }

  // proximity formula
  if (ok) {
    if (std::abs(proximity_reward(0.0, 0, 0, 0) - 3.0) > 1e-12 ||
        proximity_reward(12.0, 0, 0, 0) != 0.0 ||
        proximity_reward(10.0, 0, 0, 0) != 0.0) {
      ok = false;
      why << "proximity formula mismatch";
    }
  }

  // exploration blur and the goal schedule on a hand-driven maze
  if (ok) {
    spec.porosity = 1.0;  // open room, free movement
    spec.blur = 2;
    MazeState maze = generate_maze(spec, seed + 17);
    maze.agent_x = 4;
    maze.agent_y = 4;
    maze.heading = 1;
    maze.visited.assign(maze.visited.size(), 0);
    // blur=2 square covers offsets {0,1}^2; pre-mark one -> delta = 3
    maze.visited[4 * maze.height + 4] = 1;
    RewardBreakdown rb = maze_step(spec, maze, 5);  // turn, no displacement
    if (std::abs(rb.exploration - 3.0 / 4.0) > 1e-12) {
      ok = false;
      why << "exploration " << rb.exploration << " != 0.75";
    }

    spec.blur = 1;
    MazeState run = generate_maze(spec, seed + 18);
    run.goals[0] = {1, 0, false};
    run.goals[1] = {2, 0, false};
    run.goals[2] = {3, 0, false};
    run.agent_x = 0;
    run.agent_y = 0;
    run.heading = 1;  // facing +x
    double goal_total = 0.0;
    std::vector<double> gains;
    for (int i = 0; i < 3; ++i) {
      RewardBreakdown step = maze_step(spec, run, 0);
      gains.push_back(step.goal);
      goal_total += step.goal;
    }
    if (gains[0] != 50.0 || gains[1] != 50.0 || gains[2] != 200.0 ||
        goal_total != 300.0) {
      ok = false;
      why << "goal schedule " << gains[0] << "/" << gains[1] << "/"
          << gains[2];
    }
  }

  out.pass = ok;
  out.detail = ok ? "1000 seeds per porosity, formulas exact" : why.str();
  out.seconds = timer.seconds();
  out.name = "maze generation, connectivity, and reward formulas";
  return out;
}

std::vector<CheckResult> run_selfchecks(uint64_t seed) {
  return {
      check_distribution_identities(seed),
      check_mixture_failure_modes(seed),
      check_plan_selection_oracle(seed),
      check_replan_statistics(seed),
      check_meta_reward_and_gae(seed),
      check_maze_environment(seed),
  };
}

}  // namespace entroplan
