#include "entroplan/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "entroplan/errors.hpp"

namespace entroplan {

bool MazeState::wall_between(int x0, int y0, int x1, int y1) const {
  if (x1 < 0 || x1 >= width || y1 < 0 || y1 >= height) return true;
  if (x1 == x0 + 1 && y1 == y0) return wall_v_at(x0, y0);
  if (x1 == x0 - 1 && y1 == y0) return wall_v_at(x1, y0);
  if (y1 == y0 + 1 && x1 == x0) return wall_h_at(x0, y0);
  if (y1 == y0 - 1 && x1 == x0) return wall_h_at(x0, y1);
  return true;  // not adjacent
}

int MazeState::interior_wall_count() const {
  int count = 0;
  for (uint8_t w : walls_v) count += w != 0;
  for (uint8_t w : walls_h) count += w != 0;
  return count;
}

MazeState generate_maze(const MazeSpec& spec, uint64_t seed) {
  if (spec.width < 2 || spec.height < 2)
    throw std::invalid_argument("maze must be at least 2x2");
  if (spec.porosity < 0.0 || spec.porosity > 1.0)
    throw std::invalid_argument("porosity must lie in [0, 1]");

  Rng rng(splitmix64(seed ^ 0x6d61u));
  MazeState s;
  s.width = spec.width;
  s.height = spec.height;
  s.walls_v.assign(static_cast<size_t>(spec.width - 1) * spec.height, 1);
  s.walls_h.assign(static_cast<size_t>(spec.width) * (spec.height - 1), 1);
  s.visited.assign(static_cast<size_t>(spec.width) * spec.height, 0);

  // carve a spanning tree with an explicit backtracking stack
  std::vector<uint8_t> carved(static_cast<size_t>(spec.width) * spec.height,
                              0);
  std::vector<std::pair<int, int>> stack;
  int cx = rng.uniform_int(spec.width), cy = rng.uniform_int(spec.height);
  carved[cx * spec.height + cy] = 1;
  stack.emplace_back(cx, cy);
  const int dx[4] = {0, 1, 0, -1};
  const int dy[4] = {-1, 0, 1, 0};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    int dirs[4] = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(dirs[i], dirs[rng.uniform_int(i + 1)]);
    bool advanced = false;
    for (int i = 0; i < 4 && !advanced; ++i) {
      const int nx = x + dx[dirs[i]], ny = y + dy[dirs[i]];
      if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height) continue;
      if (carved[nx * spec.height + ny]) continue;
      // knock down the wall between (x,y) and (nx,ny)
      if (nx == x + 1) s.wall_v(x, y) = 0;
      else if (nx == x - 1) s.wall_v(nx, y) = 0;
      else if (ny == y + 1) s.wall_h(x, y) = 0;
      else s.wall_h(x, ny) = 0;
      carved[nx * spec.height + ny] = 1;
      stack.emplace_back(nx, ny);
      advanced = true;
    }
    if (!advanced) stack.pop_back();
  }

  // porosity pass: drop each standing interior wall with probability p
  for (int x = 0; x < spec.width - 1; ++x)
    for (int y = 0; y < spec.height; ++y)
      if (s.wall_v_at(x, y) && rng.uniform01() < spec.porosity)
        s.wall_v(x, y) = 0;
  for (int x = 0; x < spec.width; ++x)
    for (int y = 0; y < spec.height - 1; ++y)
      if (s.wall_h_at(x, y) && rng.uniform01() < spec.porosity)
        s.wall_h(x, y) = 0;

  // place agent and goals on distinct cells
  auto draw_cell = [&](std::vector<std::pair<int, int>>& taken) {
    while (true) {
      const int x = rng.uniform_int(spec.width);
      const int y = rng.uniform_int(spec.height);
      bool clash = false;
      for (auto& [tx, ty] : taken) clash = clash || (tx == x && ty == y);
      if (!clash) {
        taken.emplace_back(x, y);
        return std::make_pair(x, y);
      }
    }
  };
  std::vector<std::pair<int, int>> taken;
  std::tie(s.agent_x, s.agent_y) = draw_cell(taken);
  for (auto& goal : s.goals) std::tie(goal.x, goal.y) = draw_cell(taken);
  s.heading = rng.uniform_int(4);
  s.visited[s.agent_x * spec.height + s.agent_y] = 1;
  s.steps = 0;
  return s;
}

bool connectivity_check(const MazeState& state) {
  std::vector<uint8_t> seen(static_cast<size_t>(state.width) * state.height,
                            0);
  std::deque<std::pair<int, int>> frontier;
  frontier.emplace_back(state.agent_x, state.agent_y);
  seen[state.agent_x * state.height + state.agent_y] = 1;
  const int dx[4] = {0, 1, 0, -1};
  const int dy[4] = {-1, 0, 1, 0};
  while (!frontier.empty()) {
    auto [x, y] = frontier.front();
    frontier.pop_front();
    for (int d = 0; d < 4; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || nx >= state.width || ny < 0 || ny >= state.height)
        continue;
      if (seen[nx * state.height + ny]) continue;
      if (state.wall_between(x, y, nx, ny)) continue;
      seen[nx * state.height + ny] = 1;
      frontier.emplace_back(nx, ny);
    }
  }
  for (const auto& goal : state.goals)
    if (!seen[goal.x * state.height + goal.y]) return false;
  return true;
}

double proximity_reward(double dist, double agent_radius, double box_radius,
                        double s, double radius, double mul) {
  const double delta = dist - (agent_radius + box_radius + s);
  if (delta < 0.0 || delta > radius) return 0.0;
  return (radius - delta) * (radius - delta) * mul;
}

namespace {

// heading vectors: forward and right in grid coordinates
void heading_axes(int heading, int& fx, int& fy, int& rx, int& ry) {
  switch (heading) {
    case 0: fx = 0; fy = -1; rx = 1; ry = 0; break;   // up
    case 1: fx = 1; fy = 0; rx = 0; ry = 1; break;    // right
    case 2: fx = 0; fy = 1; rx = -1; ry = 0; break;   // down
    default: fx = -1; fy = 0; rx = 0; ry = -1; break; // left
  }
}

}  // namespace

RewardBreakdown maze_step(const MazeSpec& spec, MazeState& state, int action) {
  if (action < 0 || action >= 6)
    throw InvalidAction("maze action must be in [0, 6)");

  RewardBreakdown out;  // unscaled here; caller applies reward_scale

  int fx, fy, rx, ry;
  heading_axes(state.heading, fx, fy, rx, ry);

  int mx = 0, my = 0;
  switch (action) {
    case 0: mx = fx; my = fy; break;    // forward
    case 1: mx = -fx; my = -fy; break;  // backward
    case 2: mx = -rx; my = -ry; break;  // strafe left
    case 3: mx = rx; my = ry; break;    // strafe right
    case 4: state.heading = (state.heading + 3) % 4; break;  // turn left
    case 5: state.heading = (state.heading + 1) % 4; break;  // turn right
  }
  if (mx != 0 || my != 0) {
    const int nx = state.agent_x + mx, ny = state.agent_y + my;
    if (!state.wall_between(state.agent_x, state.agent_y, nx, ny)) {
      state.agent_x = nx;
      state.agent_y = ny;
    }
  }

  ++state.steps;

  // exploration: newly marked cells in the blur x blur square on the agent
  const int b = std::max(1, spec.blur);
  const int lo = -((b - 1) / 2), hi = b / 2;
  int newly = 0;
  for (int ox = lo; ox <= hi; ++ox) {
    for (int oy = lo; oy <= hi; ++oy) {
      const int x = state.agent_x + ox, y = state.agent_y + oy;
      if (x < 0 || x >= state.width || y < 0 || y >= state.height) continue;
      uint8_t& cell = state.visited[x * state.height + y];
      if (!cell) {
        cell = 1;
        ++newly;
      }
    }
  }
  out.exploration = b > 1 ? static_cast<double>(newly) / (b * b)
                          : static_cast<double>(newly);

  // proximity: decaying signal from each unfound goal
  for (const auto& goal : state.goals) {
    if (goal.found) continue;
    const double dist = std::hypot(goal.x - state.agent_x,
                                   goal.y - state.agent_y);
    out.proximity += proximity_reward(dist, 0.0, 0.0, 0.0, spec.prox_radius,
                                      spec.prox_mul);
  }

  // goal: 50 per box, 150 extra on the third
  for (auto& goal : state.goals) {
    if (!goal.found && goal.x == state.agent_x && goal.y == state.agent_y) {
      goal.found = true;
      out.goal += 50.0;
      bool all = true;
      for (const auto& g : state.goals) all = all && g.found;
      if (all) out.goal += 150.0;
    }
  }

  out.base = -10.0;
  out.total = out.base + out.exploration + out.proximity + out.goal;
  return out;
}

namespace {

// Expanded occupancy category at expanded coordinates (walls live on even
// coordinates, cells on odd).
enum : int { kCatWall = 0, kCatOpen = 1, kCatVisited = 2, kCatGoal = 3 };

int expanded_category(const MazeState& s, int ex, int ey) {
  const int ew = 2 * s.width + 1, eh = 2 * s.height + 1;
  if (ex < 0 || ex >= ew || ey < 0 || ey >= eh) return kCatWall;
  const bool x_odd = ex % 2 == 1, y_odd = ey % 2 == 1;
  if (!x_odd && !y_odd) return kCatWall;  // pillar
  if (x_odd && y_odd) {
    const int cx = ex / 2, cy = ey / 2;
    for (const auto& goal : s.goals)
      if (!goal.found && goal.x == cx && goal.y == cy) return kCatGoal;
    return s.visited_at(cx, cy) ? kCatVisited : kCatOpen;
  }
  if (x_odd) {  // horizontal wall slot between (cx, cy-1) and (cx, cy)
    const int cx = ex / 2, cy = ey / 2;
    if (cy == 0 || cy >= s.height) return kCatWall;
    return s.wall_h_at(cx, cy - 1) ? kCatWall : kCatOpen;
  }
  // vertical wall slot between (cx-1, cy) and (cx, cy)
  const int cx = ex / 2, cy = ey / 2;
  if (cx == 0 || cx >= s.width) return kCatWall;
  return s.wall_v_at(cx - 1, cy) ? kCatWall : kCatOpen;
}

}  // namespace

MazeEnv::MazeEnv(MazeSpec spec) : spec_(spec) {
  if (spec_.goal_count != 3)
    throw ConfigError("maze supports exactly 3 goals");
}

int MazeEnv::obs_dim() const {
  const int side = 2 * kViewRadius + 1;
  return side * side * kViewCategories + kMapSide * kMapSide + 3;
}

Eigen::VectorXd MazeEnv::reset(Rng& env_rng) {
  state_ = generate_maze(spec_, env_rng.raw());
  return observation();
}

Environment::StepOut MazeEnv::step(int action, Rng&) {
  StepOut out;
  RewardBreakdown raw = maze_step(spec_, state_, action);
  const double k = spec_.reward_scale;
  out.reward.exploration = raw.exploration * k;
  out.reward.proximity = raw.proximity * k;
  out.reward.goal = raw.goal * k;
  out.reward.base = raw.base * k;
  out.reward.total = out.reward.exploration + out.reward.proximity +
                     out.reward.goal + out.reward.base;
  bool all_found = true;
  for (const auto& g : state_.goals) all_found = all_found && g.found;
  out.done = all_found || state_.steps >= spec_.time_limit;
  out.obs = observation();
  return out;
}

Eigen::VectorXd MazeEnv::observation() const {
  const int side = 2 * kViewRadius + 1;
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(obs_dim());

  // egocentric one-hot local view on the expanded grid, forward = top row
  int fx, fy, rx, ry;
  heading_axes(state_.heading, fx, fy, rx, ry);
  const int aex = 2 * state_.agent_x + 1, aey = 2 * state_.agent_y + 1;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const int fwd = kViewRadius - i, right = j - kViewRadius;
      const int ex = aex + fwd * fx + right * rx;
      const int ey = aey + fwd * fy + right * ry;
      const int cat = expanded_category(state_, ex, ey);
      obs[(i * side + j) * kViewCategories + cat] = 1.0;
    }
  }

  // fixed-size visitation map; agent block 2.0, forward neighbor +0.25
  const int map_off = side * side * kViewCategories;
  for (int mi = 0; mi < kMapSide; ++mi) {
    for (int mj = 0; mj < kMapSide; ++mj) {
      const int cx = mj * state_.width / kMapSide;
      const int cy = mi * state_.height / kMapSide;
      double v = state_.visited_at(cx, cy) ? 1.0 : 0.0;
      if (cx == state_.agent_x && cy == state_.agent_y) v = 2.0;
      const int fcx = state_.agent_x + fx, fcy = state_.agent_y + fy;
      if (cx == fcx && cy == fcy) v += 0.25;
      obs[map_off + mi * kMapSide + mj] = v;
    }
  }

  // proximity intensity per goal color, normalized to [0, 1]
  const int prox_off = map_off + kMapSide * kMapSide;
  for (int g = 0; g < 3; ++g) {
    const auto& goal = state_.goals[g];
    if (goal.found) continue;
    const double dist =
        std::hypot(goal.x - state_.agent_x, goal.y - state_.agent_y);
    obs[prox_off + g] = proximity_reward(dist, 0.0, 0.0, 0.0,
                                         spec_.prox_radius, spec_.prox_mul) /
                        (spec_.prox_radius * spec_.prox_radius *
                         spec_.prox_mul);
  }
  return obs;
}

void save_maze_state(BlobWriter& w, const MazeState& s) {
  w.i64(s.width);
  w.i64(s.height);
  w.u64(s.walls_v.size());
  for (uint8_t b : s.walls_v) w.u8(b);
  w.u64(s.walls_h.size());
  for (uint8_t b : s.walls_h) w.u8(b);
  w.i64(s.agent_x);
  w.i64(s.agent_y);
  w.i64(s.heading);
  for (const auto& g : s.goals) {
    w.i64(g.x);
    w.i64(g.y);
    w.boolean(g.found);
  }
  w.u64(s.visited.size());
  for (uint8_t b : s.visited) w.u8(b);
  w.i64(s.steps);
}

MazeState load_maze_state(BlobReader& r) {
  MazeState s;
  s.width = static_cast<int>(r.i64());
  s.height = static_cast<int>(r.i64());
  s.walls_v.resize(r.u64());
  for (auto& b : s.walls_v) b = r.u8();
  s.walls_h.resize(r.u64());
  for (auto& b : s.walls_h) b = r.u8();
  s.agent_x = static_cast<int>(r.i64());
  s.agent_y = static_cast<int>(r.i64());
  s.heading = static_cast<int>(r.i64());
  for (auto& g : s.goals) {
    g.x = static_cast<int>(r.i64());
    g.y = static_cast<int>(r.i64());
    g.found = r.boolean();
  }
  s.visited.resize(r.u64());
  for (auto& b : s.visited) b = r.u8();
  s.steps = static_cast<int>(r.i64());
  return s;
}

void MazeEnv::save(BlobWriter& w) const { save_maze_state(w, state_); }

void MazeEnv::load(BlobReader& r) { state_ = load_maze_state(r); }

namespace {

struct Pixel {
  uint8_t r, g, b;
};

constexpr Pixel kWallPx{20, 20, 24};
constexpr Pixel kOpenPx{245, 245, 245};
constexpr Pixel kVisitedPx{205, 222, 247};
constexpr Pixel kGoalPx[3] = {{220, 40, 40}, {40, 180, 60}, {50, 80, 220}};
constexpr Pixel kGoalFoundPx[3] = {{120, 80, 80}, {80, 120, 90}, {85, 95, 130}};
constexpr Pixel kAgentPx{255, 150, 30};
constexpr Pixel kNosePx{120, 60, 10};

}  // namespace

int render_visited_count(const MazeState& state) {
  int count = 0;
  for (uint8_t v : state.visited) count += v != 0;
  return count;
}

MazeRender render_topdown(const MazeState& state, int pixels_per_cell) {
  const int ew = 2 * state.width + 1, eh = 2 * state.height + 1;
  const int s = std::max(2, pixels_per_cell);
  MazeRender out;
  out.width_px = ew * s;
  out.height_px = eh * s;

  std::vector<Pixel> img(static_cast<size_t>(out.width_px) * out.height_px);
  auto fill = [&](int ex, int ey, Pixel p) {
    for (int py = 0; py < s; ++py)
      for (int px = 0; px < s; ++px)
        img[static_cast<size_t>(ey * s + py) * out.width_px + ex * s + px] = p;
  };

  std::string ascii;
  for (int ey = 0; ey < eh; ++ey) {
    for (int ex = 0; ex < ew; ++ex) {
      const int cat = expanded_category(state, ex, ey);
      Pixel px = kWallPx;
      char ch = '#';
      if (cat != kCatWall) {
        px = kOpenPx;
        ch = ' ';
        if (cat == kCatVisited) {
          px = kVisitedPx;
          ch = '.';
        }
      }
      // goals (found ones dimmed) and the agent overlay the base category
      if (ex % 2 == 1 && ey % 2 == 1) {
        const int cx = ex / 2, cy = ey / 2;
        for (int g = 0; g < 3; ++g) {
          if (state.goals[g].x == cx && state.goals[g].y == cy) {
            px = state.goals[g].found ? kGoalFoundPx[g] : kGoalPx[g];
            ch = state.goals[g].found ? "rgb"[g] : "RGB"[g];
          }
        }
        if (cx == state.agent_x && cy == state.agent_y) {
          px = kAgentPx;
          ch = "^>v<"[state.heading];
        }
      }
      fill(ex, ey, px);
      ascii.push_back(ch);
    }
    ascii.push_back('\n');
  }

  // heading nose: darken the forward edge of the agent block
  {
    int fx, fy, rx, ry;
    heading_axes(state.heading, fx, fy, rx, ry);
    const int aex = 2 * state.agent_x + 1, aey = 2 * state.agent_y + 1;
    for (int t = 0; t < s; ++t) {
      int bx = aex * s, by = aey * s;
      int nx, ny;
      if (fx == 1) { nx = bx + s - 1; ny = by + t; }
      else if (fx == -1) { nx = bx; ny = by + t; }
      else if (fy == 1) { nx = bx + t; ny = by + s - 1; }
      else { nx = bx + t; ny = by; }
      img[static_cast<size_t>(ny) * out.width_px + nx] = kNosePx;
    }
  }

  out.ppm = "P6\n" + std::to_string(out.width_px) + " " +
            std::to_string(out.height_px) + "\n255\n";
  out.ppm.reserve(out.ppm.size() + img.size() * 3);
  for (const Pixel& p : img) {
    out.ppm.push_back(static_cast<char>(p.r));
    out.ppm.push_back(static_cast<char>(p.g));
    out.ppm.push_back(static_cast<char>(p.b));
  }
  out.ascii = std::move(ascii);
  return out;
}

}  // namespace entroplan
