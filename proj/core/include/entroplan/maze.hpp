#pragma once

#include <array>
#include <string>
#include <vector>

#include "entroplan/environment.hpp"

namespace entroplan {

struct MazeSpec {
  int width = 8;
  int height = 8;
  double porosity = 0.2;   // removal probability per standing interior wall
  int time_limit = 512;
  int blur = 1;            // side of the visitation square marked per step
  double prox_radius = 10.0;
  double prox_mul = 0.03;
  int goal_count = 3;
  double reward_scale = 0.1;
};

// Wall grid plus agent pose, goals, visitation, and the step counter. Walls
// sit on cell edges: vertical[x][y] blocks (x,y)<->(x+1,y), horizontal[x][y]
// blocks (x,y)<->(x,y+1). Border walls are implicit.
struct MazeState {
  int width = 0, height = 0;
  std::vector<uint8_t> walls_v;  // (width-1) * height
  std::vector<uint8_t> walls_h;  // width * (height-1)
  int agent_x = 0, agent_y = 0;
  int heading = 0;  // 0 up(-y), 1 right(+x), 2 down(+y), 3 left(-x)
  struct Goal {
    int x = 0, y = 0;
    bool found = false;
  };
  std::array<Goal, 3> goals;
  std::vector<uint8_t> visited;  // width * height
  int steps = 0;

  bool wall_between(int x0, int y0, int x1, int y1) const;
  uint8_t& wall_v(int x, int y) { return walls_v[x * height + y]; }
  uint8_t& wall_h(int x, int y) { return walls_h[x * (height - 1) + y]; }
  bool wall_v_at(int x, int y) const { return walls_v[x * height + y] != 0; }
  bool wall_h_at(int x, int y) const {
    return walls_h[x * (height - 1) + y] != 0;
  }
  bool visited_at(int x, int y) const { return visited[x * height + y] != 0; }
  int interior_wall_count() const;
};

// Perfect maze by recursive backtracking, then each standing interior wall is
// removed independently with probability spec.porosity. Agent and goals land
// on distinct cells. Deterministic per seed.
MazeState generate_maze(const MazeSpec& spec, uint64_t seed);

// Flood fill from the agent; true when every goal is reachable.
bool connectivity_check(const MazeState& state);

// Smoothly decaying goal signal. delta = dist - (agent_radius + box_radius +
// s); zero outside [0, 10], else (10 - delta)^2 * 0.03. Unscaled.
double proximity_reward(double dist, double agent_radius, double box_radius,
                        double s, double radius = 10.0, double mul = 0.03);

// Applies one action to the state and returns the unscaled reward parts
// (exploration, proximity, goal, base). The caller applies reward_scale.
RewardBreakdown maze_step(const MazeSpec& spec, MazeState& state, int action);

// Deterministic top-down render.
struct MazeRender {
  std::string ppm;    // binary P6
  std::string ascii;  // newline-separated rows
  int width_px = 0, height_px = 0;
};
MazeRender render_topdown(const MazeState& state, int pixels_per_cell = 6);

// Number of visited cells shaded in a render (cross-checkable against the
// visitation grid popcount).
int render_visited_count(const MazeState& state);

// Gridworld maze environment. Observation = egocentric 5x5 occupancy view
// one-hot over {wall, open, open-visited, goal} categories, a 16x16
// visitation map with the agent block marked, and one proximity intensity per
// goal color.
class MazeEnv : public Environment {
 public:
  explicit MazeEnv(MazeSpec spec);

  int obs_dim() const override;
  int action_count() const override { return 6; }
  int time_limit() const override { return spec_.time_limit; }

  Eigen::VectorXd reset(Rng& env_rng) override;
  StepOut step(int action, Rng& env_rng) override;

  const MazeSpec& spec() const { return spec_; }
  const MazeState& state() const { return state_; }
  MazeState& mutable_state() { return state_; }
  Eigen::VectorXd observation() const;

  void save(BlobWriter& w) const override;
  void load(BlobReader& r) override;

  static constexpr int kViewRadius = 2;  // on the wall-expanded grid
  static constexpr int kViewCategories = 4;
  static constexpr int kMapSide = 16;

 private:
  MazeSpec spec_;
  MazeState state_;
};

void save_maze_state(BlobWriter& w, const MazeState& s);
MazeState load_maze_state(BlobReader& r);

}  // namespace entroplan
