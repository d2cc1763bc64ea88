#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fence/controller.hpp"
#include "fence/errors.hpp"
#include "fence/model.hpp"

namespace fence
{

enum class ControllerKind
{
  label_free,
  label_fixed
};

struct Dropout
{
  std::size_t agent; // index into Scenario::initial_agents
  double      time;
};

struct Scenario
{
  std::vector<AgentState> initial_agents;
  TargetState             target0;
  Gains                   gains;
  PotentialParams         potential;
  double                  dt    = 0.01;
  double                  t_end = 200.0;
  std::optional<Dropout>  dropout;
  ControllerKind          controller = ControllerKind::label_free;
  std::vector<Vec2>       offsets; // desired target offsets, label_fixed only
  std::size_t             log_stride = 1;

  std::size_t n() const { return initial_agents.size(); }

  // Throws ValidationError naming the first violated invariant.
  void validate() const;
};

struct Snapshot
{
  double                   t = 0;
  std::vector<std::size_t> ids; // surviving agents, ascending scenario index
  std::vector<AgentState>  agents;
  TargetState              target{ Vec2::Zero(), Vec2::Zero(), 0.0 };
  Vec2                     fencing_error; // centroid minus target position
  double                   hull_distance         = 0;
  double                   min_pairwise_distance = 0;
  std::vector<double>      velocity_errors; // |v_i - v_d|, aligned with ids
  std::optional<double>    lyapunov_v1;
};

struct TrajectoryLog
{
  std::size_t           n             = 0; // agent count at t = 0
  double                safe_distance = 0;
  std::vector<Snapshot> snapshots;

  std::vector<double> times() const;
};

// Simulation aborted; carries the log up to the failure.
class SimulationError : public Error
{
public:
  SimulationError( const std::string& what, double t, TrajectoryLog partial )
      : Error( what )
      , time_( t )
      , partial_( std::make_shared<const TrajectoryLog>( std::move( partial ) ) )
  {}
  double               time() const noexcept { return time_; }
  const TrajectoryLog& partial_log() const noexcept { return *partial_; }

private:
  double                               time_;
  std::shared_ptr<const TrajectoryLog> partial_;
};

class CollisionDetected : public SimulationError
{
public:
  using SimulationError::SimulationError;
};

class Diverged : public SimulationError
{
public:
  using SimulationError::SimulationError;
};

inline constexpr double divergence_bound = 1e9;

// Flat world state: 8 entries per surviving agent ([x; v; eps; zeta]) followed by sigma.
Eigen::VectorXd pack_world( std::span<const AgentState> agents, const TargetState& target );
std::vector<AgentState> unpack_agents( const Eigen::VectorXd& state );
TargetState unpack_target( const Eigen::VectorXd& state, double s1 );

// Time derivative of the coupled agents / internal models / target.
// ids maps each packed agent to its scenario index (used for label-fixed offsets).
Eigen::VectorXd world_derivative( const Eigen::VectorXd& state, std::span<const std::size_t> ids, const Scenario& sc );

// Classical fourth-order Runge-Kutta step.
template<typename State, typename Derivative>
State
rk4_step( const State& y, double dt, Derivative&& f )
{
  const State k1 = f( y );
  const State k2 = f( State( y + 0.5 * dt * k1 ) );
  const State k3 = f( State( y + 0.5 * dt * k2 ) );
  const State k4 = f( State( y + dt * k3 ) );
  return y + ( dt / 6.0 ) * ( k1 + 2.0 * k2 + 2.0 * k3 + k4 );
}

// Integrates the scenario. Throws ValidationError before integration when the
// scenario is invalid or the gains fail the fencing condition; CollisionDetected
// or Diverged (with partial log) during integration.
TrajectoryLog run( const Scenario& sc );

struct MetricThresholds
{
  double fencing_error  = 0.05;
  double velocity_error = 0.05;
  double transient      = 1.0; // oscillation is measured for t > transient
};

struct MetricsReport
{
  std::optional<double> fencing_converged_at;
  std::optional<double> velocity_converged_at;
  double                min_distance_overall = 0;
  bool                  collision            = false;
  std::optional<double> hull_contains_target_from;
  double                peak_pairwise_oscillation = 0;
};

MetricsReport metrics( const TrajectoryLog& log, const MetricThresholds& thresholds = {} );

// Uniform starts in [-half_width, half_width]^2, rejection-sampled so that every
// pairwise distance exceeds min_separation. Zero velocities and internal states.
std::vector<AgentState> random_initial_agents( std::size_t n, std::uint64_t seed, double half_width = 20.0,
                                               double min_separation = 4.0 );

// Desired offsets used by the label-fixed baseline for four agents.
std::vector<Vec2> square_offsets();

} // namespace fence
