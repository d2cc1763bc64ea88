#include "fence/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>

#include "fence/analysis.hpp"
#include "fence/geometry.hpp"

namespace fence
{

namespace
{

constexpr Eigen::Index agent_dim = 8;

std::vector<Vec2>
positions_of( std::span<const AgentState> agents )
{
  std::vector<Vec2> pos;
  pos.reserve( agents.size() );
  for( const auto& a : agents )
    pos.push_back( a.x );
  return pos;
}

double
min_pairwise( std::span<const Vec2> pos )
{
  double best = std::numeric_limits<double>::infinity();
  for( std::size_t i = 0; i < pos.size(); ++i )
    for( std::size_t k = i + 1; k < pos.size(); ++k )
      best = std::min( best, ( pos[i] - pos[k] ).norm() );
  return best;
}

// Lyapunov ingredients, present only for label-free runs under C2.
struct LyapunovContext
{
  RegulatorSolution reg;
  LyapunovData      lyap;
};

std::optional<LyapunovContext>
lyapunov_context( const Scenario& sc )
{
  if( sc.controller != ControllerKind::label_free )
    return std::nullopt;
  const double s1 = sc.target0.s1();
  if( !check_gains( sc.gains, s1 ).c2_holds )
    return std::nullopt;
  try
  {
    return LyapunovContext{ solve_regulator_equation( build_closed_loop( sc.gains, s1 ) ), build_P( sc.gains, s1 ) };
  }
  catch( const Error& )
  {
    return std::nullopt;
  }
}

Snapshot
make_snapshot( double t, const std::vector<std::size_t>& ids, const Eigen::VectorXd& state, const Scenario& sc,
               const std::optional<LyapunovContext>& lyap )
{
  Snapshot snap;
  snap.t      = t;
  snap.ids    = ids;
  snap.agents = unpack_agents( state );
  snap.target = unpack_target( state, sc.target0.s1() );

  const auto pos   = positions_of( snap.agents );
  const auto order = canonical_order<double>( pos );
  Vec2       sum   = Vec2::Zero();
  for( std::size_t i : order )
    sum += pos[i];
  snap.fencing_error = sum / static_cast<double>( pos.size() ) - snap.target.x_d();
  snap.hull_distance = distance_to_hull( snap.target.x_d(), convex_hull<double>( pos ) );
  snap.min_pairwise_distance = min_pairwise( pos );
  snap.velocity_errors.reserve( snap.agents.size() );
  for( const auto& a : snap.agents )
    snap.velocity_errors.push_back( ( a.v - snap.target.v_d() ).norm() );
  if( lyap )
    snap.lyapunov_v1 = lyapunov_value<double>( snap.agents, snap.target, lyap->reg, lyap->lyap, sc.gains.k5(),
                                               sc.potential );
  return snap;
}

} // namespace

void
Scenario::validate() const
{
  if( initial_agents.empty() )
    throw ValidationError( "scenario needs at least one agent" );
  if( !( dt > 0.0 ) || !std::isfinite( dt ) )
    throw ValidationError( "dt must be positive" );
  if( !( t_end > 0.0 ) || !std::isfinite( t_end ) )
    throw ValidationError( "t_end must be positive" );
  if( log_stride == 0 )
    throw ValidationError( "log_stride must be positive" );
  for( const auto& a : initial_agents )
    if( !a.stacked().allFinite() )
      throw ValidationError( "initial agent states must be finite" );
  if( !check_c1<double>( positions_of( initial_agents ), potential.r() ) )
    throw ValidationError( "C1 violated: initial pairwise distances must exceed r" );
  if( dropout )
  {
    if( dropout->agent >= n() )
      throw ValidationError( "dropout agent index out of range" );
    if( !( dropout->time > 0.0 && dropout->time < t_end ) )
      throw ValidationError( "dropout time must lie in (0, t_end)" );
    if( n() < 2 )
      throw ValidationError( "dropout needs at least two agents" );
  }
  if( controller == ControllerKind::label_fixed && offsets.size() != n() )
    throw ValidationError( "label_fixed needs one offset per agent" );
}

std::vector<double>
TrajectoryLog::times() const
{
  std::vector<double> t;
  t.reserve( snapshots.size() );
  for( const auto& s : snapshots )
    t.push_back( s.t );
  return t;
}

Eigen::VectorXd
pack_world( std::span<const AgentState> agents, const TargetState& target )
{
  const auto      n = static_cast<Eigen::Index>( agents.size() );
  Eigen::VectorXd state( agent_dim * n + 4 );
  for( Eigen::Index i = 0; i < n; ++i )
    state.segment<agent_dim>( agent_dim * i ) = agents[static_cast<std::size_t>( i )].stacked();
  state.tail<4>() = target.sigma();
  return state;
}

std::vector<AgentState>
unpack_agents( const Eigen::VectorXd& state )
{
  const Eigen::Index      n = ( state.size() - 4 ) / agent_dim;
  std::vector<AgentState> agents;
  agents.reserve( static_cast<std::size_t>( n ) );
  for( Eigen::Index i = 0; i < n; ++i )
    agents.push_back( AgentState::from_stacked( state.segment<agent_dim>( agent_dim * i ) ) );
  return agents;
}

TargetState
unpack_target( const Eigen::VectorXd& state, double s1 )
{
  return TargetState( state.tail<4>().head<2>(), state.tail<2>(), s1 );
}

Eigen::VectorXd
world_derivative( const Eigen::VectorXd& state, std::span<const std::size_t> ids, const Scenario& sc )
{
  const auto   agents = unpack_agents( state );
  const double s1     = sc.target0.s1();
  const Vec2   x_d    = state.tail<4>().head<2>();
  const Vec2   v_d    = state.tail<2>();

  Eigen::VectorXd deriv( state.size() );
  if( sc.controller == ControllerKind::label_free )
  {
    const auto pos   = positions_of( agents );
    const auto order = canonical_order<double>( pos );
    for( std::size_t i = 0; i < agents.size(); ++i )
    {
      const Vec2 eta           = repulsion<double>( i, pos, sc.potential, order );
      auto [eps_dot, zeta_dot] = internal_model_derivative( agents[i], x_d, eta, s1, sc.gains.k5() );
      deriv.segment<agent_dim>( agent_dim * static_cast<Eigen::Index>( i ) )
          << agents[i].v, control_input( agents[i], eta, sc.gains ), eps_dot, zeta_dot;
    }
  }
  else
  {
    for( std::size_t i = 0; i < agents.size(); ++i )
    {
      const auto out = label_fixed_control( agents[i], x_d, sc.offsets[ids[i]], s1, sc.gains );
      deriv.segment<agent_dim>( agent_dim * static_cast<Eigen::Index>( i ) )
          << agents[i].v, out.u, out.eps_dot, out.zeta_dot;
    }
  }
  deriv.tail<4>() << v_d, s1 * x_d;
  return deriv;
}

TrajectoryLog
run( const Scenario& sc )
{
  sc.validate();
  try
  {
    if( !check_gains( sc.gains, sc.target0.s1() ).fencing_holds )
      throw ValidationError( "gains fail the fencing (Hurwitz) condition" );
  }
  catch( const DegenerateGains& e )
  {
    throw ValidationError( e.what() );
  }

  const auto lyap = lyapunov_context( sc );

  TrajectoryLog log;
  log.n             = sc.n();
  log.safe_distance = sc.potential.r();

  std::vector<std::size_t> ids( sc.n() );
  for( std::size_t i = 0; i < ids.size(); ++i )
    ids[i] = i;
  Eigen::VectorXd state = pack_world( sc.initial_agents, sc.target0 );

  const auto steps     = static_cast<std::size_t>( std::llround( sc.t_end / sc.dt ) );
  constexpr auto no_drop   = std::numeric_limits<std::size_t>::max();
  const auto     drop_step = sc.dropout ? static_cast<std::size_t>( std::llround( sc.dropout->time / sc.dt ) ) : no_drop;

  auto derivative = [&]( const Eigen::VectorXd& y ) { return world_derivative( y, ids, sc ); };

  for( std::size_t k = 0;; ++k )
  {
    const double t = static_cast<double>( k ) * sc.dt;
    if( k % sc.log_stride == 0 || k == steps )
    {
      try
      {
        log.snapshots.push_back( make_snapshot( t, ids, state, sc, lyap ) );
      }
      catch( const BelowSafeDistance& e )
      {
        throw CollisionDetected( std::string( "collision at t=" ) + std::to_string( t ) + ": " + e.what(), t,
                                 std::move( log ) );
      }
    }
    if( k == steps )
      break;

    if( k == drop_step )
    {
      const auto it  = std::find( ids.begin(), ids.end(), sc.dropout->agent );
      const auto pos = static_cast<Eigen::Index>( it - ids.begin() );
      Eigen::VectorXd next( state.size() - agent_dim );
      next << state.head( agent_dim * pos ), state.tail( state.size() - agent_dim * ( pos + 1 ) );
      state = std::move( next );
      ids.erase( it );
    }

    try
    {
      state = rk4_step( state, sc.dt, derivative );
    }
    catch( const BelowSafeDistance& e )
    {
      throw CollisionDetected( std::string( "collision at t=" ) + std::to_string( t ) + ": " + e.what(), t,
                               std::move( log ) );
    }

    const double t_next = static_cast<double>( k + 1 ) * sc.dt;
    if( !state.allFinite() || state.cwiseAbs().maxCoeff() > divergence_bound )
      throw Diverged( "state diverged at t=" + std::to_string( t_next ), t_next, std::move( log ) );
    const auto agents = unpack_agents( state );
    if( min_pairwise( positions_of( agents ) ) <= sc.potential.r() )
      throw CollisionDetected( "collision at t=" + std::to_string( t_next ), t_next, std::move( log ) );
  }
  return log;
}

MetricsReport
metrics( const TrajectoryLog& log, const MetricThresholds& thresholds )
{
  if( log.snapshots.empty() )
    throw ValidationError( "metrics need a non-empty log" );
  const auto& snaps = log.snapshots;

  // First time after which pred holds for every remaining sample.
  auto settled_from = [&]( auto&& pred ) -> std::optional<double> {
    std::optional<double> since;
    for( const auto& s : snaps )
    {
      if( !pred( s ) )
        since.reset();
      else if( !since )
        since = s.t;
    }
    return since;
  };

  MetricsReport rep;
  rep.fencing_converged_at
      = settled_from( [&]( const Snapshot& s ) { return s.fencing_error.norm() < thresholds.fencing_error; } );
  rep.velocity_converged_at = settled_from( [&]( const Snapshot& s ) {
    return std::all_of( s.velocity_errors.begin(), s.velocity_errors.end(),
                        [&]( double e ) { return e < thresholds.velocity_error; } );
  } );
  rep.hull_contains_target_from = settled_from( []( const Snapshot& s ) { return s.hull_distance == 0.0; } );

  rep.min_distance_overall = std::numeric_limits<double>::infinity();
  for( const auto& s : snaps )
    rep.min_distance_overall = std::min( rep.min_distance_overall, s.min_pairwise_distance );
  rep.collision = rep.min_distance_overall <= log.safe_distance;

  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> range;
  for( const auto& s : snaps )
  {
    if( !( s.t > thresholds.transient ) )
      continue;
    for( std::size_t i = 0; i < s.ids.size(); ++i )
      for( std::size_t k = i + 1; k < s.ids.size(); ++k )
      {
        const double d     = ( s.agents[i].x - s.agents[k].x ).norm();
        auto [it, fresh]   = range.try_emplace( { s.ids[i], s.ids[k] }, d, d );
        it->second.first   = std::min( it->second.first, d );
        it->second.second  = std::max( it->second.second, d );
        (void)fresh;
      }
  }
  for( const auto& [pair, mm] : range )
    rep.peak_pairwise_oscillation = std::max( rep.peak_pairwise_oscillation, mm.second - mm.first );
  return rep;
}

std::vector<AgentState>
random_initial_agents( std::size_t n, std::uint64_t seed, double half_width, double min_separation )
{
  std::mt19937_64 rng( seed );
  // Explicit conversion keeps the stream identical across standard libraries.
  auto uniform = [&]() {
    const double u = static_cast<double>( rng() >> 11 ) * 0x1.0p-53;
    return -half_width + 2.0 * half_width * u;
  };

  std::vector<AgentState> agents;
  agents.reserve( n );
  std::size_t attempts = 0;
  while( agents.size() < n )
  {
    if( ++attempts > 1000000 )
      throw ValidationError( "could not place agents with the requested separation" );
    const Vec2 p( uniform(), uniform() );
    const bool clear = std::all_of( agents.begin(), agents.end(),
                                    [&]( const AgentState& a ) { return ( a.x - p ).norm() > min_separation; } );
    if( clear )
    {
      AgentState a;
      a.x = p;
      agents.push_back( a );
    }
  }
  return agents;
}

std::vector<Vec2>
square_offsets()
{
  return { Vec2( -7, -7 ), Vec2( 7, -7 ), Vec2( 7, 7 ), Vec2( -7, 7 ) };
}

} // namespace fence
