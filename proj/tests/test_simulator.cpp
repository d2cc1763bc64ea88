#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "fence/csv.hpp"
#include "fence/simulator.hpp"
#include "oracles.hpp"

using namespace fence;

namespace
{

Scenario
reference_scenario( std::uint64_t seed, double t_end = 20.0 )
{
  Scenario sc{ .initial_agents = random_initial_agents( 4, seed ),
               .target0        = TargetState( Vec2( 2, 8 ), Vec2( 0.5, 0.5 ), -0.1 ),
               .gains          = Gains( 2.2, 6, 0.1, 3, 20 ),
               .potential      = PotentialParams( 2, 10 ),
               .dt             = 0.01,
               .t_end          = t_end,
               .dropout        = std::nullopt,
               .controller     = ControllerKind::label_free,
               .offsets        = {},
               .log_stride     = 1 };
  return sc;
}

} // namespace

TEST_CASE( "world packing round trip" )
{
  const auto        agents = random_initial_agents( 3, 4 );
  const TargetState t( Vec2( 1, 2 ), Vec2( 3, 4 ), -0.5 );
  const auto        state = pack_world( agents, t );
  CHECK( state.size() == 3 * 8 + 4 );
  CHECK( unpack_agents( state ) == agents );
  CHECK( unpack_target( state, -0.5 ) == t );
}

TEST_CASE( "world derivative for an isolated agent" )
{
  Scenario                sc = reference_scenario( 1 );
  const AgentState        a{ Vec2( 1, 2 ), Vec2( 3, 4 ), Vec2( 5, 6 ), Vec2( 7, 8 ) };
  sc.initial_agents        = { a };
  const std::vector<std::size_t> ids{ 0 };
  const auto              d = world_derivative( pack_world( sc.initial_agents, sc.target0 ), ids, sc );
  CHECK( d.segment<2>( 0 ) == a.v );
  CHECK( d.segment<2>( 2 ).isApprox( -2.2 * a.x - 6 * a.v - 0.1 * a.eps - 3 * a.zeta ) );
  CHECK( d.segment<2>( 4 ) == a.zeta );
  CHECK( d.segment<2>( 6 ).isApprox( -0.1 * a.eps + a.x - Vec2( 2, 8 ) ) );
  CHECK( d.segment<2>( 8 ) == Vec2( 0.5, 0.5 ) );
  CHECK( d.segment<2>( 10 ).isApprox( -0.1 * Vec2( 2, 8 ) ) );
}

TEST_CASE( "rk4 is fourth order" )
{
  auto f     = []( const Eigen::VectorXd& y ) { return Eigen::VectorXd( -y ); };
  auto error = [&]( double dt ) {
    Eigen::VectorXd y = Eigen::VectorXd::Ones( 1 );
    for( int k = 0; k < static_cast<int>( std::lround( 1 / dt ) ); ++k )
      y = rk4_step( y, dt, f );
    return std::abs( y( 0 ) - std::exp( -1.0 ) );
  };
  const double order = std::log2( error( 0.1 ) / error( 0.05 ) );
  CHECK( order == doctest::Approx( 4 ).epsilon( 0.05 ) );
}

TEST_CASE( "target inside the simulation follows the closed form" )
{
  const auto log = run( reference_scenario( 1 ) );
  REQUIRE( log.snapshots.size() == 2001 );
  for( std::size_t k : { 0u, 700u, 2000u } )
  {
    const auto& s = log.snapshots[k];
    CHECK( s.t == static_cast<double>( k ) * 0.01 );
    auto [x, v] = oracle::integrate_target( Vec2( 2, 8 ), Vec2( 0.5, 0.5 ), -0.1, s.t );
    CHECK( ( s.target.x_d() - x ).norm() < 1e-7 );
    CHECK( ( s.target.v_d() - v ).norm() < 1e-7 );
  }
}

TEST_CASE( "logged diagnostics agree with the brute-force oracles" )
{
  auto sc       = reference_scenario( 3 );
  sc.log_stride = 50;
  const auto log = run( sc );
  CHECK( log.snapshots.size() == 41 );
  for( const auto& s : log.snapshots )
  {
    std::vector<Vec2> pos;
    Vec2              centroid = Vec2::Zero();
    for( const auto& a : s.agents )
    {
      pos.push_back( a.x );
      centroid += a.x / static_cast<double>( s.agents.size() );
    }
    CHECK( ( s.fencing_error - ( centroid - s.target.x_d() ) ).norm() < 1e-12 );
    CHECK( s.hull_distance == doctest::Approx( oracle::hull_distance( s.target.x_d(), pos ) ).epsilon( 1e-9 ) );
    CHECK( s.min_pairwise_distance > 2 );
  }
}

TEST_CASE( "dropout removes the agent at the nearest step" )
{
  auto sc     = reference_scenario( 1 );
  sc.dropout  = Dropout{ 2, 5.004 };
  const auto log = run( sc );
  for( const auto& s : log.snapshots )
  {
    if( s.t < 5.0 - 1e-9 )
      CHECK( s.ids.size() == 4 );
    else if( s.t > 5.0 + 1e-9 )
      CHECK( s.ids == std::vector<std::size_t>{ 0, 1, 3 } );
  }
  CHECK( log.snapshots[500].ids.size() == 4 );
  CHECK( log.snapshots[501].ids.size() == 3 );
}

TEST_CASE( "relabelling agents permutes the log bit for bit" )
{
  const auto             base = reference_scenario( 3, 10.0 );
  const auto             ref  = run( base );
  std::vector<std::size_t> perm( 4 );
  std::iota( perm.begin(), perm.end(), std::size_t{ 0 } );
  std::mt19937_64 rng( 9 );
  for( int trial = 0; trial < 3; ++trial )
  {
    std::shuffle( perm.begin(), perm.end(), rng );
    auto sc = base;
    for( std::size_t j = 0; j < 4; ++j )
      sc.initial_agents[j] = base.initial_agents[perm[j]];
    const auto log = run( sc );
    REQUIRE( log.snapshots.size() == ref.snapshots.size() );
    bool identical = true;
    for( std::size_t k = 0; k < log.snapshots.size(); ++k )
    {
      for( std::size_t j = 0; j < 4; ++j )
        identical = identical && log.snapshots[k].agents[j] == ref.snapshots[k].agents[perm[j]];
      identical = identical && log.snapshots[k].fencing_error == ref.snapshots[k].fencing_error;
    }
    CHECK( identical );
  }
}

TEST_CASE( "collision aborts with the partial log" )
{
  auto sc           = reference_scenario( 1, 5.0 );
  sc.initial_agents = { AgentState{ Vec2( -3, 0 ), Vec2( 40, 0 ), Vec2::Zero(), Vec2::Zero() },
                        AgentState{ Vec2( 3, 0 ), Vec2( -40, 0 ), Vec2::Zero(), Vec2::Zero() } };
  try
  {
    run( sc );
    FAIL( "expected a collision" );
  }
  catch( const CollisionDetected& e )
  {
    CHECK( e.time() > 0 );
    CHECK( e.time() < 1 );
    CHECK_FALSE( e.partial_log().snapshots.empty() );
  }
}

TEST_CASE( "divergence aborts" )
{
  auto sc             = reference_scenario( 1, 1.0 );
  sc.initial_agents[0].v = Vec2( 2e9, 0 );
  CHECK_THROWS_AS( run( sc ), Diverged );
}

TEST_CASE( "scenario validation" )
{
  auto close           = reference_scenario( 1 );
  close.initial_agents = { AgentState{}, AgentState{ Vec2( 1, 0 ) } };
  CHECK_THROWS_AS( run( close ), ValidationError );

  auto fixed       = reference_scenario( 1 );
  fixed.controller = ControllerKind::label_fixed;
  CHECK_THROWS_AS( run( fixed ), ValidationError );

  auto bad_dt = reference_scenario( 1 );
  bad_dt.dt   = 0;
  CHECK_THROWS_AS( run( bad_dt ), ValidationError );

  auto bad_gains  = reference_scenario( 1 );
  bad_gains.gains = Gains( 1, 0.5, 5, 0.1, 1 );
  CHECK_THROWS_AS( run( bad_gains ), ValidationError );
}

TEST_CASE( "random starts are seeded and separated" )
{
  const auto a = random_initial_agents( 6, 42, 20, 4 );
  CHECK( a == random_initial_agents( 6, 42, 20, 4 ) );
  CHECK_FALSE( a == random_initial_agents( 6, 43, 20, 4 ) );
  for( std::size_t i = 0; i < a.size(); ++i )
  {
    CHECK( a[i].x.cwiseAbs().maxCoeff() <= 20 );
    for( std::size_t k = i + 1; k < a.size(); ++k )
      CHECK( ( a[i].x - a[k].x ).norm() > 4 );
  }
}

TEST_CASE( "metrics on a synthetic log" )
{
  TrajectoryLog log;
  log.n             = 2;
  log.safe_distance = 2;
  for( int k = 0; k <= 10; ++k )
  {
    Snapshot s;
    s.t                     = k;
    s.ids                   = { 0, 1 };
    s.agents                = { AgentState{ Vec2( 0, 0 ) }, AgentState{ Vec2( 3.0 + ( k % 2 ), 0 ) } };
    s.fencing_error         = Vec2( k < 4 ? 1.0 : 0.01, 0 );
    s.hull_distance         = k < 6 ? 1.0 : 0.0;
    s.min_pairwise_distance = 3.0 + ( k % 2 );
    s.velocity_errors       = { k < 8 ? 1.0 : 0.0, 0.0 };
    log.snapshots.push_back( s );
  }
  const auto m = metrics( log );
  CHECK( m.fencing_converged_at == 4.0 );
  CHECK( m.hull_contains_target_from == 6.0 );
  CHECK( m.velocity_converged_at == 8.0 );
  CHECK( m.min_distance_overall == 3.0 );
  CHECK_FALSE( m.collision );
  CHECK( m.peak_pairwise_oscillation == doctest::Approx( 1.0 ) );
}

TEST_CASE( "trajectory CSV round trip" )
{
  auto sc       = reference_scenario( 1 );
  sc.log_stride = 100;
  sc.dropout    = Dropout{ 0, 10 };
  const auto log = run( sc );
  std::stringstream buf;
  write_trajectory_csv( buf, log );
  const auto back = read_trajectory_csv( buf, -0.1, 2.0 );
  REQUIRE( back.snapshots.size() == log.snapshots.size() );
  for( std::size_t k = 0; k < log.snapshots.size(); ++k )
  {
    const auto& a = log.snapshots[k];
    const auto& b = back.snapshots[k];
    CHECK( a.t == b.t );
    CHECK( a.ids == b.ids );
    CHECK( a.agents == b.agents );
    CHECK( a.target == b.target );
    CHECK( a.hull_distance == b.hull_distance );
    CHECK( a.lyapunov_v1 == b.lyapunov_v1 );
  }
  std::stringstream again;
  write_trajectory_csv( again, back );
  std::stringstream first;
  write_trajectory_csv( first, log );
  CHECK( again.str() == first.str() );
}
