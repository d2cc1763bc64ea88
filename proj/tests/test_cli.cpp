#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fence/commands.hpp"
#include "fence/csv.hpp"

using namespace fence;
namespace fs = std::filesystem;

namespace
{

struct Invocation
{
  int         code;
  std::string out;
  std::string err;
};

Invocation
invoke( std::vector<std::string> args )
{
  args.insert( args.begin(), "fence-sim" );
  std::vector<char*> argv;
  for( auto& a : args )
    argv.push_back( a.data() );
  std::ostringstream out, err;
  const int          code = fence_sim_main( static_cast<int>( argv.size() ), argv.data(), out, err );
  return { code, out.str(), err.str() };
}

fs::path
scratch_dir( const std::string& name )
{
  const fs::path dir = fs::temp_directory_path() / ( "fence_cli_" + name );
  fs::remove_all( dir );
  fs::create_directories( dir );
  return dir;
}

fs::path
write_config( const fs::path& dir, const std::string& text )
{
  const fs::path p = dir / "config.toml";
  std::ofstream( p ) << text;
  return p;
}

std::size_t
count_lines( const fs::path& p )
{
  std::ifstream in( p );
  std::size_t   n = 0;
  for( std::string line; std::getline( in, line ); )
    ++n;
  return n;
}

} // namespace

TEST_CASE( "config parsing" )
{
  const auto cfg = parse_config_text( "# comment\nn = 3\ns1 = 0   # trailing\nk2 = 6.5\nxd0 = [1, -2]\n"
                                      "controller = \"label_free\"\nout = 'runs/a'\n" );
  CHECK( cfg.n == 3 );
  CHECK( cfg.s1 == 0 );
  CHECK( cfg.k2 == 6.5 );
  CHECK( cfg.xd0 == Vec2( 1, -2 ) );
  CHECK( cfg.out == "runs/a" );

  try
  {
    parse_config_text( "n = 4\n\nbogus = 1\n" );
    FAIL( "expected ParseError" );
  }
  catch( const ParseError& e )
  {
    CHECK( e.line() == 3 );
  }
  CHECK_THROWS_AS( parse_config_text( "n = 4\nn = 5\n" ), ParseError );
  CHECK_THROWS_AS( parse_config_text( "k1 = abc\n" ), ParseError );
  CHECK_THROWS_AS( parse_config_text( "xd0 = [1, 2\n" ), ParseError );
  CHECK_THROWS_AS( parse_config_text( "n = 2.5\n" ), ParseError );
  CHECK_THROWS_AS( parse_config_text( "s1 = 0.2\n" ), ValidationError );
  CHECK_THROWS_AS( parse_config_text( "n = 2\npositions = [[0,0],[1,0]]\n" ), ValidationError );
  CHECK_THROWS_AS( parse_config_text( "dropout_agent = 2\n" ), ValidationError );
  CHECK_THROWS_AS( parse_config_text( "dropout_agent = 9\ndropout_time = 3\n" ), ValidationError );
  CHECK_THROWS_AS( parse_config_text( "n = 3\ncontroller = label_fixed\n" ), ValidationError );
}

TEST_CASE( "config maps to a scenario" )
{
  const auto sc = to_scenario( parse_config_text( "controller = label_fixed\ndropout_agent = 4\ndropout_time = 20\n" ) );
  CHECK( sc.n() == 4 );
  REQUIRE( sc.dropout );
  CHECK( sc.dropout->agent == 3 );
  CHECK( sc.offsets == square_offsets() );
  CHECK( sc.initial_agents == random_initial_agents( 4, default_seed, 20, 4 ) );
}

TEST_CASE( "check-gains exit codes" )
{
  const auto dir = scratch_dir( "gains" );
  auto       r   = invoke( { "check-gains", write_config( dir, "k2 = 6\n" ).string() } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "fencing_holds=true" ) != std::string::npos );
  CHECK( r.out.find( "c2_holds=false" ) != std::string::npos );
  CHECK( r.out.find( "c2_equality_residual=-27" ) != std::string::npos );

  r = invoke( { "check-gains", write_config( dir, "k1 = 1\nk2 = 3\nk3 = 1\nk4 = 3\n" ).string() } );
  CHECK( r.code == 2 );
  CHECK( r.err.find( "DegenerateGains" ) != std::string::npos );

  r = invoke( { "check-gains", write_config( dir, "k1 = 1\nk2 = 3\nk3 = 5\nk4 = 1\n" ).string() } );
  CHECK( r.code == 1 );
}

TEST_CASE( "verify reports the regulator and Lyapunov data" )
{
  const auto dir = scratch_dir( "verify" );
  auto       r   = invoke( { "verify", write_config( dir, "k2 = 33\n" ).string() } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "routh_hurwitz=true" ) != std::string::npos );
  CHECK( r.out.find( "gamma=10" ) != std::string::npos );
  CHECK( r.out.find( "P_positive_definite=true" ) != std::string::npos );

  r = invoke( { "verify", write_config( dir, "k2 = 6\n" ).string() } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "P=[[" ) != std::string::npos );
  CHECK( r.out.find( "c2_holds=false" ) != std::string::npos );
}

TEST_CASE( "run writes trajectory and metrics" )
{
  const auto dir = scratch_dir( "run" );
  const auto cfg = write_config( dir, "t_end = 5\nlog_stride = 50\n" );
  auto       r   = invoke( { "run", cfg.string(), "--out", ( dir / "out" ).string() } );
  CHECK( r.code == 0 );
  CHECK( count_lines( dir / "out" / "trajectory.csv" ) == 12 );
  CHECK( fs::exists( dir / "out" / "metrics.csv" ) );

  std::ifstream in( dir / "out" / "trajectory.csv" );
  std::string   header;
  std::getline( in, header );
  CHECK( header.rfind( "t,x1,y1,vx1,vy1,ex1,ey1,zx1,zy1,x2,", 0 ) == 0 );
  CHECK( header.ends_with( ",xd,yd,vdx,vdy,ebar_x,ebar_y,hull_dist,min_dist,v1" ) );

  setenv( "FENCE_SIM_LOG_STRIDE", "100", 1 );
  r = invoke( { "run", cfg.string(), "--out", ( dir / "strided" ).string() } );
  unsetenv( "FENCE_SIM_LOG_STRIDE" );
  CHECK( r.code == 0 );
  CHECK( count_lines( dir / "strided" / "trajectory.csv" ) == 7 );
}

TEST_CASE( "run reports collisions with a partial trajectory" )
{
  const auto dir = scratch_dir( "collide" );
  const auto cfg = write_config( dir, "n = 2\nt_end = 5\npositions = [[-3, 0], [3, 0]]\n"
                                      "velocities = [[40, 0], [-40, 0]]\nlog_stride = 1\n" );
  const auto r = invoke( { "run", cfg.string(), "--out", dir.string() } );
  CHECK( r.code == 3 );
  CHECK( count_lines( dir / "trajectory.csv" ) >= 2 );
}

TEST_CASE( "run exit codes for bad input" )
{
  const auto dir = scratch_dir( "bad" );
  CHECK( invoke( { "run", write_config( dir, "nonsense\n" ).string() } ).code == 5 );
  CHECK( invoke( { "run", write_config( dir, "r = 12\n" ).string() } ).code == 2 );
  CHECK( invoke( { "run", ( dir / "missing.toml" ).string() } ).code == 2 );
  CHECK( invoke( { "frobnicate" } ).code == 5 );
  CHECK( invoke( { "run", write_config( dir, "n = 2\npositions = [[0, 0], [0, 0.1]]\n" ).string() } ).code == 2 );
  CHECK( invoke( { "run", write_config( dir, "t_end = 1\nvelocities = [[3e9,0],[0,0],[0,0],[0,0]]\n" ).string(),
                   "--out", dir.string() } )
             .code
         == 4 );
}

TEST_CASE( "compare writes both trajectories and a summary" )
{
  const auto dir = scratch_dir( "compare" );
  const auto cfg = write_config( dir, "t_end = 30\n" );
  const auto r   = invoke( { "compare", cfg.string(), "--out", dir.string() } );
  CHECK( r.code == 0 );
  CHECK( fs::exists( dir / "trajectory_label_free.csv" ) );
  CHECK( fs::exists( dir / "trajectory_label_fixed.csv" ) );
  CHECK( fs::exists( dir / "comparison.csv" ) );
  CHECK( r.out.find( "oscillation_ratio=" ) != std::string::npos );
}

TEST_CASE( "identical runs compare with ratio one" )
{
  auto cfg  = parse_config_text( "t_end = 30\n" );
  auto log  = run( to_scenario( cfg ) );
  auto summ = summarize_comparison( log, log );
  CHECK( summ.oscillation_ratio == 1.0 );
  CHECK( summ.convergence_time_difference.value_or( 0.0 ) == 0.0 );
}
