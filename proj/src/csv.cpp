#include "fence/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "fence/config.hpp"

namespace fence
{

namespace
{

const char* const agent_fields[] = { "x", "y", "vx", "vy", "ex", "ey", "zx", "zy" };
const char* const tail_fields[]  = { "xd", "yd", "vdx", "vdy", "ebar_x", "ebar_y", "hull_dist", "min_dist", "v1" };

std::vector<std::string>
split( const std::string& line )
{
  std::vector<std::string> out;
  std::string              field;
  std::istringstream       in( line );
  while( std::getline( in, field, ',' ) )
    out.push_back( field );
  if( !line.empty() && line.back() == ',' )
    out.emplace_back();
  return out;
}

double
to_double( const std::string& s, std::size_t line )
{
  std::size_t used = 0;
  double      v    = 0;
  try
  {
    v = std::stod( s, &used );
  }
  catch( const std::exception& )
  {
    throw ParseError( line, "invalid number '" + s + "'" );
  }
  if( used != s.size() )
    throw ParseError( line, "invalid number '" + s + "'" );
  return v;
}

} // namespace

std::string
format_number( double v )
{
  char buf[32];
  std::snprintf( buf, sizeof buf, "%.17g", v );
  return buf;
}

void
write_trajectory_csv( std::ostream& os, const TrajectoryLog& log )
{
  os << "t";
  for( std::size_t i = 1; i <= log.n; ++i )
    for( const char* f : agent_fields )
      os << ',' << f << i;
  for( const char* f : tail_fields )
    os << ',' << f;
  os << '\n';

  for( const auto& s : log.snapshots )
  {
    os << format_number( s.t );
    std::size_t next = 0;
    for( std::size_t id = 0; id < log.n; ++id )
    {
      if( next < s.ids.size() && s.ids[next] == id )
      {
        const auto st = s.agents[next++].stacked();
        for( Eigen::Index j = 0; j < st.size(); ++j )
          os << ',' << format_number( st( j ) );
      }
      else
        os << ",,,,,,,,";
    }
    const auto sigma = s.target.sigma();
    for( Eigen::Index j = 0; j < 4; ++j )
      os << ',' << format_number( sigma( j ) );
    os << ',' << format_number( s.fencing_error.x() ) << ',' << format_number( s.fencing_error.y() ) << ','
       << format_number( s.hull_distance ) << ',' << format_number( s.min_pairwise_distance ) << ',';
    if( s.lyapunov_v1 )
      os << format_number( *s.lyapunov_v1 );
    os << '\n';
  }
}

TrajectoryLog
read_trajectory_csv( std::istream& is, double s1, double safe_distance )
{
  std::string header;
  if( !std::getline( is, header ) )
    throw ParseError( 1, "missing header row" );
  const auto cols = split( header );
  if( cols.size() < 1 + std::size( tail_fields ) || ( cols.size() - 1 - std::size( tail_fields ) ) % 8 != 0
      || cols.front() != "t" )
    throw ParseError( 1, "unexpected trajectory header" );

  TrajectoryLog log;
  log.n             = ( cols.size() - 1 - std::size( tail_fields ) ) / 8;
  log.safe_distance = safe_distance;

  std::string line;
  std::size_t line_no = 1;
  while( std::getline( is, line ) )
  {
    ++line_no;
    if( line.empty() )
      continue;
    const auto f = split( line );
    if( f.size() != cols.size() )
      throw ParseError( line_no, "wrong number of fields" );

    Snapshot s;
    s.t = to_double( f[0], line_no );
    for( std::size_t id = 0; id < log.n; ++id )
    {
      const std::size_t base = 1 + 8 * id;
      if( f[base].empty() )
        continue;
      AgentState::Stacked st;
      for( std::size_t j = 0; j < 8; ++j )
        st( static_cast<Eigen::Index>( j ) ) = to_double( f[base + j], line_no );
      s.ids.push_back( id );
      s.agents.push_back( AgentState::from_stacked( st ) );
    }
    const std::size_t base = 1 + 8 * log.n;
    s.target        = TargetState( Vec2( to_double( f[base], line_no ), to_double( f[base + 1], line_no ) ),
                                   Vec2( to_double( f[base + 2], line_no ), to_double( f[base + 3], line_no ) ), s1 );
    s.fencing_error = Vec2( to_double( f[base + 4], line_no ), to_double( f[base + 5], line_no ) );
    s.hull_distance = to_double( f[base + 6], line_no );
    s.min_pairwise_distance = to_double( f[base + 7], line_no );
    if( !f[base + 8].empty() )
      s.lyapunov_v1 = to_double( f[base + 8], line_no );
    for( const auto& a : s.agents )
      s.velocity_errors.push_back( ( a.v - s.target.v_d() ).norm() );
    log.snapshots.push_back( std::move( s ) );
  }
  return log;
}

void
write_metrics_csv( std::ostream& os, const MetricsReport& m )
{
  auto opt = []( const std::optional<double>& v ) { return v ? format_number( *v ) : std::string(); };
  os << "metric,value\n";
  os << "fencing_converged_at," << opt( m.fencing_converged_at ) << '\n';
  os << "velocity_converged_at," << opt( m.velocity_converged_at ) << '\n';
  os << "min_distance_overall," << format_number( m.min_distance_overall ) << '\n';
  os << "collision," << ( m.collision ? "true" : "false" ) << '\n';
  os << "hull_contains_target_from," << opt( m.hull_contains_target_from ) << '\n';
  os << "peak_pairwise_oscillation," << format_number( m.peak_pairwise_oscillation ) << '\n';
}

} // namespace fence
