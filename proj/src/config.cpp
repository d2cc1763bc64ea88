#include "fence/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fence
{

namespace
{

std::string_view
trim( std::string_view s )
{
  while( !s.empty() && std::isspace( static_cast<unsigned char>( s.front() ) ) )
    s.remove_prefix( 1 );
  while( !s.empty() && std::isspace( static_cast<unsigned char>( s.back() ) ) )
    s.remove_suffix( 1 );
  return s;
}

// Tiny recursive reader for numbers and (nested) bracketed lists.
class ValueReader
{
public:
  ValueReader( std::string_view text, std::size_t line )
      : text_( text )
      , line_( line )
  {}

  double
  number()
  {
    skip_space();
    std::size_t end = pos_;
    while( end < text_.size() && ( std::isalnum( static_cast<unsigned char>( text_[end] ) ) || text_[end] == '.'
                                   || text_[end] == '-' || text_[end] == '+' ) )
      ++end;
    const std::string token( text_.substr( pos_, end - pos_ ) );
    if( token.empty() )
      throw ParseError( line_, "expected a number" );
    std::size_t used = 0;
    double      v    = 0;
    try
    {
      v = std::stod( token, &used );
    }
    catch( const std::exception& )
    {
      throw ParseError( line_, "invalid number '" + token + "'" );
    }
    if( used != token.size() || !std::isfinite( v ) )
      throw ParseError( line_, "invalid number '" + token + "'" );
    pos_ = end;
    return v;
  }

  Vec2
  pair()
  {
    expect( '[' );
    const double a = number();
    expect( ',' );
    const double b = number();
    expect( ']' );
    return { a, b };
  }

  std::vector<Vec2>
  pair_list()
  {
    std::vector<Vec2> out;
    expect( '[' );
    skip_space();
    if( peek() == ']' )
    {
      ++pos_;
      return out;
    }
    for( ;; )
    {
      out.push_back( pair() );
      skip_space();
      if( peek() == ',' )
      {
        ++pos_;
        continue;
      }
      expect( ']' );
      return out;
    }
  }

  void
  finish()
  {
    skip_space();
    if( pos_ != text_.size() )
      throw ParseError( line_, "trailing characters after value" );
  }

private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void
  skip_space()
  {
    while( pos_ < text_.size() && std::isspace( static_cast<unsigned char>( text_[pos_] ) ) )
      ++pos_;
  }

  void
  expect( char c )
  {
    skip_space();
    if( peek() != c )
      throw ParseError( line_, std::string( "expected '" ) + c + "'" );
    ++pos_;
  }

  std::string_view text_;
  std::size_t      line_;
  std::size_t      pos_ = 0;
};

std::string
unquote( std::string_view v )
{
  if( v.size() >= 2 && ( ( v.front() == '"' && v.back() == '"' ) || ( v.front() == '\'' && v.back() == '\'' ) ) )
    return std::string( v.substr( 1, v.size() - 2 ) );
  return std::string( v );
}

std::size_t
count( double v, std::size_t line, std::string_view key, std::size_t min )
{
  if( v != std::floor( v ) || v < static_cast<double>( min ) || v > 1e12 )
    throw ParseError( line, std::string( key ) + " must be an integer >= " + std::to_string( min ) );
  return static_cast<std::size_t>( v );
}

} // namespace

RunConfig
parse_config_text( std::string_view text )
{
  RunConfig             cfg;
  std::set<std::string> seen;
  std::size_t           line_no = 0;
  std::istringstream    in{ std::string( text ) };
  std::string           raw;

  while( std::getline( in, raw ) )
  {
    ++line_no;
    std::string_view line = raw;
    if( const auto hash = line.find( '#' ); hash != std::string_view::npos )
      line = line.substr( 0, hash );
    line = trim( line );
    if( line.empty() )
      continue;

    const auto eq = line.find( '=' );
    if( eq == std::string_view::npos )
      throw ParseError( line_no, "expected 'key = value'" );
    const std::string      key( trim( line.substr( 0, eq ) ) );
    const std::string_view value = trim( line.substr( eq + 1 ) );
    if( key.empty() || value.empty() )
      throw ParseError( line_no, "expected 'key = value'" );
    if( !seen.insert( key ).second )
      throw ParseError( line_no, "duplicate key '" + key + "'" );

    ValueReader rd( value, line_no );
    auto        scalar = [&] {
      const double v = rd.number();
      rd.finish();
      return v;
    };
    auto pair = [&] {
      const Vec2 v = rd.pair();
      rd.finish();
      return v;
    };
    auto pairs = [&] {
      auto v = rd.pair_list();
      rd.finish();
      return v;
    };

    if( key == "n" )
      cfg.n = count( scalar(), line_no, key, 1 );
    else if( key == "s1" )
      cfg.s1 = scalar();
    else if( key == "k1" )
      cfg.k1 = scalar();
    else if( key == "k2" )
      cfg.k2 = scalar();
    else if( key == "k3" )
      cfg.k3 = scalar();
    else if( key == "k4" )
      cfg.k4 = scalar();
    else if( key == "k5" )
      cfg.k5 = scalar();
    else if( key == "r" )
      cfg.r = scalar();
    else if( key == "R" )
      cfg.R = scalar();
    else if( key == "dt" )
      cfg.dt = scalar();
    else if( key == "t_end" )
      cfg.t_end = scalar();
    else if( key == "dropout_agent" )
      cfg.dropout_agent = count( scalar(), line_no, key, 1 );
    else if( key == "dropout_time" )
      cfg.dropout_time = scalar();
    else if( key == "seed" )
      cfg.seed = count( scalar(), line_no, key, 0 );
    else if( key == "log_stride" )
      cfg.log_stride = count( scalar(), line_no, key, 1 );
    else if( key == "xd0" )
      cfg.xd0 = pair();
    else if( key == "vd0" )
      cfg.vd0 = pair();
    else if( key == "offsets" )
      cfg.offsets = pairs();
    else if( key == "positions" )
      cfg.positions = pairs();
    else if( key == "velocities" )
      cfg.velocities = pairs();
    else if( key == "out" )
      cfg.out = unquote( value );
    else if( key == "controller" )
    {
      const std::string kind = unquote( value );
      if( kind == "label_free" )
        cfg.controller = ControllerKind::label_free;
      else if( kind == "label_fixed" )
        cfg.controller = ControllerKind::label_fixed;
      else
        throw ParseError( line_no, "controller must be label_free or label_fixed" );
    }
    else
      throw ParseError( line_no, "unknown key '" + key + "'" );
  }

  to_scenario( cfg ).validate();
  return cfg;
}

RunConfig
parse_config( const std::filesystem::path& path )
{
  std::ifstream in( path );
  if( !in )
    throw ValidationError( "cannot open config file " + path.string() );
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text( buf.str() );
}

Scenario
to_scenario( const RunConfig& cfg )
{
  if( cfg.dropout_agent.has_value() != cfg.dropout_time.has_value() )
    throw ValidationError( "dropout_agent and dropout_time must be given together" );
  if( !cfg.positions.empty() && cfg.positions.size() != cfg.n )
    throw ValidationError( "positions must list exactly n entries" );
  if( !cfg.velocities.empty() && cfg.velocities.size() != cfg.n )
    throw ValidationError( "velocities must list exactly n entries" );

  const PotentialParams pp( cfg.r, cfg.R );
  std::vector<AgentState> agents;
  if( cfg.positions.empty() )
    agents = random_initial_agents( cfg.n, cfg.seed, 20.0, 2.0 * cfg.r );
  else
  {
    agents.resize( cfg.n );
    for( std::size_t i = 0; i < cfg.n; ++i )
      agents[i].x = cfg.positions[i];
  }
  for( std::size_t i = 0; i < cfg.velocities.size(); ++i )
    agents[i].v = cfg.velocities[i];

  Scenario sc{ .initial_agents = std::move( agents ),
               .target0        = TargetState( cfg.xd0, cfg.vd0, cfg.s1 ),
               .gains          = Gains( cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5 ),
               .potential      = pp,
               .dt             = cfg.dt,
               .t_end          = cfg.t_end,
               .dropout        = std::nullopt,
               .controller     = cfg.controller,
               .offsets        = cfg.offsets,
               .log_stride     = cfg.log_stride };
  if( cfg.dropout_agent )
  {
    if( *cfg.dropout_agent > cfg.n )
      throw ValidationError( "dropout_agent out of range (agents are numbered from 1)" );
    sc.dropout = Dropout{ *cfg.dropout_agent - 1, *cfg.dropout_time };
  }
  if( sc.controller == ControllerKind::label_fixed && sc.offsets.empty() && cfg.n == 4 )
    sc.offsets = square_offsets();
  sc.validate();
  return sc;
}

} // namespace fence
