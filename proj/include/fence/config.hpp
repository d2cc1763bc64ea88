#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fence/simulator.hpp"

namespace fence
{

// Malformed configuration text; carries the 1-based line number.
class ParseError : public Error
{
public:
  ParseError( std::size_t line, const std::string& what )
      : Error( "line " + std::to_string( line ) + ": " + what )
      , line_( line )
  {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

inline constexpr std::uint64_t default_seed = 1;

// Flat key/value run configuration. Defaults reproduce the four-agent
// periodic-target scenario (R = 10, r = 2, s1 = -0.1, k = 2.2, 6, 0.1, 3, 20).
struct RunConfig
{
  std::size_t                n     = 4;
  double                     s1    = -0.1;
  double                     k1    = 2.2;
  double                     k2    = 6.0;
  double                     k3    = 0.1;
  double                     k4    = 3.0;
  double                     k5    = 20.0;
  double                     r     = 2.0;
  double                     R     = 10.0;
  double                     dt    = 0.01;
  double                     t_end = 200.0;
  std::optional<std::size_t> dropout_agent; // 1-based
  std::optional<double>      dropout_time;
  ControllerKind             controller = ControllerKind::label_free;
  std::vector<Vec2>          offsets;
  std::uint64_t              seed = default_seed;
  std::string                out  = ".";
  Vec2                       xd0{ 2.0, 8.0 };
  Vec2                       vd0{ 0.5, 0.5 };
  std::size_t                log_stride = 10;
  std::vector<Vec2>          positions;  // explicit starts; random from seed when empty
  std::vector<Vec2>          velocities; // zero when empty
};

// Parses and validates. Throws ParseError for syntax problems and unknown keys,
// ValidationError for violated invariants (including C1 on the initial positions).
RunConfig parse_config_text( std::string_view text );
RunConfig parse_config( const std::filesystem::path& path );

// Builds the scenario described by the config; throws ValidationError.
Scenario to_scenario( const RunConfig& cfg );

} // namespace fence
