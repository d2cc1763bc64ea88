#pragma once

#include <iosfwd>
#include <string>

#include "fence/simulator.hpp"

namespace fence
{

// Comma-separated, '.' decimal point, mandatory header row. Numbers are written
// with 17 significant digits so a round trip is exact.
//
// trajectory.csv columns: t, then for each agent i = 1..n
//   xi, yi, vxi, vyi, exi, eyi, zxi, zyi   (position, velocity, eps, zeta)
// then xd, yd, vdx, vdy, ebar_x, ebar_y, hull_dist, min_dist, v1.
// Fields of agents that have dropped out, and v1 when not tracked, are empty.
void write_trajectory_csv( std::ostream& os, const TrajectoryLog& log );

// Inverse of write_trajectory_csv. The exosystem parameter and safe distance are
// not part of the file and must be supplied.
TrajectoryLog read_trajectory_csv( std::istream& is, double s1 = 0.0, double safe_distance = 0.0 );

// Two columns: metric,value. Unset optional times are written empty.
void write_metrics_csv( std::ostream& os, const MetricsReport& m );

std::string format_number( double v );

} // namespace fence
